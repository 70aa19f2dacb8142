#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace hazret {

inline constexpr const char* kVersion = "0.1.0";

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;  // wins over the config master seed
  unsigned threads = 0;                        // 0 picks the hardware count
  bool emit_svg = false;
};

// Runs one configured experiment end to end: parse and validate the JSON
// config, dispatch on its "kind", and write results.csv and results.json
// (plus histogram.svg when requested and the kind produces a distribution
// pair) under out_dir. Reports embed the config hash, the master seed, the
// library version, censored counts, and TV enclosures. Identical config and
// seed give byte-identical report files.
// Returns 0 on success, 2 on a configuration or validation error, 3 when
// the run finished but is flagged (censoring above the 10% rule, a breached
// tolerance, or truncated recurrence radii).
int run_experiment(const CliOptions& opts);

// Flag-parsing entry point: --config PATH, --out DIR, --seed N,
// --threads N, --emit-svg. argv[0] is the program name. Returns like
// run_experiment, with 2 on unknown or malformed flags.
int run_cli(int argc, const char* const* argv);

}  // namespace hazret
