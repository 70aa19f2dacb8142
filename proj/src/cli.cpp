#include "hazret/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hazret/balls.hpp"
#include "hazret/geolaw.hpp"
#include "hazret/measures.hpp"
#include "hazret/montecarlo.hpp"
#include "hazret/oracle.hpp"
#include "hazret/pmf.hpp"
#include "hazret/tower.hpp"
#include "hazret/word.hpp"

namespace hazret {
namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Logging: HAZRET_LOG in {off, error, warn, info, debug}, default warn.

enum class LogLevel { Off = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

LogLevel log_threshold() {
  const char* e = std::getenv("HAZRET_LOG");
  if (!e) return LogLevel::Warn;
  const std::string v(e);
  if (v == "off") return LogLevel::Off;
  if (v == "error") return LogLevel::Error;
  if (v == "warn") return LogLevel::Warn;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

__attribute__((format(printf, 2, 3)))
void logf(LogLevel at, const char* fmt, ...) {
  if (at > log_threshold()) return;
  const char* tag = at == LogLevel::Error  ? "error"
                    : at == LogLevel::Warn ? "warn"
                    : at == LogLevel::Info ? "info"
                                           : "debug";
  std::fprintf(stderr, "hazret[%s] ", tag);
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

// ---------------------------------------------------------------------------
// Config access. Every failure names the offending member by JSON pointer.

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& path, const std::string& msg)
      : std::runtime_error(path + ": " + msg) {}
};

const json& need_member(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "/" + key, "missing required member");
  return *it;
}

void check_members(const json& obj, const std::string& path,
                   std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(path + "/" + it.key(), "unknown member");
  }
}

double need_number(const json& obj, const std::string& path, const char* key, double lo,
                   double hi) {
  const json& v = need_member(obj, path, key);
  if (!v.is_number()) throw ConfigError(path + "/" + key, "expected a number");
  const double x = v.get<double>();
  if (!(x >= lo && x <= hi)) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "expected a number in [%g, %g]", lo, hi);
    throw ConfigError(path + "/" + key, msg);
  }
  return x;
}

// Open-interval probability, the common case for measures and mark rates.
double need_prob(const json& obj, const std::string& path, const char* key) {
  const json& v = need_member(obj, path, key);
  if (!v.is_number()) throw ConfigError(path + "/" + key, "expected a number");
  const double x = v.get<double>();
  if (!(x > 0.0 && x < 1.0))
    throw ConfigError(path + "/" + key, "expected a number in (0, 1)");
  return x;
}

std::uint64_t need_uint(const json& obj, const std::string& path, const char* key,
                        std::uint64_t lo, std::uint64_t hi) {
  const json& v = need_member(obj, path, key);
  if (!v.is_number_unsigned())
    throw ConfigError(path + "/" + key, "expected an unsigned integer");
  const std::uint64_t x = v.get<std::uint64_t>();
  if (x < lo || x > hi) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "expected an integer in [%llu, %llu]",
                  static_cast<unsigned long long>(lo), static_cast<unsigned long long>(hi));
    throw ConfigError(path + "/" + key, msg);
  }
  return x;
}

std::int64_t need_int64(const json& obj, const std::string& path, const char* key,
                        std::int64_t lo, std::int64_t hi) {
  const json& v = need_member(obj, path, key);
  if (!v.is_number_integer()) throw ConfigError(path + "/" + key, "expected an integer");
  const std::int64_t x = v.get<std::int64_t>();
  if (x < lo || x > hi) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "expected an integer in [%lld, %lld]",
                  static_cast<long long>(lo), static_cast<long long>(hi));
    throw ConfigError(path + "/" + key, msg);
  }
  return x;
}

std::string need_string(const json& obj, const std::string& path, const char* key) {
  const json& v = need_member(obj, path, key);
  if (!v.is_string()) throw ConfigError(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

std::optional<double> opt_number(const json& obj, const std::string& path, const char* key,
                                 double lo, double hi) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  return need_number(obj, path, key, lo, hi);
}

std::optional<std::uint64_t> opt_uint(const json& obj, const std::string& path, const char* key,
                                      std::uint64_t lo, std::uint64_t hi) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  return need_uint(obj, path, key, lo, hi);
}

std::vector<Word> need_words(const json& obj, const std::string& path, const char* key,
                             std::size_t alphabet) {
  const json& arr = need_member(obj, path, key);
  const std::string base = path + "/" + key;
  if (!arr.is_array() || arr.empty())
    throw ConfigError(base, "expected a nonempty array of words");
  std::vector<Word> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& w = arr[i];
    const std::string wp = base + "/" + std::to_string(i);
    if (!w.is_array() || w.empty())
      throw ConfigError(wp, "expected a nonempty array of symbols");
    if (w.size() > 256) throw ConfigError(wp, "word longer than 256 symbols");
    Word word;
    word.reserve(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (!w[j].is_number_unsigned())
        throw ConfigError(wp + "/" + std::to_string(j), "expected an unsigned integer symbol");
      const std::uint64_t s = w[j].get<std::uint64_t>();
      if (s >= alphabet)
        throw ConfigError(wp + "/" + std::to_string(j),
                          "symbol out of range for alphabet size " + std::to_string(alphabet));
      word.push_back(static_cast<Symbol>(s));
    }
    out.push_back(std::move(word));
  }
  return out;
}

ProcessModel parse_process_model(const json& cfg) {
  // model_from_json_text already reports member paths like "model/probs/0".
  return model_from_json_text(need_member(cfg, "", "model").dump());
}

IntervalMapModel parse_map_model(const json& cfg) {
  const json& m = need_member(cfg, "", "model");
  check_members(m, "/model", {"type", "digit_cap"});
  const std::string t = need_string(m, "/model", "type");
  IntervalMapModel map;
  if (t == "doubling") {
    if (m.contains("digit_cap"))
      throw ConfigError("/model/digit_cap", "only valid for the gauss map");
    map.kind = MapKind::Doubling;
  } else if (t == "gauss") {
    map.kind = MapKind::Gauss;
    map.digit_cap =
        static_cast<std::uint32_t>(opt_uint(m, "/model", "digit_cap", 2, 4096).value_or(64));
  } else {
    throw ConfigError("/model/type", "expected \"doubling\" or \"gauss\"");
  }
  return map;
}

struct McParams {
  std::size_t samples = 0;
  std::optional<std::size_t> horizon;
  std::optional<double> max_tv_lower;
};

McParams parse_mc(const json& cfg, bool with_horizon) {
  const json& mc = need_member(cfg, "", "mc");
  if (with_horizon)
    check_members(mc, "/mc", {"samples", "horizon", "max_tv_lower"});
  else
    check_members(mc, "/mc", {"samples", "max_tv_lower"});
  McParams out;
  out.samples = static_cast<std::size_t>(need_uint(mc, "/mc", "samples", 1, 1000000000ULL));
  if (with_horizon)
    if (const auto h = opt_uint(mc, "/mc", "horizon", 1, 10000000000ULL))
      out.horizon = static_cast<std::size_t>(*h);
  out.max_tv_lower = opt_number(mc, "/mc", "max_tv_lower", 0.0, 1.0);
  return out;
}

std::optional<std::size_t> parse_oracle_k(const json& cfg) {
  if (!cfg.is_object() || !cfg.contains("oracle")) return std::nullopt;
  const json& o = cfg.at("oracle");
  check_members(o, "/oracle", {"K"});
  if (const auto k = opt_uint(o, "/oracle", "K", 1, 100000))
    return static_cast<std::size_t>(*k);
  return std::nullopt;
}

// Smallest K with (1-rho)^{K+1} <= budget, clamped to [lo, hi]. Used to size
// reference laws so truncation tails stay below reporting tolerances.
std::size_t tail_budget_k(double rho, double budget, std::size_t lo, std::size_t hi) {
  const double l1 = std::log1p(-rho);
  if (!(l1 < 0.0)) return hi;
  const double need = std::ceil(std::log(budget) / l1);
  if (!(need > static_cast<double>(lo))) return lo;
  if (need >= static_cast<double>(hi)) return hi;
  return static_cast<std::size_t>(need);
}

bool tolerance_breached(const std::optional<double>& limit, const TvInterval& tv) {
  return limit.has_value() && tv.lower > *limit;
}

// ---------------------------------------------------------------------------
// Report rows. One CSV row per (n or r, statistic); absent cells stay empty.

struct ReportRow {
  std::string kind;
  std::optional<std::uint64_t> n, m;
  std::optional<double> r;
  std::optional<double> pU, pV, rho;
  std::optional<double> tv_lower, tv_upper;
  std::optional<double> bound_statement, bound_proof;
  std::optional<std::uint64_t> censored, samples;
  std::uint64_t seed = 0;
};

struct DistPair {
  Pmf empirical;
  Pmf reference;
  std::string empirical_label;
  std::string reference_label;
};

struct RunOutput {
  std::vector<ReportRow> rows;
  json summary = json::object();
  std::optional<DistPair> dist;
  bool flagged = false;
  std::uint64_t censored_total = 0;
};

std::string g17(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

void add_cell(std::string& out, const std::optional<double>& v) {
  out += ',';
  if (v) out += g17(*v);
}

void add_cell(std::string& out, const std::optional<std::uint64_t>& v) {
  out += ',';
  if (v) out += std::to_string(*v);
}

std::string render_csv(const std::vector<ReportRow>& rows) {
  std::string out =
      "kind,n,m,r,pU,pV,rho,tv_lower,tv_upper,bound_statement,bound_proof,"
      "censored,samples,seed\n";
  for (const ReportRow& w : rows) {
    out += w.kind;
    add_cell(out, w.n);
    add_cell(out, w.m);
    add_cell(out, w.r);
    add_cell(out, w.pU);
    add_cell(out, w.pV);
    add_cell(out, w.rho);
    add_cell(out, w.tv_lower);
    add_cell(out, w.tv_upper);
    add_cell(out, w.bound_statement);
    add_cell(out, w.bound_proof);
    add_cell(out, w.censored);
    add_cell(out, w.samples);
    out += ',';
    out += std::to_string(w.seed);
    out += '\n';
  }
  return out;
}

json cell_json(const std::optional<double>& v) { return v ? json(*v) : json(); }
json cell_json(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(); }

json row_json(const ReportRow& w) {
  json j = json::object();
  j["kind"] = w.kind;
  j["n"] = cell_json(w.n);
  j["m"] = cell_json(w.m);
  j["r"] = cell_json(w.r);
  j["pU"] = cell_json(w.pU);
  j["pV"] = cell_json(w.pV);
  j["rho"] = cell_json(w.rho);
  j["tv_lower"] = cell_json(w.tv_lower);
  j["tv_upper"] = cell_json(w.tv_upper);
  j["bound_statement"] = cell_json(w.bound_statement);
  j["bound_proof"] = cell_json(w.bound_proof);
  j["censored"] = cell_json(w.censored);
  j["samples"] = cell_json(w.samples);
  j["seed"] = w.seed;
  return j;
}

json dist_json(const DistPair& d) {
  json j = json::object();
  j["empirical_label"] = d.empirical_label;
  j["empirical"] = d.empirical.probs;
  j["empirical_tail"] = d.empirical.tail;
  j["reference_label"] = d.reference_label;
  j["reference"] = d.reference.probs;
  j["reference_tail"] = d.reference.tail;
  return j;
}

// ---------------------------------------------------------------------------
// Histogram rendering: paired bars of the two truncated laws, mass beyond
// the drawn range folded into a final tail group. Pure function of the
// distribution pair, so reruns rewrite identical bytes.

void appendf(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  out += buf;
}

std::string histogram_svg(const DistPair& d) {
  const std::size_t full = std::max(d.empirical.probs.size(), d.reference.probs.size());
  const std::size_t cut = std::min<std::size_t>(full, 61);
  const auto at = [](const Pmf& p, std::size_t k) {
    return k < p.probs.size() ? p.probs[k] : 0.0;
  };
  const auto folded_tail = [&](const Pmf& p) {
    double t = p.tail;
    for (std::size_t k = cut; k < p.probs.size(); ++k) t += p.probs[k];
    return t;
  };
  const double tail_e = folded_tail(d.empirical);
  const double tail_r = folded_tail(d.reference);
  double ymax = std::max(tail_e, tail_r);
  for (std::size_t k = 0; k < cut; ++k)
    ymax = std::max({ymax, at(d.empirical, k), at(d.reference, k)});
  if (!(ymax > 0.0)) ymax = 1.0;

  const double x0 = 70.0, y0 = 330.0, plot_h = 270.0;
  const double group_w = 13.0, bar_w = 5.0;
  const std::size_t groups = cut + 1;
  const double width =
      std::max(480.0, x0 + static_cast<double>(groups) * group_w + 40.0);

  std::string s;
  appendf(s,
          "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.6g\" height=\"380\" "
          "viewBox=\"0 0 %.6g 380\">\n",
          width, width);
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  appendf(s,
          "<text x=\"%.6g\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\" "
          "fill=\"#222222\">%s vs %s</text>\n",
          x0, d.empirical_label.c_str(), d.reference_label.c_str());

  // Axes and y ticks at 0, ymax/2, ymax.
  appendf(s, "<line x1=\"%.6g\" y1=\"%.6g\" x2=\"%.6g\" y2=\"%.6g\" stroke=\"#222222\"/>\n",
          x0, y0, x0 + static_cast<double>(groups) * group_w, y0);
  appendf(s, "<line x1=\"%.6g\" y1=\"%.6g\" x2=\"%.6g\" y2=\"%.6g\" stroke=\"#222222\"/>\n",
          x0, y0, x0, y0 - plot_h);
  for (int tick = 0; tick <= 2; ++tick) {
    const double frac = static_cast<double>(tick) / 2.0;
    const double y = y0 - frac * plot_h;
    appendf(s, "<line x1=\"%.6g\" y1=\"%.6g\" x2=\"%.6g\" y2=\"%.6g\" stroke=\"#bbbbbb\"/>\n",
            x0 - 4.0, y, x0, y);
    appendf(s,
            "<text x=\"%.6g\" y=\"%.6g\" font-family=\"sans-serif\" font-size=\"11\" "
            "fill=\"#222222\" text-anchor=\"end\">%.3g</text>\n",
            x0 - 7.0, y + 4.0, frac * ymax);
  }
  appendf(s,
          "<text x=\"14\" y=\"%.6g\" font-family=\"sans-serif\" font-size=\"12\" "
          "fill=\"#222222\" transform=\"rotate(-90 14 %.6g)\">P(count = k)</text>\n",
          y0 - plot_h / 2.0, y0 - plot_h / 2.0);

  // Bars: one group per k, the last group carries the folded tails.
  const std::size_t label_step = std::max<std::size_t>(1, groups / 12);
  for (std::size_t g = 0; g < groups; ++g) {
    const bool is_tail = g == cut;
    const double ev = is_tail ? tail_e : at(d.empirical, g);
    const double rv = is_tail ? tail_r : at(d.reference, g);
    const double gx = x0 + static_cast<double>(g) * group_w;
    const double eh = ev / ymax * plot_h;
    const double rh = rv / ymax * plot_h;
    if (eh > 0.0)
      appendf(s, "<rect x=\"%.6g\" y=\"%.6g\" width=\"%.6g\" height=\"%.6g\" fill=\"#4477aa\"/>\n",
              gx + 1.0, y0 - eh, bar_w, eh);
    if (rh > 0.0)
      appendf(s, "<rect x=\"%.6g\" y=\"%.6g\" width=\"%.6g\" height=\"%.6g\" fill=\"#ee6677\"/>\n",
              gx + 1.0 + bar_w + 1.0, y0 - rh, bar_w, rh);
    if (is_tail || g % label_step == 0)
      appendf(s,
              "<text x=\"%.6g\" y=\"%.6g\" font-family=\"sans-serif\" font-size=\"10\" "
              "fill=\"#222222\" text-anchor=\"middle\">%s</text>\n",
              gx + group_w / 2.0, y0 + 14.0,
              is_tail ? "tail" : std::to_string(g).c_str());
  }
  appendf(s,
          "<text x=\"%.6g\" y=\"%.6g\" font-family=\"sans-serif\" font-size=\"12\" "
          "fill=\"#222222\">k</text>\n",
          x0 + static_cast<double>(groups) * group_w / 2.0, y0 + 32.0);

  // Legend.
  const double lx = width - 180.0;
  appendf(s, "<rect x=\"%.6g\" y=\"26\" width=\"10\" height=\"10\" fill=\"#4477aa\"/>\n", lx);
  appendf(s,
          "<text x=\"%.6g\" y=\"35\" font-family=\"sans-serif\" font-size=\"11\" "
          "fill=\"#222222\">%s</text>\n",
          lx + 14.0, d.empirical_label.c_str());
  appendf(s, "<rect x=\"%.6g\" y=\"42\" width=\"10\" height=\"10\" fill=\"#ee6677\"/>\n", lx);
  appendf(s,
          "<text x=\"%.6g\" y=\"51\" font-family=\"sans-serif\" font-size=\"11\" "
          "fill=\"#222222\">%s</text>\n",
          lx + 14.0, d.reference_label.c_str());
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------
// Experiment runners, one per kind.

struct RunContext {
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Lockstep Bernoulli mark pair encoded as one 4-letter iid symbol: bit 0 is
// the target mark at rate q, bit 1 the hazard mark at rate p. A simultaneous
// mark (symbol 3) counts as a hazard hit, so the count law must be geometric
// with parameter p/(p+q-pq).
RunOutput run_lemma34(const json& cfg, const RunContext& rc) {
  check_members(cfg, "", {"kind", "seeds", "params", "oracle"});
  const json& pj = need_member(cfg, "", "params");
  check_members(pj, "/params", {"p", "q", "max_tv"});
  const double p = need_prob(pj, "/params", "p");
  const double q = need_prob(pj, "/params", "q");
  const double max_tv = opt_number(pj, "/params", "max_tv", 0.0, 1.0).value_or(1e-9);

  const double rho = bernoulli_pair_parameter(p, q);
  const std::size_t K =
      parse_oracle_k(cfg).value_or(tail_budget_k(rho, 1e-12, 8, 5000));

  json mj;
  mj["kind"] = "iid";
  mj["probs"] = {(1.0 - p) * (1.0 - q), (1.0 - p) * q, p * (1.0 - q), p * q};
  const ProcessModel model = model_from_json_text(mj.dump());
  const WindowChain chain = build_window_chain(model, 1);
  const CylinderUnion U({{1}, {3}}, 4), V({{2}, {3}}, 4);
  const Pmf oracle = exact_sigma_distribution(chain, U, V, K);
  const Pmf ref = geo_pmf(rho, K);
  const TvInterval tv = tv_distance(oracle, ref);

  RunOutput out;
  ReportRow row;
  row.kind = "lemma34";
  row.n = 1;
  row.m = 1;
  row.pU = q;
  row.pV = p;
  row.rho = rho;
  row.tv_lower = tv.lower;
  row.tv_upper = tv.upper;
  row.seed = rc.seed;
  out.rows.push_back(row);
  out.summary["p"] = p;
  out.summary["q"] = q;
  out.summary["parameter"] = rho;
  out.summary["oracle_K"] = K;
  out.summary["oracle_tail"] = oracle.tail;
  out.summary["max_tv"] = max_tv;
  out.dist = DistPair{oracle, ref, "oracle", "geometric"};
  out.flagged = tv.upper > max_tv;
  return out;
}

RunOutput run_oracle_vs_mc(const json& cfg, const RunContext& rc) {
  check_members(cfg, "", {"kind", "seeds", "model", "sets", "mc", "oracle"});
  const ProcessModel model = parse_process_model(cfg);
  const std::size_t a = alphabet_size(model);
  const json& sets = need_member(cfg, "", "sets");
  check_members(sets, "/sets", {"u", "v"});
  const CylinderUnion U(need_words(sets, "/sets", "u", a), a);
  const CylinderUnion V(need_words(sets, "/sets", "v", a), a);
  const McParams mc = parse_mc(cfg, true);
  const std::size_t K = parse_oracle_k(cfg).value_or(40);

  const std::size_t L = std::max(U.word_length(), V.word_length());
  const WindowChain chain = build_window_chain(model, L);
  const Pmf oracle = exact_sigma_distribution(chain, U, V, K);
  const double pU = set_measure(model, U);
  const double pV = set_measure(model, V);
  const std::size_t horizon = mc.horizon.value_or(default_horizon(pV));
  const SimulateResult sim = simulate_sigma(model, U, V, mc.samples, horizon, rc.seed,
                                            TauConvention::FromZero, rc.threads);

  RunOutput out;
  ReportRow row;
  row.kind = "oracle-vs-mc";
  row.n = U.word_length();
  row.m = V.word_length();
  row.pU = pU;
  row.pV = pV;
  row.censored = sim.censored;
  row.samples = sim.samples;
  row.seed = rc.seed;
  out.flagged = sim.flagged;
  if (sim.censored < sim.samples) {
    const TvInterval tv = tv_distance(sim.empirical, oracle);
    row.tv_lower = tv.lower;
    row.tv_upper = tv.upper;
    out.dist = DistPair{sim.empirical, oracle, "empirical", "oracle"};
    out.summary["empirical_tail"] = sim.empirical.tail;
    if (tolerance_breached(mc.max_tv_lower, tv)) out.flagged = true;
  }
  out.rows.push_back(row);
  out.summary["window_length"] = L;
  out.summary["oracle_K"] = K;
  out.summary["oracle_tail"] = oracle.tail;
  out.summary["horizon"] = horizon;
  out.censored_total = sim.censored;
  return out;
}

RunOutput run_corollary22(const json& cfg, const RunContext& rc) {
  check_members(cfg, "", {"kind", "seeds", "model", "trend", "mc"});
  const ProcessModel model = parse_process_model(cfg);
  const json& tj = need_member(cfg, "", "trend");
  check_members(tj, "/trend", {"n_schedule", "hazard_rule"});
  const json& sj = need_member(tj, "/trend", "n_schedule");
  if (!sj.is_array() || sj.empty())
    throw ConfigError("/trend/n_schedule", "expected a nonempty array of word lengths");
  std::vector<std::size_t> schedule;
  for (std::size_t i = 0; i < sj.size(); ++i) {
    const std::string ip = "/trend/n_schedule/" + std::to_string(i);
    if (!sj[i].is_number_unsigned()) throw ConfigError(ip, "expected an unsigned integer");
    const std::uint64_t n = sj[i].get<std::uint64_t>();
    if (n < 1 || n > 64) throw ConfigError(ip, "expected an integer in [1, 64]");
    if (!schedule.empty() && n <= schedule.back())
      throw ConfigError(ip, "word lengths must be strictly increasing");
    schedule.push_back(static_cast<std::size_t>(n));
  }
  const std::string rule_name = need_string(tj, "/trend", "hazard_rule");
  HazardLengthRule rule;
  if (rule_name == "match-length")
    rule = HazardLengthRule::MatchLength;
  else if (rule_name == "match-measure")
    rule = HazardLengthRule::MatchMeasure;
  else
    throw ConfigError("/trend/hazard_rule", "expected \"match-length\" or \"match-measure\"");
  const McParams mc = parse_mc(cfg, false);

  const std::vector<TrendPoint> pts =
      cylinder_trend_experiment(model, schedule, rule, mc.samples, rc.seed, rc.threads);

  RunOutput out;
  out.summary["hazard_rule"] = rule_name;
  json points = json::array();
  for (const TrendPoint& pt : pts) {
    ReportRow row;
    row.kind = "corollary22";
    row.n = pt.n;
    row.m = pt.m;
    row.pU = pt.pU;
    row.pV = pt.pV;
    row.rho = pt.rho;
    row.tv_lower = pt.tv.lower;
    row.tv_upper = pt.tv.upper;
    row.censored = pt.censored;
    row.samples = pt.samples;
    row.seed = rc.seed;
    out.rows.push_back(row);
    out.censored_total += pt.censored;
    if (pt.flagged || tolerance_breached(mc.max_tv_lower, pt.tv)) out.flagged = true;
    json pj = json::object();
    pj["n"] = pt.n;
    pj["u_word"] = word_to_string(pt.u_word);
    pj["v_word"] = word_to_string(pt.v_word);
    pj["resamples"] = pt.resamples;
    pj["flagged"] = pt.flagged;
    points.push_back(std::move(pj));
  }
  out.summary["points"] = std::move(points);
  return out;
}

std::function<double(std::int64_t)> parse_phi(const json& p) {
  check_members(p, "/bound/phi", {"type", "c", "theta", "Q"});
  const std::string t = need_string(p, "/bound/phi", "type");
  if (t == "iid") {
    if (p.size() != 1)
      throw ConfigError("/bound/phi", "iid mixing takes no extra members");
    return [](std::int64_t) { return 0.0; };
  }
  if (t == "geometric") {
    check_members(p, "/bound/phi", {"type", "c", "theta"});
    const double c = need_number(p, "/bound/phi", "c", 0.0, 1e6);
    const double theta = need_prob(p, "/bound/phi", "theta");
    return [c, theta](std::int64_t j) {
      if (j <= 0) return 1.0;
      return std::min(1.0, c * std::pow(theta, static_cast<double>(j)));
    };
  }
  if (t == "markov") {
    check_members(p, "/bound/phi", {"type", "Q"});
    json mj;
    mj["kind"] = "markov";
    mj["Q"] = need_member(p, "/bound/phi", "Q");
    ProcessModel pm = model_from_json_text(mj.dump());
    const auto fm =
        std::make_shared<const FiniteMarkovModel>(std::get<FiniteMarkovModel>(std::move(pm)));
    const auto cache = std::make_shared<std::map<std::int64_t, double>>();
    return [fm, cache](std::int64_t j) {
      if (j <= 0) return 1.0;
      // Coefficients decrease in the gap, so clamping huge arguments down
      // only enlarges the bound.
      if (j > 1000000) j = 1000000;
      const auto it = cache->find(j);
      if (it != cache->end()) return it->second;
      const double v = phi_markov_exact(*fm, static_cast<int>(j));
      cache->emplace(j, v);
      return v;
    };
  }
  throw ConfigError("/bound/phi/type", "expected \"iid\", \"geometric\" or \"markov\"");
}

RunOutput run_bound(const json& cfg, const RunContext& rc) {
  check_members(cfg, "", {"kind", "seeds", "bound"});
  const json& b = need_member(cfg, "", "bound");
  check_members(b, "/bound",
                {"pU", "pV", "pUr", "pVr", "n", "m", "M", "R", "r", "kappa", "phi"});
  BoundInputs in;
  in.pU = need_prob(b, "/bound", "pU");
  in.pV = need_prob(b, "/bound", "pV");
  in.pUr = need_number(b, "/bound", "pUr", 0.0, 1.0);
  in.pVr = need_number(b, "/bound", "pVr", 0.0, 1.0);
  if (in.pUr < in.pU) throw ConfigError("/bound/pUr", "must be at least pU");
  if (in.pVr < in.pV) throw ConfigError("/bound/pVr", "must be at least pV");
  in.n = static_cast<std::size_t>(need_uint(b, "/bound", "n", 1, 1000000));
  in.m = static_cast<std::size_t>(need_uint(b, "/bound", "m", 1, 1000000));
  in.M = need_uint(b, "/bound", "M", 1, 1000000000000ULL);
  in.R = need_uint(b, "/bound", "R", 1, 1000000000000ULL);
  const std::uint64_t r_cap = std::min(in.n, in.m) - 1;
  in.r = static_cast<std::size_t>(need_uint(b, "/bound", "r", 0, r_cap));
  in.kappa = need_int64(b, "/bound", "kappa", -1000000000, 1000000000);
  in.phi = parse_phi(need_member(b, "/bound", "phi"));

  const double statement = sigma_tv_bound(in, BoundForm::Statement);
  const double proof_final = sigma_tv_bound(in, BoundForm::ProofFinal);

  RunOutput out;
  ReportRow row;
  row.kind = "bound";
  row.n = in.n;
  row.m = in.m;
  row.r = static_cast<double>(in.r);
  row.pU = in.pU;
  row.pV = in.pV;
  row.rho = in.pV / (in.pU + in.pV);
  row.bound_statement = statement;
  row.bound_proof = proof_final;
  row.seed = rc.seed;
  out.rows.push_back(row);
  out.summary["statement"] = statement;
  out.summary["proof_final"] = proof_final;
  out.summary["M"] = in.M;
  out.summary["R"] = in.R;
  out.summary["kappa"] = in.kappa;
  out.summary["phi_type"] = need_string(b.at("phi"), "/bound/phi", "type");
  return out;
}

RunOutput run_balls(const json& cfg, const RunContext& rc) {
  check_members(cfg, "", {"kind", "seeds", "model", "sets", "mc"});
  const IntervalMapModel map = parse_map_model(cfg);
  const json& sets = need_member(cfg, "", "sets");
  check_members(sets, "/sets", {"x", "y", "r"});
  const double x = need_prob(sets, "/sets", "x");
  const double y = need_prob(sets, "/sets", "y");
  const double r = need_number(sets, "/sets", "r", 0.0, 0.5);
  if (!(r > 0.0)) throw ConfigError("/sets/r", "expected a radius in (0, 0.5]");
  const McParams mc = parse_mc(cfg, true);

  const double rho = rho_balls(map, x, y, r);
  const Interval bu = ball_interval(x, r);
  const Interval bv = ball_interval(y, r);
  const double pU = interval_measure(map, bu.lo, bu.hi);
  const double pV = interval_measure(map, bv.lo, bv.hi);
  const std::size_t horizon = mc.horizon.value_or(default_horizon(pV));
  const SimulateResult sim =
      sigma_balls(map, x, y, r, mc.samples, horizon, rc.seed, rc.threads);

  RunOutput out;
  ReportRow row;
  row.kind = "balls";
  row.r = r;
  row.pU = pU;
  row.pV = pV;
  row.rho = rho;
  row.censored = sim.censored;
  row.samples = sim.samples;
  row.seed = rc.seed;
  out.flagged = sim.flagged;
  if (sim.censored < sim.samples && !sim.empirical.probs.empty()) {
    const Pmf ref = geo_pmf(rho, sim.empirical.probs.size() - 1);
    const TvInterval tv = tv_distance(sim.empirical, ref);
    row.tv_lower = tv.lower;
    row.tv_upper = tv.upper;
    out.dist = DistPair{sim.empirical, ref, "empirical", "geometric"};
    if (tolerance_breached(mc.max_tv_lower, tv)) out.flagged = true;
  }
  out.rows.push_back(row);
  out.summary["x"] = x;
  out.summary["y"] = y;
  out.summary["r"] = r;
  out.summary["horizon"] = horizon;
  out.censored_total = sim.censored;
  return out;
}

RunOutput run_recurrence(const json& cfg, const RunContext& rc) {
  check_members(cfg, "", {"kind", "seeds", "model", "recurrence"});
  const IntervalMapModel map = parse_map_model(cfg);
  const json& rj = need_member(cfg, "", "recurrence");
  check_members(rj, "/recurrence", {"start", "center", "radii", "horizon"});
  const double start = need_prob(rj, "/recurrence", "start");
  std::optional<double> center;
  if (rj.contains("center")) center = need_prob(rj, "/recurrence", "center");
  const json& radii_j = need_member(rj, "/recurrence", "radii");
  if (!radii_j.is_array() || radii_j.size() < 2)
    throw ConfigError("/recurrence/radii", "expected an array of at least two radii");
  std::vector<double> radii;
  for (std::size_t i = 0; i < radii_j.size(); ++i) {
    const std::string ip = "/recurrence/radii/" + std::to_string(i);
    if (!radii_j[i].is_number()) throw ConfigError(ip, "expected a number");
    const double v = radii_j[i].get<double>();
    if (!(v > 0.0 && v < 0.5)) throw ConfigError(ip, "expected a radius in (0, 0.5)");
    if (!radii.empty() && v >= radii.back())
      throw ConfigError(ip, "radii must be strictly decreasing");
    radii.push_back(v);
  }
  const std::size_t horizon =
      static_cast<std::size_t>(need_uint(rj, "/recurrence", "horizon", 1, 10000000000ULL));

  const RecurrenceReport rep =
      recurrence_rate_estimate(map, start, center, radii, horizon, rc.seed);

  RunOutput out;
  // One row per reached radius; the entry time tau(r) is reported in the
  // step-count column n.
  for (std::size_t i = 0; i < rep.taus.size(); ++i) {
    ReportRow row;
    row.kind = "recurrence";
    row.n = rep.taus[i];
    row.r = rep.radii[i];
    row.seed = rc.seed;
    out.rows.push_back(row);
  }
  out.summary["start"] = start;
  out.summary["center"] = center ? json(*center) : json();
  out.summary["horizon"] = horizon;
  out.summary["slope"] = rep.slope;
  out.summary["min_suffix_slope"] = rep.min_suffix_slope;
  out.summary["truncated"] = rep.truncated;
  out.flagged = rep.truncated > 0;
  out.censored_total = rep.truncated;
  return out;
}

RunOutput run_tower(const json& cfg, const RunContext& rc) {
  check_members(cfg, "", {"kind", "seeds", "model", "tower", "sets", "mc"});
  const ProcessModel model = parse_process_model(cfg);
  const std::size_t a = alphabet_size(model);
  const json& tj = need_member(cfg, "", "tower");
  check_members(tj, "/tower", {"prefix_len", "roof", "u_level", "v_level"});
  RoofFunction roof;
  roof.prefix_len = static_cast<std::size_t>(need_uint(tj, "/tower", "prefix_len", 1, 16));
  const json& roof_j = need_member(tj, "/tower", "roof");
  if (!roof_j.is_array() || roof_j.empty())
    throw ConfigError("/tower/roof", "expected a nonempty array of heights");
  for (std::size_t i = 0; i < roof_j.size(); ++i) {
    const std::string ip = "/tower/roof/" + std::to_string(i);
    if (!roof_j[i].is_number_unsigned()) throw ConfigError(ip, "expected an unsigned integer");
    const std::uint64_t h = roof_j[i].get<std::uint64_t>();
    if (h < 1 || h > 1000000) throw ConfigError(ip, "expected a height in [1, 1000000]");
    roof.values.push_back(static_cast<std::uint32_t>(h));
  }
  const std::uint32_t u_level =
      static_cast<std::uint32_t>(need_uint(tj, "/tower", "u_level", 0, 1000000));
  const std::uint32_t v_level =
      static_cast<std::uint32_t>(need_uint(tj, "/tower", "v_level", 0, 1000000));
  const json& sets = need_member(cfg, "", "sets");
  check_members(sets, "/sets", {"u", "v"});
  const CylinderUnion U(need_words(sets, "/sets", "u", a), a);
  const CylinderUnion V(need_words(sets, "/sets", "v", a), a);
  const McParams mc = parse_mc(cfg, true);

  const TowerModel tower(model, roof);
  const TowerSet TU = lift_set(tower, U, u_level);
  const TowerSet TV = lift_set(tower, V, v_level);
  const double pU = set_measure(model, U);
  const double pV = set_measure(model, V);
  const double rho = pV / (pU + pV);
  const std::size_t horizon = mc.horizon.value_or(default_horizon(pV / tower.mean_roof()));
  const SimulateResult sim =
      sigma_tower(tower, TU, TV, mc.samples, horizon, rc.seed, rc.threads);

  RunOutput out;
  ReportRow row;
  row.kind = "tower";
  row.n = U.word_length();
  row.m = V.word_length();
  row.pU = pU;
  row.pV = pV;
  row.rho = rho;
  row.censored = sim.censored;
  row.samples = sim.samples;
  row.seed = rc.seed;
  out.flagged = sim.flagged;
  if (sim.censored < sim.samples && !sim.empirical.probs.empty()) {
    const Pmf ref = geo_pmf(rho, sim.empirical.probs.size() - 1);
    const TvInterval tv = tv_distance(sim.empirical, ref);
    row.tv_lower = tv.lower;
    row.tv_upper = tv.upper;
    out.dist = DistPair{sim.empirical, ref, "empirical", "geometric"};
    if (tolerance_breached(mc.max_tv_lower, tv)) out.flagged = true;
  }
  out.rows.push_back(row);
  out.summary["mean_roof"] = tower.mean_roof();
  out.summary["max_roof"] = tower.max_roof();
  out.summary["u_level"] = u_level;
  out.summary["v_level"] = v_level;
  out.summary["horizon"] = horizon;
  out.censored_total = sim.censored;
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.close();
  if (!f) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

int run_experiment(const CliOptions& opts) {
  try {
    if (opts.config_path.empty()) throw std::runtime_error("missing config path");
    std::ifstream f(opts.config_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open config file " + opts.config_path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::uint64_t hash = fnv1a64(bytes);

    json cfg;
    try {
      cfg = json::parse(bytes);
    } catch (const std::exception& e) {
      throw ConfigError("/", std::string("JSON parse error: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("/", "expected a JSON object");
    const std::string kind = need_string(cfg, "", "kind");
    static const char* const kinds[] = {"oracle-vs-mc", "corollary22", "bound", "balls",
                                        "recurrence", "tower", "lemma34"};
    if (std::find_if(std::begin(kinds), std::end(kinds),
                     [&](const char* k) { return kind == k; }) == std::end(kinds))
      throw ConfigError("/kind", "unknown kind \"" + kind + "\"");

    const json& seeds = need_member(cfg, "", "seeds");
    check_members(seeds, "/seeds", {"master"});
    const std::uint64_t master =
        need_uint(seeds, "/seeds", "master", 0, std::numeric_limits<std::uint64_t>::max());

    RunContext rc;
    rc.seed = opts.seed_override.value_or(master);
    rc.threads = opts.threads != 0
                     ? opts.threads
                     : std::max(1u, std::thread::hardware_concurrency());
    logf(LogLevel::Info, "kind=%s seed=%llu threads=%u", kind.c_str(),
         static_cast<unsigned long long>(rc.seed), rc.threads);

    RunOutput out;
    if (kind == "lemma34")
      out = run_lemma34(cfg, rc);
    else if (kind == "oracle-vs-mc")
      out = run_oracle_vs_mc(cfg, rc);
    else if (kind == "corollary22")
      out = run_corollary22(cfg, rc);
    else if (kind == "bound")
      out = run_bound(cfg, rc);
    else if (kind == "balls")
      out = run_balls(cfg, rc);
    else if (kind == "recurrence")
      out = run_recurrence(cfg, rc);
    else
      out = run_tower(cfg, rc);

    const std::filesystem::path dir(opts.out_dir.empty() ? "." : opts.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "results.csv", render_csv(out.rows));

    char hash_hex[24];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(hash));
    json rep = json::object();
    rep["version"] = kVersion;
    rep["kind"] = kind;
    rep["config_hash"] = std::string("fnv1a64:") + hash_hex;
    rep["master_seed"] = rc.seed;
    rep["flagged"] = out.flagged;
    rep["censored_total"] = out.censored_total;
    rep["summary"] = out.summary;
    json rows = json::array();
    for (const ReportRow& w : out.rows) rows.push_back(row_json(w));
    rep["rows"] = std::move(rows);
    if (out.dist) rep["distributions"] = dist_json(*out.dist);
    write_file(dir / "results.json", rep.dump(2) + "\n");

    if (opts.emit_svg) {
      if (out.dist)
        write_file(dir / "histogram.svg", histogram_svg(*out.dist));
      else
        logf(LogLevel::Warn, "kind %s yields no distribution pair; histogram.svg skipped",
             kind.c_str());
    }
    logf(LogLevel::Info, "reports written to %s", dir.string().c_str());

    if (out.flagged) {
      logf(LogLevel::Warn, "run flagged (censoring or tolerance breach)");
      return 3;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hazret: error: %s\n", e.what());
    return 2;
  }
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"return counts before a first hazard hit: experiments and reports"};
  app.set_version_flag("--version", kVersion);
  CliOptions opts;
  std::uint64_t seed = 0;
  app.add_option("--config", opts.config_path, "experiment config (JSON)")->required();
  app.add_option("--out", opts.out_dir, "report directory (default: current directory)");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "override the config master seed");
  app.add_option("--threads", opts.threads, "worker threads, 0 picks the hardware count");
  app.add_flag("--emit-svg", opts.emit_svg,
               "also write histogram.svg when the kind yields a distribution pair");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) opts.seed_override = seed;
  return run_experiment(opts);
}

}  // namespace hazret
