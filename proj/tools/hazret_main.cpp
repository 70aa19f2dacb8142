#include "hazret/cli.hpp"

int main(int argc, char** argv) { return hazret::run_cli(argc, argv); }
