#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gmethods {

// Settings of one CLI invocation; defaults follow the simulation study at
// desk scale.
struct RunConfig {
  std::string command;
  std::vector<int> scenarios;  // empty: command default
  int n = 10000;
  int n_sim = 200;
  std::uint64_t seed = 6122020;
  std::uint64_t replication = 0;
  std::vector<std::string> methods;  // empty: all methods
  int mc_size = 10000;
  int bootstrap = 0;
  std::optional<std::pair<double, double>> truncation;
  long long rct_n = 1000000;
  std::string truth_source = "computed";  // or "published"
  std::string data;
  std::string out;
  std::string svg;
  bool diagnostics = false;
  std::string censoring;  // weights subcommand: "", "cumulative" or "forward"
  std::string slots = "lag";
  std::string msm_form = "indicators";
  std::string intercept = "common";
  int threads = 0;  // 0: GMETHODS_THREADS or hardware default
};

// Flags override config-file values, which override defaults. The config file
// (--config) is INI-style with one section per subcommand. Throws
// gmethods::Error with kind UnknownKey or TypeMismatch naming the key.
// Returns nullopt when help was requested (help text goes to `help_out`).
std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& help_out);

// Parses "1..9", "1,3,5" or "2".
std::vector<int> parse_scenario_list(const std::string& text);

// Runs the command. Returns 0 when every cell was estimated; otherwise writes
// a JSON error summary to `err` and returns nonzero.
int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace gmethods
