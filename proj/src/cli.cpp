#include "gmethods/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "gmethods/error.hpp"
#include "gmethods/estimators.hpp"
#include "gmethods/eval.hpp"
#include "gmethods/oracle.hpp"
#include "gmethods/parallel.hpp"
#include "gmethods/report_io.hpp"
#include "gmethods/simgen.hpp"
#include "gmethods/svg.hpp"
#include "gmethods/weights.hpp"

namespace gmethods {

namespace {

int to_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::type_mismatch, fmt::format("{}: expected an integer, got '{}'", what, s));
  }
  return v;
}

std::pair<double, double> parse_truncation(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos) {
    throw Error(ErrorKind::type_mismatch, fmt::format("truncate: expected lo,hi, got '{}'", text));
  }
  double lo = 0.0, hi = 0.0;
  try {
    lo = parse_real_field(text.substr(0, comma));
    hi = parse_real_field(text.substr(comma + 1));
  } catch (const Error&) {
    throw Error(ErrorKind::type_mismatch, fmt::format("truncate: expected lo,hi, got '{}'", text));
  }
  if (!(0.0 <= lo && lo < hi && hi <= 100.0)) {
    throw Error(ErrorKind::invalid_argument, fmt::format("truncate: need 0 <= lo < hi <= 100, got '{}'", text));
  }
  return {lo, hi};
}

struct RawOptions {
  std::string scenario;
  std::string methods;
  std::string truncate;
};

void add_common(CLI::App* sub, RunConfig& c, RawOptions& raw) {
  sub->add_option("--seed", c.seed, "Master seed");
  sub->add_option("--threads", c.threads, "Worker threads (default GMETHODS_THREADS or all cores)");
  sub->add_option("--out", c.out, "Output file or directory");
  (void)raw;
}

void add_estimator_options(CLI::App* sub, RunConfig& c, RawOptions& raw) {
  sub->add_option("--method", raw.methods, "Comma-separated methods: iptw,censor,seqtrial,gformula,gest,gest-const")
      ->join(',');
  sub->add_option("--mc-size", c.mc_size, "g-formula Monte Carlo sample size");
  sub->add_option("--truncate", raw.truncate, "Truncate weights at percentiles lo,hi (bare flag: 10,90)")
      ->expected(0, 2)
      ->join(',')
      ->default_str("10,90");
  sub->add_option("--slots", c.slots, "MSM treatment slots: lag or calendar");
  sub->add_option("--msm-form", c.msm_form, "MSM form: indicators or duration");
  sub->add_option("--intercept", c.intercept, "MSM intercept: common or per-horizon");
}

MethodConfig method_config(const RunConfig& c) {
  MethodConfig mc;
  if (c.slots == "lag") {
    mc.msm.slots = SlotIndex::lag;
  } else if (c.slots == "calendar") {
    mc.msm.slots = SlotIndex::calendar;
  } else {
    throw Error(ErrorKind::unknown_key, fmt::format("slots '{}' (valid: lag, calendar)", c.slots));
  }
  if (c.msm_form == "indicators") {
    mc.msm.form = MsmForm::per_time_indicators;
  } else if (c.msm_form == "duration") {
    mc.msm.form = MsmForm::duration;
  } else {
    throw Error(ErrorKind::unknown_key, fmt::format("msm-form '{}' (valid: indicators, duration)", c.msm_form));
  }
  if (c.intercept == "common") {
    mc.msm.intercept = MsmIntercept::common;
  } else if (c.intercept == "per-horizon") {
    mc.msm.intercept = MsmIntercept::per_horizon;
  } else {
    throw Error(ErrorKind::unknown_key, fmt::format("intercept '{}' (valid: common, per-horizon)", c.intercept));
  }
  mc.msm.truncation = c.truncation;
  mc.gformula.mc_size = c.mc_size;
  mc.gformula.seed = c.seed;
  mc.gformula.replication = c.replication;
  return mc;
}

std::vector<Method> methods_of(const RunConfig& c) {
  if (c.methods.empty()) return {kMethods.begin(), kMethods.end()};
  std::vector<Method> out;
  for (const auto& m : c.methods) out.push_back(parse_method(m));
  return out;
}

int threads_of(const RunConfig& c) { return c.threads > 0 ? c.threads : worker_count(); }

std::vector<int> scenarios_or(const RunConfig& c, std::vector<int> fallback) {
  return c.scenarios.empty() ? fallback : c.scenarios;
}

// Writes to the named file, or to `out` when the name is empty or "-".
void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(out);
  } else {
    emit_file(path, body);
  }
}

LongitudinalDataset input_data(const RunConfig& c) {
  if (!c.data.empty()) return load_long_csv(std::filesystem::path(c.data));
  const auto ids = scenarios_or(c, {1});
  if (ids.size() != 1) throw Error(ErrorKind::invalid_argument, "give --data or a single --scenario");
  return generate(scenario_spec(ids.front()), c.n, SeedSpec{c.seed, c.replication});
}

struct Outcome {
  int failed_cells = 0;
  int empty_cells = 0;
  nlohmann::json errors = nlohmann::json::array();
};

int finish(const Outcome& o, std::ostream& err) {
  if (o.failed_cells == 0 && o.empty_cells == 0 && o.errors.empty()) return 0;
  nlohmann::json summary;
  summary["status"] = "error";
  summary["failed_cells"] = o.failed_cells;
  summary["empty_arm_cells"] = o.empty_cells;
  summary["errors"] = o.errors;
  err << summary.dump() << '\n';
  return 1;
}

void count_cells(const ReplicationTable& table, Outcome& o) {
  std::map<std::string, int> messages;
  for (const auto& r : table.rows) {
    if (r.status == CellStatus::failed) {
      ++o.failed_cells;
      ++messages[fmt::format("scenario {} {}: {}", r.scenario, r.method, r.message)];
    } else if (r.status == CellStatus::empty_arm) {
      ++o.empty_cells;
    }
  }
  for (const auto& [m, count] : messages) o.errors.push_back({{"message", m}, {"cells", count}});
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  (void)err;
  const auto ids = scenarios_or(c, {1});
  if (ids.size() != 1) throw Error(ErrorKind::invalid_argument, "simulate takes a single --scenario");
  const auto ds = generate(scenario_spec(ids.front()), c.n, SeedSpec{c.seed, c.replication});
  emit(c.out, out, [&](std::ostream& o) { write_long_csv(ds, o); });
  return 0;
}

int cmd_truth(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::vector<TrueEffects> truths;
  for (int id : scenarios_or(c, {1, 2, 3, 4, 5, 6, 7, 8, 9})) {
    if (c.truth_source == "published") {
      truths.push_back(published_truth(id));
    } else {
      truths.push_back(true_effects(scenario_spec(id), c.rct_n, SeedSpec{c.seed, 0}, threads_of(c)));
    }
  }
  emit(c.out, out, [&](std::ostream& o) { write_truth_csv(o, truths); });
  return finish({}, err);
}

int cmd_estimate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto ds = input_data(c);
  const MethodConfig mc = method_config(c);
  Outcome outcome;
  std::ostringstream body;
  bool header = true;
  for (Method m : methods_of(c)) {
    EstimateSet est;
    try {
      est = run_method(m, ds, mc);
    } catch (const Error& e) {
      outcome.failed_cells += static_cast<int>(kComparisons.size()) * ds.horizon();
      outcome.errors.push_back({{"method", std::string(label(m))}, {"kind", to_string(e.kind())}, {"message", e.what()}});
      continue;
    }
    if (c.bootstrap > 0) {
      const auto boot = bootstrap_se(
          ds, [&](const LongitudinalDataset& d) { return run_method(m, d, mc); }, c.bootstrap, c.seed, threads_of(c));
      est.se = boot.se;
      if (boot.failures > 0) {
        outcome.errors.push_back({{"method", std::string(label(m))},
                                  {"kind", "BootstrapFailures"},
                                  {"message", fmt::format("{} of {} resamples failed", boot.failures, c.bootstrap)}});
      }
    }
    for (auto s : est.status) {
      if (s != CellStatus::ok) ++outcome.empty_cells;
    }
    std::ostringstream one;
    write_estimates_csv(one, est);
    std::string text = one.str();
    if (!header) text.erase(0, text.find('\n') + 1);
    header = false;
    body << text;
  }
  emit(c.out, out, [&](std::ostream& o) { o << body.str(); });
  return finish(outcome, err);
}

int cmd_weights(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto ds = input_data(c);
  std::vector<WeightDiagnostics> diagnostics;
  if (c.censoring.empty()) {
    const int start = 0;
    const TrialRows rows = trial_rows(ds, std::span<const int>(&start, 1));
    WeightSeries w = stabilized_weights(fit_numerator(ds, rows), fit_propensity(ds, rows));
    if (c.truncation) w = truncate(w, c.truncation->first, c.truncation->second);
    diagnostics = w.diagnostics;
  } else {
    CensoringMode mode = CensoringMode::cumulative;
    if (c.censoring == "forward") {
      mode = CensoringMode::forward;
    } else if (c.censoring != "cumulative") {
      throw Error(ErrorKind::unknown_key, fmt::format("censoring '{}' (valid: cumulative, forward)", c.censoring));
    }
    diagnostics = censoring_weights(ds, mode).diagnostics;
  }
  emit(c.out, out, [&](std::ostream& o) { write_weights_csv(o, diagnostics); });
  return finish({}, err);
}

int cmd_study(const RunConfig& c, std::ostream& out, std::ostream& err, bool reproduce) {
  StudyConfig sc;
  sc.scenarios = scenarios_or(c, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  sc.methods = reproduce && c.methods.empty() ? std::vector<Method>{Method::iptw, Method::censor, Method::seqtrial,
                                                                    Method::gformula, Method::gest}
                                              : methods_of(c);
  sc.n_sim = c.n_sim;
  sc.n = c.n;
  sc.master_seed = c.seed;
  sc.method_config = method_config(c);
  sc.threads = threads_of(c);
  sc.progress = [&err](int done, int total) {
    if (done % 10 == 0 || done == total) err << fmt::format("\r{}/{} datasets", done, total) << std::flush;
  };
  const ReplicationTable table = run_study(sc);
  err << '\n';

  std::map<int, TrueEffects> truth;
  std::vector<TrueEffects> truth_list;
  for (int id : sc.scenarios) {
    truth[id] = c.truth_source == "published"
                    ? published_truth(id)
                    : true_effects(scenario_spec(id), c.rct_n, SeedSpec{c.seed, 0}, sc.threads);
    truth_list.push_back(truth[id]);
  }
  const PerformanceReport report = performance(table, truth);

  const std::filesystem::path dir = c.out.empty() ? std::filesystem::path(reproduce ? "reproduce_out" : "study_out")
                                                  : std::filesystem::path(c.out);
  emit_file(dir / "raw.csv", [&](std::ostream& o) { write_raw_csv(o, table); });
  emit_file(dir / "report.csv", [&](std::ostream& o) { write_report_csv(o, report); });
  emit_file(dir / "truth.csv", [&](std::ostream& o) { write_truth_csv(o, truth_list); });
  std::string svg_dir = c.svg;
  if (reproduce && svg_dir.empty()) svg_dir = (dir / "figures").string();
  if (!svg_dir.empty()) write_figures(report, svg_dir);
  out << fmt::format("wrote {} replication rows and {} report rows to {}\n", table.rows.size(), report.rows.size(),
                     dir.string());

  Outcome outcome;
  count_cells(table, outcome);
  return finish(outcome, err);
}

}  // namespace

std::vector<int> parse_scenario_list(const std::string& text) {
  std::vector<int> out;
  const auto range = text.find("..");
  if (range != std::string::npos) {
    const int lo = to_int(text.substr(0, range), "scenario");
    const int hi = to_int(text.substr(range + 2), "scenario");
    for (int id = lo; id <= hi; ++id) out.push_back(id);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_int(item, "scenario"));
  }
  if (out.empty()) throw Error(ErrorKind::invalid_argument, fmt::format("empty scenario list '{}'", text));
  for (int id : out) scenario_spec(id);  // validates the id
  return out;
}

std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& help_out) {
  CLI::App app{"g-methods for multiple time-varying treatments"};
  app.allow_config_extras(false);
  app.set_config("--config", "", "INI config file with one [section] per subcommand");
  app.require_subcommand(1);

  std::map<std::string, RunConfig> configs;
  std::map<std::string, RawOptions> raws;
  for (const char* name : {"simulate", "truth", "estimate", "weights", "study", "reproduce"}) {
    configs[name].command = name;
  }
  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, configs[name], raws[name]);
    return s;
  };

  {
    auto& c = configs["simulate"];
    auto* s = sub("simulate", "Generate one dataset in long CSV format");
    s->add_option("--scenario", raws["simulate"].scenario, "Scenario id 1..9")->join(',');
    s->add_option("--n", c.n, "Individuals");
    s->add_option("--replication", c.replication, "Replication index of the stream");
  }
  {
    auto& c = configs["truth"];
    auto* s = sub("truth", "True effects from large simulated trials");
    s->add_option("--scenario", raws["truth"].scenario, "Scenarios, e.g. 1..9 or 1,3")->join(',');
    s->add_option("--rct-n", c.rct_n, "Individuals per simulated trial arm");
    s->add_option("--source", c.truth_source, "computed or published")->check(CLI::IsMember({"computed", "published"}));
  }
  {
    auto& c = configs["estimate"];
    auto* s = sub("estimate", "Estimate all comparisons on one dataset");
    s->add_option("--data", c.data, "Long-format CSV (id,time,a,b,l,y[,censored])");
    s->add_option("--scenario", raws["estimate"].scenario, "Simulate this scenario when --data is absent")->join(',');
    s->add_option("--n", c.n, "Individuals when simulating");
    s->add_option("--replication", c.replication, "Replication index when simulating");
    s->add_option("--bootstrap", c.bootstrap, "Bootstrap resamples for standard errors (0: none)");
    add_estimator_options(s, c, raws["estimate"]);
  }
  {
    auto& c = configs["weights"];
    auto* s = sub("weights", "Weight diagnostics per time");
    s->add_option("--data", c.data, "Long-format CSV");
    s->add_option("--scenario", raws["weights"].scenario, "Simulate this scenario when --data is absent")->join(',');
    s->add_option("--n", c.n, "Individuals when simulating");
    s->add_flag("--diagnostics", c.diagnostics, "Emit time,mean_w,max_w,ess (the default output)");
    s->add_option("--truncate", raws["weights"].truncate, "Truncate at percentiles lo,hi (bare flag: 10,90)")
        ->expected(0, 2)
        ->join(',')
        ->default_str("10,90");
    s->add_option("--censoring", c.censoring, "Censoring weights instead: cumulative or forward");
  }
  for (const char* name : {"study", "reproduce"}) {
    auto& c = configs[name];
    auto* s = sub(name, std::string(name) == "study" ? "Run the simulation study and performance report"
                                                     : "Run the full scenario panel and write report and figures");
    s->add_option("--scenario", raws[name].scenario, "Scenarios, e.g. 1..9")->join(',');
    s->add_option("--n", c.n, "Individuals per dataset");
    s->add_option("--nsim", c.n_sim, "Replications per scenario");
    s->add_option("--rct-n", c.rct_n, "Individuals per arm for the truth");
    s->add_option("--truth", c.truth_source, "computed or published")->check(CLI::IsMember({"computed", "published"}));
    s->add_option("--svg", c.svg, "Directory for SVG figures");
    add_estimator_options(s, c, raws[name]);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    help_out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp& e) {
    help_out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ConversionError& e) {
    throw Error(ErrorKind::type_mismatch, e.what());
  } catch (const CLI::ValidationError& e) {
    throw Error(ErrorKind::type_mismatch, e.what());
  } catch (const CLI::ConfigError& e) {
    throw Error(ErrorKind::unknown_key, e.what());
  } catch (const CLI::ExtrasError& e) {
    throw Error(ErrorKind::unknown_key, e.what());
  } catch (const CLI::FileError& e) {
    throw Error(ErrorKind::io_error, e.what());
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorKind::invalid_argument, e.what());
  }

  const std::string name = app.get_subcommands().front()->get_name();
  RunConfig c = configs[name];
  const RawOptions& raw = raws[name];
  if (!raw.scenario.empty()) c.scenarios = parse_scenario_list(raw.scenario);
  if (!raw.methods.empty()) {
    std::stringstream ss(raw.methods);
    std::string item;
    while (std::getline(ss, item, ',')) {
      parse_method(item);
      c.methods.push_back(item);
    }
  }
  if (!raw.truncate.empty()) c.truncation = parse_truncation(raw.truncate);
  if (c.n < 1) throw Error(ErrorKind::invalid_argument, "n must be >= 1");
  if (c.n_sim < 2 && name == "study") throw Error(ErrorKind::invalid_argument, "nsim must be >= 2");
  method_config(c);  // validates the MSM options
  return c;
}

int run_command(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.command == "simulate") return cmd_simulate(c, out, err);
  if (c.command == "truth") return cmd_truth(c, out, err);
  if (c.command == "estimate") return cmd_estimate(c, out, err);
  if (c.command == "weights") return cmd_weights(c, out, err);
  if (c.command == "study") return cmd_study(c, out, err, false);
  if (c.command == "reproduce") return cmd_study(c, out, err, true);
  throw Error(ErrorKind::unknown_key, fmt::format("command '{}'", c.command));
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const auto config = parse_config(args, std::cout);
    if (!config) return 0;
    return run_command(*config, std::cout, std::cerr);
  } catch (const Error& e) {
    nlohmann::json summary{{"status", "error"}, {"kind", to_string(e.kind())}, {"message", e.what()}};
    std::cerr << summary.dump() << '\n';
    return 2;
  }
}

}  // namespace gmethods
