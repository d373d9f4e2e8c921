#include "gmethods/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "gmethods/error.hpp"

namespace gmethods {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

int parse_int_field(const std::string& text) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::parse_error, fmt::format("expected an integer, got '{}'", text));
  }
  return v;
}

// Reads a header and returns the column position of each required name.
std::map<std::string, std::size_t> read_header(std::istream& in, const std::vector<std::string>& required) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::empty_input, "missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::map<std::string, std::size_t> pos;
  const auto cols = split_csv(line);
  for (std::size_t k = 0; k < cols.size(); ++k) pos[cols[k]] = k;
  for (const auto& name : required) {
    if (!pos.count(name)) throw Error(ErrorKind::missing_column, fmt::format("column '{}' not found", name));
  }
  return pos;
}

const std::string& field(const std::vector<std::string>& row, const std::map<std::string, std::size_t>& pos,
                         const std::string& name) {
  const std::size_t k = pos.at(name);
  if (k >= row.size()) throw Error(ErrorKind::parse_error, fmt::format("row too short for column '{}'", name));
  return row[k];
}

CellStatus parse_status(const std::string& s) {
  for (auto v : {CellStatus::ok, CellStatus::empty_arm, CellStatus::failed}) {
    if (label(v) == s) return v;
  }
  throw Error(ErrorKind::parse_error, fmt::format("unknown status '{}'", s));
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "NA";
  return fmt::format("{}", v);
}

double parse_real_field(std::string_view text) {
  if (text == "NA" || text.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::parse_error, fmt::format("expected a number, got '{}'", text));
  }
  return v;
}

void write_truth_csv(std::ostream& out, const std::vector<TrueEffects>& truths) {
  out << "scenario,comparison,horizon,theta,mc_se\n";
  for (const auto& t : truths) {
    for (const auto& id : all_estimands(t.horizon)) {
      out << fmt::format("{},{},{},{},{}\n", t.scenario, label(id.comparison), id.horizon, format_real(t.at(id)),
                         t.has_mc_se() ? format_real(t.se(id)) : "NA");
    }
  }
}

std::vector<TrueEffects> read_truth_csv(std::istream& in) {
  const auto pos = read_header(in, {"scenario", "comparison", "horizon", "theta", "mc_se"});
  struct Entry {
    EstimandId id;
    double theta;
    double se;
  };
  std::map<int, std::vector<Entry>> by_scenario;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = split_csv(line);
    by_scenario[parse_int_field(field(row, pos, "scenario"))].push_back(
        {{parse_comparison(field(row, pos, "comparison")), parse_int_field(field(row, pos, "horizon"))},
         parse_real_field(field(row, pos, "theta")),
         parse_real_field(field(row, pos, "mc_se"))});
  }
  std::vector<TrueEffects> out;
  for (auto& [scenario, entries] : by_scenario) {
    TrueEffects t;
    t.scenario = scenario;
    t.horizon = 0;
    for (const auto& e : entries) t.horizon = std::max(t.horizon, e.id.horizon);
    const auto cells = kComparisons.size() * static_cast<std::size_t>(t.horizon);
    t.theta.assign(cells, std::numeric_limits<double>::quiet_NaN());
    bool any_se = false;
    for (const auto& e : entries) any_se = any_se || !std::isnan(e.se);
    if (any_se) t.mc_se.assign(cells, std::numeric_limits<double>::quiet_NaN());
    for (const auto& e : entries) {
      const auto k = static_cast<std::size_t>(estimand_index(e.id, t.horizon));
      t.theta[k] = e.theta;
      if (any_se) t.mc_se[k] = e.se;
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_estimates_csv(std::ostream& out, const EstimateSet& est) {
  const bool with_se = !est.se.empty();
  out << (with_se ? "method,comparison,horizon,estimate,se\n" : "method,comparison,horizon,estimate\n");
  for (const auto& id : all_estimands(est.horizon)) {
    const auto k = static_cast<std::size_t>(estimand_index(id, est.horizon));
    out << fmt::format("{},{},{},{}", est.method, label(id.comparison), id.horizon, format_real(est.estimate[k]));
    if (with_se) out << ',' << format_real(est.se[k]);
    out << '\n';
  }
}

void write_weights_csv(std::ostream& out, const std::vector<WeightDiagnostics>& diagnostics) {
  out << "time,mean_w,max_w,ess\n";
  for (const auto& d : diagnostics) {
    out << fmt::format("{},{},{},{}\n", d.time, format_real(d.mean), format_real(d.max), format_real(d.ess));
  }
}

void write_raw_csv(std::ostream& out, const ReplicationTable& table) {
  out << "scenario,replication,method,comparison,horizon,estimate,status,message\n";
  for (const auto& r : table.rows) {
    out << fmt::format("{},{},{},{},{},{},{},{}\n", r.scenario, r.replication, r.method, label(r.id.comparison),
                       r.id.horizon, format_real(r.estimate), label(r.status), quote(r.message));
  }
}

ReplicationTable read_raw_csv(std::istream& in) {
  const auto pos = read_header(in, {"scenario", "replication", "method", "comparison", "horizon", "estimate", "status"});
  ReplicationTable table;
  table.horizon = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = split_csv(line);
    ReplicationRow r;
    r.scenario = parse_int_field(field(row, pos, "scenario"));
    r.replication = parse_int_field(field(row, pos, "replication"));
    r.method = field(row, pos, "method");
    r.id = {parse_comparison(field(row, pos, "comparison")), parse_int_field(field(row, pos, "horizon"))};
    r.estimate = parse_real_field(field(row, pos, "estimate"));
    r.status = parse_status(field(row, pos, "status"));
    if (pos.count("message") && pos.at("message") < row.size()) r.message = row[pos.at("message")];
    table.horizon = std::max(table.horizon, r.id.horizon);
    table.rows.push_back(std::move(r));
  }
  if (table.horizon == 0) table.horizon = 5;
  return table;
}

void write_report_csv(std::ostream& out, const PerformanceReport& report) {
  out << "scenario,method,comparison,horizon,theta,mean,bias,bias_mcse,empse,empse_mcse,n_effective\n";
  for (const auto& r : report.rows) {
    const auto& c = r.cell;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.scenario, r.method, label(r.id.comparison),
                       r.id.horizon, format_real(r.theta), format_real(c.mean), format_real(c.bias),
                       format_real(c.bias_mcse), format_real(c.empse), format_real(c.empse_mcse), c.n_effective);
  }
}

PerformanceReport read_report_csv(std::istream& in) {
  const auto pos = read_header(in, {"scenario", "method", "comparison", "horizon", "theta", "mean", "bias",
                                    "bias_mcse", "empse", "empse_mcse", "n_effective"});
  PerformanceReport report;
  report.horizon = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = split_csv(line);
    PerformanceRow r;
    r.scenario = parse_int_field(field(row, pos, "scenario"));
    r.method = field(row, pos, "method");
    r.id = {parse_comparison(field(row, pos, "comparison")), parse_int_field(field(row, pos, "horizon"))};
    r.theta = parse_real_field(field(row, pos, "theta"));
    r.cell.mean = parse_real_field(field(row, pos, "mean"));
    r.cell.bias = parse_real_field(field(row, pos, "bias"));
    r.cell.bias_mcse = parse_real_field(field(row, pos, "bias_mcse"));
    r.cell.empse = parse_real_field(field(row, pos, "empse"));
    r.cell.empse_mcse = parse_real_field(field(row, pos, "empse_mcse"));
    r.cell.n_effective = parse_int_field(field(row, pos, "n_effective"));
    r.sufficient = r.cell.n_effective >= 2;
    report.horizon = std::max(report.horizon, r.id.horizon);
    report.rows.push_back(std::move(r));
  }
  if (report.horizon == 0) report.horizon = 5;
  return report;
}

void emit_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& emit) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_error, fmt::format("cannot open '{}' for writing", path.string()));
  emit(out);
  out.flush();
  if (!out) throw Error(ErrorKind::io_error, fmt::format("write to '{}' failed", path.string()));
}

}  // namespace gmethods
