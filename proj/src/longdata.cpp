#include "gmethods/longdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "gmethods/error.hpp"

namespace gmethods {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_real(std::string_view s, std::size_t line_no, std::string_view column) {
  if (s.empty() || s == "NA") return std::nullopt;
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorKind::parse_error,
                fmt::format("line {}: column '{}' has non-numeric value '{}'", line_no, column, s));
  }
  return v;
}

std::optional<int> parse_int(std::string_view s, std::size_t line_no, std::string_view column) {
  if (s.empty() || s == "NA") return std::nullopt;
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    // Accept integral reals such as "1.0".
    const auto r = parse_real(s, line_no, column);
    if (r && *r == std::floor(*r) && std::abs(*r) < 1e9) return static_cast<int>(*r);
    throw Error(ErrorKind::parse_error,
                fmt::format("line {}: column '{}' has non-integer value '{}'", line_no, column, s));
  }
  return v;
}

struct RawRow {
  std::size_t line = 0;
  int time = 0;
  std::optional<int> a, b, censored;
  std::vector<std::optional<double>> l;
  std::optional<double> y;
};

}  // namespace

Combo combo_from_int(int value) {
  if (value < 0 || value > 3) {
    throw Error(ErrorKind::invalid_argument, fmt::format("combo code {} outside 0..3", value));
  }
  return static_cast<Combo>(value);
}

std::string_view label(Combo z) {
  switch (z) {
    case Combo::nil: return "0";
    case Combo::a_only: return "A";
    case Combo::b_only: return "B";
    case Combo::both: return "AB";
  }
  return "?";
}

std::string_view label(Comparison c) {
  switch (c) {
    case Comparison::a_vs_nil: return "A-0";
    case Comparison::b_vs_nil: return "B-0";
    case Comparison::a_vs_b: return "A-B";
    case Comparison::ab_vs_nil: return "AB-0";
    case Comparison::ab_vs_a: return "AB-A";
    case Comparison::ab_vs_b: return "AB-B";
  }
  return "?";
}

Comparison parse_comparison(std::string_view text) {
  for (auto c : kComparisons) {
    if (label(c) == text) return c;
  }
  throw Error(ErrorKind::parse_error, fmt::format("unknown comparison '{}'", text));
}

std::vector<EstimandId> all_estimands(int horizons) {
  std::vector<EstimandId> out;
  out.reserve(kComparisons.size() * static_cast<std::size_t>(horizons));
  for (auto c : kComparisons) {
    for (int h = 1; h <= horizons; ++h) out.push_back({c, h});
  }
  return out;
}

void PanelColumns::resize(int n, int horizon_, int width_) {
  horizon = horizon_;
  width = width_;
  const auto cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(horizon_ + 1);
  ids.resize(static_cast<std::size_t>(n));
  last_observed.assign(static_cast<std::size_t>(n), horizon_);
  a.assign(cells, 0);
  b.assign(cells, 0);
  l.assign(cells * static_cast<std::size_t>(width_), kMissing);
  y.assign(cells, kMissing);
}

LongitudinalDataset::LongitudinalDataset(PanelColumns columns) : cols_(std::move(columns)) {
  if (cols_.size() == 0) throw Error(ErrorKind::empty_input, "dataset has no individuals");
  if (cols_.horizon < 1) throw Error(ErrorKind::empty_input, "dataset needs at least one treatment time");
  if (cols_.width < 1) throw Error(ErrorKind::invalid_argument, "covariate width must be >= 1");
  const auto cells = static_cast<std::size_t>(cols_.size()) * static_cast<std::size_t>(cols_.horizon + 1);
  if (cols_.a.size() != cells || cols_.b.size() != cells || cols_.y.size() != cells ||
      cols_.l.size() != cells * static_cast<std::size_t>(cols_.width) ||
      cols_.last_observed.size() != static_cast<std::size_t>(cols_.size())) {
    throw Error(ErrorKind::invalid_argument, "panel column sizes disagree with n x (horizon+1)");
  }
  for (int i = 0; i < size(); ++i) {
    const int last = last_observed(i);
    if (last < 0 || last > horizon()) {
      throw Error(ErrorKind::index_out_of_range,
                  fmt::format("individual '{}': last observed time {} outside 0..{}", id(i), last, horizon()));
    }
    if (!cols_.has_censoring && last != horizon()) {
      throw Error(ErrorKind::non_contiguous_time,
                  fmt::format("individual '{}' stops at t={} before horizon {} and the data has no censoring column",
                              id(i), last, horizon()));
    }
    for (int t = 0; t <= horizon(); ++t) {
      if (a(i, t) > 1 || b(i, t) > 1) {
        throw Error(ErrorKind::non_binary_treatment, fmt::format("individual '{}' at t={}", id(i), t));
      }
      if (outcome_observed(i, t) && !std::isfinite(y(i, t))) {
        throw Error(ErrorKind::parse_error, fmt::format("individual '{}' has no outcome at t={}", id(i), t));
      }
      if (treatment_observed(i, t)) {
        for (int k = 0; k < covariate_width(); ++k) {
          if (!std::isfinite(l(i, t, k))) {
            throw Error(ErrorKind::parse_error,
                        fmt::format("individual '{}' has no covariate value at t={}", id(i), t));
          }
        }
      }
    }
  }
}

LongitudinalDataset LongitudinalDataset::resample(std::span<const int> individuals) const {
  PanelColumns out;
  const int n = static_cast<int>(individuals.size());
  out.resize(n, horizon(), covariate_width());
  out.has_censoring = cols_.has_censoring;
  const auto stride = static_cast<std::size_t>(horizon() + 1);
  const auto lstride = stride * static_cast<std::size_t>(covariate_width());
  for (int r = 0; r < n; ++r) {
    const int i = individuals[static_cast<std::size_t>(r)];
    if (i < 0 || i >= size()) {
      throw Error(ErrorKind::index_out_of_range, fmt::format("individual index {} outside 0..{}", i, size() - 1));
    }
    const auto src = static_cast<std::size_t>(i);
    const auto dst = static_cast<std::size_t>(r);
    out.ids[dst] = fmt::format("{}#{}", id(i), r);
    out.last_observed[dst] = last_observed(i);
    std::copy_n(cols_.a.begin() + static_cast<std::ptrdiff_t>(src * stride), stride,
                out.a.begin() + static_cast<std::ptrdiff_t>(dst * stride));
    std::copy_n(cols_.b.begin() + static_cast<std::ptrdiff_t>(src * stride), stride,
                out.b.begin() + static_cast<std::ptrdiff_t>(dst * stride));
    std::copy_n(cols_.y.begin() + static_cast<std::ptrdiff_t>(src * stride), stride,
                out.y.begin() + static_cast<std::ptrdiff_t>(dst * stride));
    std::copy_n(cols_.l.begin() + static_cast<std::ptrdiff_t>(src * lstride), lstride,
                out.l.begin() + static_cast<std::ptrdiff_t>(dst * lstride));
  }
  return LongitudinalDataset(std::move(out));
}

std::vector<int> history_indicators(const LongitudinalDataset& ds, int i, int t) {
  if (i < 0 || i >= ds.size()) {
    throw Error(ErrorKind::index_out_of_range, fmt::format("individual {} outside 0..{}", i, ds.size() - 1));
  }
  if (t < 0 || t > ds.horizon() - 1 || !ds.treatment_observed(i, t)) {
    throw Error(ErrorKind::index_out_of_range,
                fmt::format("time {} outside the observed treatment times of individual {}", t, i));
  }
  std::vector<int> out(static_cast<std::size_t>(3 * (t + 1)), 0);
  for (int j = 0; j <= t; ++j) {
    const int c = index(ds.z(i, j));
    if (c > 0) out[static_cast<std::size_t>(3 * j + c - 1)] = 1;
  }
  return out;
}

LongitudinalDataset load_long_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (auto f : split(line)) header.emplace_back(f);
    break;
  }
  if (header.empty()) throw Error(ErrorKind::empty_input, "no header row");
  if (!header.empty() && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0) {
    header[0].erase(0, 3);
  }

  auto find = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    return std::nullopt;
  };
  auto require = [&](std::string_view name) {
    auto k = find(name);
    if (!k) throw Error(ErrorKind::missing_column, fmt::format("required column '{}' not in header", name));
    return *k;
  };
  const auto c_id = require("id");
  const auto c_time = require("time");
  const auto c_a = require("a");
  const auto c_b = require("b");
  const auto c_y = require("y");
  const auto c_cens = find("censored");
  std::vector<std::size_t> c_l;
  if (auto k = find("l")) {
    c_l.push_back(*k);
  } else {
    for (int j = 1;; ++j) {
      auto kj = find(fmt::format("l{}", j));
      if (!kj) break;
      c_l.push_back(*kj);
    }
  }
  if (c_l.empty()) throw Error(ErrorKind::missing_column, "required column 'l' (or l1, l2, ...) not in header");
  const int width = static_cast<int>(c_l.size());

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<RawRow>> rows;
  int max_time = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::parse_error,
                  fmt::format("line {}: {} fields, header has {}", line_no, fields.size(), header.size()));
    }
    RawRow r;
    r.line = line_no;
    const auto time = parse_int(fields[c_time], line_no, "time");
    if (!time || *time < 0) throw Error(ErrorKind::parse_error, fmt::format("line {}: invalid time", line_no));
    r.time = *time;
    r.a = parse_int(fields[c_a], line_no, "a");
    r.b = parse_int(fields[c_b], line_no, "b");
    if ((r.a && (*r.a < 0 || *r.a > 1)) || (r.b && (*r.b < 0 || *r.b > 1))) {
      throw Error(ErrorKind::non_binary_treatment,
                  fmt::format("line {}: treatment values must be 0 or 1", line_no));
    }
    for (auto k : c_l) r.l.push_back(parse_real(fields[k], line_no, header[k]));
    r.y = parse_real(fields[c_y], line_no, "y");
    if (c_cens) {
      r.censored = parse_int(fields[*c_cens], line_no, "censored");
      if (r.censored && *r.censored != 0 && *r.censored != 1) {
        throw Error(ErrorKind::parse_error, fmt::format("line {}: censored must be 0 or 1", line_no));
      }
    }
    std::string id(fields[c_id]);
    if (id.empty()) throw Error(ErrorKind::parse_error, fmt::format("line {}: empty id", line_no));
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(std::move(r));
    max_time = std::max(max_time, *time);
  }
  if (order.empty()) throw Error(ErrorKind::empty_input, "no data rows");
  if (max_time < 1) throw Error(ErrorKind::empty_input, "need at least times 0 and 1");

  const int horizon = max_time;
  PanelColumns cols;
  cols.resize(static_cast<int>(order.size()), horizon, width);
  cols.has_censoring = c_cens.has_value();
  const auto stride = static_cast<std::size_t>(horizon + 1);

  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& rs = rows[order[i]];
    std::stable_sort(rs.begin(), rs.end(), [](const RawRow& x, const RawRow& y) { return x.time < y.time; });
    for (std::size_t k = 1; k < rs.size(); ++k) {
      if (rs[k].time == rs[k - 1].time) {
        throw Error(ErrorKind::duplicate_row,
                    fmt::format("id '{}' has two rows at time {} (lines {} and {})", order[i], rs[k].time,
                                rs[k - 1].line, rs[k].line));
      }
    }
    for (std::size_t k = 0; k < rs.size(); ++k) {
      if (rs[k].time != static_cast<int>(k)) {
        throw Error(ErrorKind::non_contiguous_time,
                    fmt::format("id '{}' jumps to time {} where {} was expected (line {})", order[i],
                                rs[k].time, k, rs[k].line));
      }
    }
    cols.ids[i] = order[i];
    int last = static_cast<int>(rs.size()) - 1;
    for (std::size_t k = 0; k < rs.size(); ++k) {
      const auto& r = rs[k];
      if (r.censored.value_or(0) == 1) {
        if (k + 1 != rs.size()) {
          throw Error(ErrorKind::parse_error,
                      fmt::format("id '{}' has rows after being censored at time {}", order[i], r.time));
        }
        if (r.time == 0) {
          throw Error(ErrorKind::parse_error, fmt::format("id '{}' is censored at baseline", order[i]));
        }
        last = r.time - 1;
        break;
      }
      const bool terminal = r.time == horizon;
      const bool needs_treatment = !terminal;
      if (!r.y) throw Error(ErrorKind::parse_error, fmt::format("line {}: missing outcome", r.line));
      const auto slot = i * stride + static_cast<std::size_t>(r.time);
      cols.y[slot] = *r.y;
      if (needs_treatment && (!r.a || !r.b)) {
        throw Error(ErrorKind::parse_error, fmt::format("line {}: missing treatment", r.line));
      }
      cols.a[slot] = static_cast<std::uint8_t>(r.a.value_or(0));
      cols.b[slot] = static_cast<std::uint8_t>(r.b.value_or(0));
      for (int j = 0; j < width; ++j) {
        const auto& v = r.l[static_cast<std::size_t>(j)];
        if (needs_treatment && !v) {
          throw Error(ErrorKind::parse_error, fmt::format("line {}: missing covariate", r.line));
        }
        cols.l[slot * static_cast<std::size_t>(width) + static_cast<std::size_t>(j)] = v.value_or(kMissing);
      }
    }
    cols.last_observed[i] = last;
  }
  return LongitudinalDataset(std::move(cols));
}

LongitudinalDataset load_long_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, fmt::format("cannot open '{}'", path.string()));
  return load_long_csv(in);
}

void write_long_csv(const LongitudinalDataset& ds, std::ostream& out) {
  const int width = ds.covariate_width();
  std::string header = "id,time,a,b,";
  if (width == 1) {
    header += "l";
  } else {
    for (int k = 1; k <= width; ++k) header += fmt::format("{}l{}", k > 1 ? "," : "", k);
  }
  header += ",y";
  if (ds.has_censoring()) header += ",censored";
  out << header << '\n';

  fmt::memory_buffer buf;
  for (int i = 0; i < ds.size(); ++i) {
    const int last = ds.last_observed(i);
    for (int t = 0; t <= last; ++t) {
      buf.clear();
      fmt::format_to(std::back_inserter(buf), "{},{},", ds.id(i), t);
      if (ds.treatment_observed(i, t)) {
        fmt::format_to(std::back_inserter(buf), "{},{}", ds.a(i, t), ds.b(i, t));
        for (int k = 0; k < width; ++k) fmt::format_to(std::back_inserter(buf), ",{}", ds.l(i, t, k));
      } else {
        fmt::format_to(std::back_inserter(buf), ",");
        for (int k = 0; k < width; ++k) fmt::format_to(std::back_inserter(buf), ",");
      }
      fmt::format_to(std::back_inserter(buf), ",{}", ds.y(i, t));
      if (ds.has_censoring()) fmt::format_to(std::back_inserter(buf), ",0");
      buf.push_back('\n');
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (ds.has_censoring() && last < ds.horizon()) {
      out << ds.id(i) << ',' << last + 1 << ",,";
      for (int k = 0; k < width; ++k) out << ',';
      out << ",,1\n";
    }
  }
}

}  // namespace gmethods
