#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gmethods/error.hpp"
#include "gmethods/estimators.hpp"

namespace gmethods {

std::string_view label(CellStatus s) {
  switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::empty_arm: return "EmptyArm";
    case CellStatus::failed: return "failed";
  }
  return "?";
}

double EstimateSet::at(EstimandId id) const {
  if (id.horizon < 1 || id.horizon > horizon) {
    throw Error(ErrorKind::index_out_of_range, fmt::format("horizon {} outside 1..{}", id.horizon, horizon));
  }
  const auto k = static_cast<std::size_t>(estimand_index(id, horizon));
  if (status[k] != CellStatus::ok) {
    throw Error(ErrorKind::empty_arm, fmt::format("{} {} at horizon {} is not estimable", method,
                                                  label(id.comparison), id.horizon));
  }
  return estimate[k];
}

CellStatus EstimateSet::status_of(EstimandId id) const {
  return status[static_cast<std::size_t>(estimand_index(id, horizon))];
}

bool EstimateSet::all_ok() const {
  for (auto s : status) {
    if (s != CellStatus::ok) return false;
  }
  return true;
}

EstimateSet contrasts(const StrategyValues& values) {
  const int T = values.horizon;
  for (auto z : kCombos) {
    if (static_cast<int>(values.value[static_cast<std::size_t>(index(z))].size()) < T) {
      throw Error(ErrorKind::missing_strategy, fmt::format("strategy {} has no value at some horizon", label(z)));
    }
  }
  EstimateSet out;
  out.horizon = T;
  out.strategies = values;
  const std::size_t cells = kComparisons.size() * static_cast<std::size_t>(T);
  out.estimate.assign(cells, std::numeric_limits<double>::quiet_NaN());
  out.status.assign(cells, CellStatus::empty_arm);
  for (auto c : kComparisons) {
    const auto [plus, minus] = arms(c);
    for (int h = 1; h <= T; ++h) {
      const double v = values.value[static_cast<std::size_t>(index(plus))][static_cast<std::size_t>(h - 1)] -
                       values.value[static_cast<std::size_t>(index(minus))][static_cast<std::size_t>(h - 1)];
      const auto k = static_cast<std::size_t>(estimand_index({c, h}, T));
      if (std::isfinite(v)) {
        out.estimate[k] = v;
        out.status[k] = CellStatus::ok;
      }
    }
  }
  return out;
}

void require_all_combos(const LongitudinalDataset& ds) {
  std::array<bool, 4> seen{};
  for (int i = 0; i < ds.size(); ++i) {
    for (int t = 0; ds.treatment_observed(i, t); ++t) seen[static_cast<std::size_t>(index(ds.z(i, t)))] = true;
  }
  std::vector<std::string_view> absent;
  for (auto z : kCombos) {
    if (!seen[static_cast<std::size_t>(index(z))]) absent.push_back(label(z));
  }
  if (!absent.empty()) {
    throw Error(ErrorKind::empty_arm, fmt::format("treatment combination(s) never observed: {}", fmt::join(absent, ", ")));
  }
}

std::string_view label(Method m) {
  switch (m) {
    case Method::iptw: return "iptw";
    case Method::censor: return "censor";
    case Method::seqtrial: return "seqtrial";
    case Method::gformula: return "gformula";
    case Method::gest: return "gest";
    case Method::gest_const: return "gest-const";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (auto m : kMethods) {
    if (label(m) == text) return m;
  }
  throw Error(ErrorKind::unknown_key,
              fmt::format("method '{}' (valid: iptw, censor, seqtrial, gformula, gest, gest-const)", text));
}

EstimateSet run_method(Method method, const LongitudinalDataset& ds, const MethodConfig& config) {
  EstimateSet out;
  switch (method) {
    case Method::iptw: out = iptw_msm(ds, config.msm); break;
    case Method::censor: out = censor_and_weight(ds, config.msm); break;
    case Method::seqtrial: out = sequential_trials(ds, config.msm); break;
    case Method::gformula: out = gformula(ds, config.gformula); break;
    case Method::gest: {
      SnmmSpec snmm = config.snmm;
      snmm.blip = BlipStructure::lag_specific;
      out = gestimation(ds, snmm);
      break;
    }
    case Method::gest_const: {
      SnmmSpec snmm = config.snmm;
      snmm.blip = BlipStructure::constant;
      out = gestimation(ds, snmm);
      break;
    }
  }
  out.method = std::string(label(method));
  return out;
}

}  // namespace gmethods
