#include "gmethods/oracle.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gmethods/error.hpp"
#include "gmethods/parallel.hpp"

namespace gmethods {

namespace {

void fill_contrasts(TrueEffects& out) {
  const int T = out.horizon;
  out.theta.assign(static_cast<std::size_t>(kComparisons.size()) * static_cast<std::size_t>(T), 0.0);
  for (auto c : kComparisons) {
    const auto [plus, minus] = arms(c);
    for (int h = 1; h <= T; ++h) {
      out.theta[static_cast<std::size_t>(estimand_index({c, h}, T))] =
          out.arm_means[static_cast<std::size_t>(index(plus))][static_cast<std::size_t>(h - 1)] -
          out.arm_means[static_cast<std::size_t>(index(minus))][static_cast<std::size_t>(h - 1)];
    }
  }
}

// Per-chunk running sums; merged in chunk order so the result does not depend
// on the worker count.
struct ArmSums {
  std::array<std::vector<double>, 4> sum;
  std::array<std::vector<double>, 4> sum_sq;
};

constexpr long long kChunk = 1 << 15;

}  // namespace

double TrueEffects::at(EstimandId id) const {
  if (id.horizon < 1 || id.horizon > horizon) {
    throw Error(ErrorKind::index_out_of_range, fmt::format("horizon {} outside 1..{}", id.horizon, horizon));
  }
  return theta[static_cast<std::size_t>(estimand_index(id, horizon))];
}

double TrueEffects::se(EstimandId id) const {
  if (mc_se.empty()) return 0.0;
  if (id.horizon < 1 || id.horizon > horizon) {
    throw Error(ErrorKind::index_out_of_range, fmt::format("horizon {} outside 1..{}", id.horizon, horizon));
  }
  return mc_se[static_cast<std::size_t>(estimand_index(id, horizon))];
}

TrueEffects true_effects(const ScenarioSpec& spec, long long rct_n, SeedSpec seed, int threads) {
  if (rct_n < 10000) throw Error(ErrorKind::invalid_argument, fmt::format("rct_n {} < 10000", rct_n));
  const int T = spec.horizon;
  const auto slots = static_cast<std::size_t>(T);
  std::array<Strategy, 4> strategies;
  for (auto z : kCombos) strategies[static_cast<std::size_t>(index(z))] = Strategy::sustained(z, T);

  const auto chunks = static_cast<std::size_t>((rct_n + kChunk - 1) / kChunk);
  std::vector<ArmSums> partial(chunks);
  parallel_for(
      chunks,
      [&](std::size_t chunk) {
        ArmSums& acc = partial[chunk];
        for (std::size_t k = 0; k < 4; ++k) {
          acc.sum[k].assign(slots, 0.0);
          acc.sum_sq[k].assign(slots, 0.0);
        }
        IndividualPath path;
        const long long begin = static_cast<long long>(chunk) * kChunk;
        const long long end = std::min(rct_n, begin + kChunk);
        for (long long i = begin; i < end; ++i) {
          for (std::size_t k = 0; k < 4; ++k) {
            Rng rng(truth_key(spec, seed, static_cast<int>(i)));
            simulate_individual(spec, rng, &strategies[k], path);
            for (std::size_t h = 0; h < slots; ++h) {
              const double y = path.y[h + 1];
              acc.sum[k][h] += y;
              acc.sum_sq[k][h] += y * y;
            }
          }
        }
      },
      threads);

  TrueEffects out;
  out.scenario = spec.id;
  out.horizon = T;
  out.rct_n = rct_n;
  std::array<std::vector<double>, 4> variance;
  const double n = static_cast<double>(rct_n);
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> sum(slots, 0.0), sum_sq(slots, 0.0);
    for (const auto& p : partial) {
      for (std::size_t h = 0; h < slots; ++h) {
        sum[h] += p.sum[k][h];
        sum_sq[h] += p.sum_sq[k][h];
      }
    }
    out.arm_means[k].resize(slots);
    variance[k].resize(slots);
    for (std::size_t h = 0; h < slots; ++h) {
      const double mean = sum[h] / n;
      out.arm_means[k][h] = mean;
      variance[k][h] = std::max(0.0, (sum_sq[h] - n * mean * mean) / (n - 1.0));
    }
  }
  fill_contrasts(out);
  out.mc_se.assign(out.theta.size(), 0.0);
  for (auto c : kComparisons) {
    const auto [plus, minus] = arms(c);
    for (int h = 1; h <= T; ++h) {
      const auto hs = static_cast<std::size_t>(h - 1);
      out.mc_se[static_cast<std::size_t>(estimand_index({c, h}, T))] =
          std::sqrt(variance[static_cast<std::size_t>(index(plus))][hs] / n +
                    variance[static_cast<std::size_t>(index(minus))][hs] / n);
    }
  }
  return out;
}

TrueEffects analytic_effects(const ScenarioSpec& spec) {
  const int T = spec.horizon;
  TrueEffects out;
  out.scenario = spec.id;
  out.horizon = T;
  for (auto z : kCombos) {
    const Strategy s = Strategy::sustained(z, T);
    std::vector<std::uint8_t> a(s.a), b(s.b);
    a.push_back(0);
    b.push_back(0);
    // E[L_0] = E[Y_0] = 0
    double el = 0.0;
    double ey = 0.0;
    double ey_prev = 0.0;  // E[Y_{t-1}], which drives L_t
    auto& means = out.arm_means[static_cast<std::size_t>(index(z))];
    for (int t = 0; t < T; ++t) {
      if (t > 0) {
        const ConfounderModel& c = spec.confounder;
        const auto p = static_cast<std::size_t>(t - 1);
        el = c.l_lag * el + c.a_lag * a[p] + c.b_lag * b[p] + c.y_lag * ey_prev;
      }
      ey_prev = ey;
      ey = outcome_mean(spec.outcome, t, el, ey, a, b);
      means.push_back(ey);
    }
  }
  fill_contrasts(out);
  return out;
}

TrueEffects published_truth(int scenario) {
  if (scenario < 1 || scenario > kScenarioCount) {
    throw Error(ErrorKind::unknown_scenario, fmt::format("scenario {} (valid: 1..{})", scenario, kScenarioCount));
  }
  using Table = std::array<std::array<double, 5>, 6>;
  // Rows: A-0, B-0, A-B, AB-0, AB-A, AB-B
  static const Table base = {{{1.00, 1.11, 1.12, 1.13, 1.13},
                              {0.50, 0.56, 0.57, 0.57, 0.57},
                              {-0.50, -0.55, -0.55, -0.56, -0.56},
                              {1.50, 1.67, 1.69, 1.70, 1.70},
                              {0.50, 0.56, 0.57, 0.57, 0.57},
                              {1.00, 1.11, 1.12, 1.13, 1.13}}};
  static const Table strong_ly = {{{1.00, 1.16, 1.19, 1.20, 1.20},
                                   {0.50, 0.61, 0.64, 0.64, 0.64},
                                   {-0.50, -0.55, -0.56, -0.56, -0.56},
                                   {1.50, 1.77, 1.83, 1.84, 1.84},
                                   {0.50, 0.61, 0.64, 0.64, 0.64},
                                   {1.00, 1.16, 1.19, 1.20, 1.20}}};
  static const Table no_a = {{{0.00, 0.01, 0.01, 0.01, 0.01},
                              {0.50, 0.56, 0.57, 0.57, 0.57},
                              {0.50, 0.55, 0.56, 0.56, 0.56},
                              {0.50, 0.57, 0.58, 0.58, 0.58},
                              {0.50, 0.56, 0.57, 0.57, 0.57},
                              {0.00, 0.01, 0.01, 0.01, 0.01}}};
  static const Table interaction = {{{1.00, 1.11, 1.12, 1.13, 1.13},
                                     {0.50, 0.56, 0.57, 0.57, 0.57},
                                     {-0.50, -0.55, -0.56, -0.56, -0.56},
                                     {1.75, 1.95, 1.97, 1.97, 1.97},
                                     {0.75, 0.84, 0.85, 0.85, 0.85},
                                     {1.25, 1.39, 1.40, 1.40, 1.40}}};
  static const Table history = {{{1.00, 1.31, 1.44, 1.51, 1.52},
                                 {0.50, 0.56, 0.57, 0.57, 0.57},
                                 {-0.50, -0.75, -0.88, -0.94, -0.95},
                                 {1.50, 1.87, 2.01, 2.08, 2.08},
                                 {0.50, 0.56, 0.57, 0.57, 0.57},
                                 {1.00, 1.31, 1.44, 1.51, 1.52}}};
  static const Table decay = {{{1.00, 0.91, 0.70, 0.48, 0.26},
                               {0.50, 0.56, 0.57, 0.57, 0.57},
                               {-0.50, -0.35, -0.14, 0.09, 0.31},
                               {1.50, 1.47, 1.27, 1.05, 0.83},
                               {0.50, 0.56, 0.57, 0.57, 0.57},
                               {1.00, 0.91, 0.70, 0.48, 0.26}}};
  const Table* table = &base;
  switch (scenario) {
    case 3: table = &strong_ly; break;
    case 6: table = &no_a; break;
    case 7: table = &interaction; break;
    case 8: table = &history; break;
    case 9: table = &decay; break;
    default: break;
  }
  TrueEffects out;
  out.scenario = scenario;
  out.horizon = 5;
  out.theta.resize(30);
  for (std::size_t c = 0; c < 6; ++c) {
    // The reference rows store A vs B as B minus A; flip it to A minus B.
    const double sign = kComparisons[c] == Comparison::a_vs_b ? -1.0 : 1.0;
    for (int h = 1; h <= 5; ++h) {
      out.theta[static_cast<std::size_t>(estimand_index({kComparisons[c], h}, 5))] =
          sign * (*table)[c][static_cast<std::size_t>(h - 1)];
    }
  }
  return out;
}

}  // namespace gmethods
