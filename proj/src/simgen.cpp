#include "gmethods/simgen.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gmethods/error.hpp"

namespace gmethods {

double expit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ScenarioSpec scenario_spec(int id) {
  if (id < 1 || id > kScenarioCount) {
    throw Error(ErrorKind::unknown_scenario, fmt::format("scenario {} (valid: 1..{})", id, kScenarioCount));
  }
  ScenarioSpec s;
  s.id = id;
  s.treat_a = {0.0, 0.30, 1.80, 0.0, 0.12};
  s.treat_b = {0.0, 0.30, 0.0, 1.80, 0.12};
  s.outcome = OutcomeModel{};
  switch (id) {
    case 1:
      s.description = "baseline scenario";
      break;
    case 2:
      s.description = "low prevalence of A";
      s.treat_a.intercept = -2.3;
      break;
    case 3:
      s.description = "strong L-Y association";
      s.outcome.l = 0.30;
      break;
    case 4:
      s.description = "strong L-A association";
      s.treat_a.l = 1.00;
      break;
    case 5:
      s.description = "dependence between A and B";
      s.treat_a.b_lag = -0.2;
      s.treat_b.a_lag = -0.2;
      break;
    case 6:
      s.description = "A has no effect on Y";
      s.outcome.variant = OutcomeVariant::no_a;
      s.outcome.a = 0.0;
      break;
    case 7:
      // Y coefficient stays at 0.1 here; 0.01 misses the reference truth
      // (AB-0 = 1.95 at year 2).
      s.description = "A-B interaction affects Y";
      s.outcome.variant = OutcomeVariant::interaction;
      s.outcome.ab = 0.25;
      break;
    case 8:
      s.description = "Y depends on treatment history";
      s.outcome.variant = OutcomeVariant::history;
      s.outcome.a_lags = {0.2, 0.1, 0.05, 0.001};
      break;
    case 9:
      s.description = "decreasing effects over time";
      s.outcome.variant = OutcomeVariant::decay;
      s.outcome.decay = 0.2;
      break;
  }
  return s;
}

Strategy Strategy::sustained(Combo z, int horizon) {
  const auto [a, b] = decode_combo(z);
  Strategy s;
  s.a.assign(static_cast<std::size_t>(horizon), static_cast<std::uint8_t>(a));
  s.b.assign(static_cast<std::size_t>(horizon), static_cast<std::uint8_t>(b));
  return s;
}

double outcome_mean(const OutcomeModel& m, int t, double l_t, double y_t, std::span<const std::uint8_t> a,
                    std::span<const std::uint8_t> b) {
  const double at = a[static_cast<std::size_t>(t)];
  const double bt = b[static_cast<std::size_t>(t)];
  double mean = m.intercept + m.l * l_t + m.b * bt + m.ab * at * bt + m.y * y_t;
  double a_coef = m.a;
  if (m.decay != 0.0) {
    // Years already spent on A before t. Counting A_1..A_t instead gives the
    // same sustained-strategy truths but makes a first year on A worth less
    // when it starts after time 0.
    double cum = 0.0;
    for (int j = 0; j < t; ++j) cum += a[static_cast<std::size_t>(j)];
    a_coef -= m.decay * cum;
  }
  mean += a_coef * at;
  for (std::size_t k = 1; k <= m.a_lags.size(); ++k) {
    if (static_cast<std::size_t>(t) < k) break;
    mean += m.a_lags[k - 1] * a[static_cast<std::size_t>(t) - k];
  }
  return mean;
}

void simulate_individual(const ScenarioSpec& spec, Rng& rng, const Strategy* fixed, IndividualPath& out) {
  const int T = spec.horizon;
  const auto slots = static_cast<std::size_t>(T + 1);
  out.l.assign(slots, 0.0);
  out.y.assign(slots, 0.0);
  out.a.assign(slots, 0);
  out.b.assign(slots, 0);

  out.l[0] = rng.normal();
  out.y[0] = rng.normal(spec.baseline.y_on_l * out.l[0], 1.0);
  for (int t = 0; t < T; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    double eta_a = spec.treat_a.intercept;
    double eta_b = spec.treat_b.intercept;
    if (t == 0) {
      eta_a += spec.treat_a.l * out.l[0];
      eta_b += spec.treat_b.l * out.l[0];
    } else {
      const ConfounderModel& c = spec.confounder;
      const double mean_l = c.l_lag * out.l[ts - 1] + c.a_lag * out.a[ts - 1] + c.b_lag * out.b[ts - 1] +
                            c.y_lag * out.y[ts - 1];
      out.l[ts] = rng.normal(mean_l, 1.0);
      const TreatmentModel& ta = spec.treat_a;
      const TreatmentModel& tb = spec.treat_b;
      eta_a += ta.l * out.l[ts] + ta.a_lag * out.a[ts - 1] + ta.b_lag * out.b[ts - 1] + ta.y_lag * out.y[ts - 1];
      eta_b += tb.l * out.l[ts] + tb.a_lag * out.a[ts - 1] + tb.b_lag * out.b[ts - 1] + tb.y_lag * out.y[ts - 1];
    }
    const double ua = rng.uniform();
    const double ub = rng.uniform();
    if (fixed != nullptr) {
      out.a[ts] = fixed->a[ts];
      out.b[ts] = fixed->b[ts];
    } else {
      out.a[ts] = ua < expit(eta_a) ? 1 : 0;
      out.b[ts] = ub < expit(eta_b) ? 1 : 0;
    }
    out.y[ts + 1] = rng.normal(outcome_mean(spec.outcome, t, out.l[ts], out.y[ts], out.a, out.b), 1.0);
  }
}

StreamKey observational_key(const ScenarioSpec& spec, SeedSpec seed, int individual) {
  return {StreamPurpose::observational, seed.master_seed, static_cast<std::uint64_t>(spec.id), seed.replication,
          static_cast<std::uint64_t>(individual)};
}

StreamKey truth_key(const ScenarioSpec& spec, SeedSpec seed, int individual) {
  return {StreamPurpose::truth, seed.master_seed, static_cast<std::uint64_t>(spec.id), seed.replication,
          static_cast<std::uint64_t>(individual)};
}

namespace {

LongitudinalDataset build(const ScenarioSpec& spec, int n, SeedSpec seed, const Strategy* fixed) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "n must be >= 1");
  if (spec.horizon < 1) throw Error(ErrorKind::invalid_argument, "horizon must be >= 1");
  if (fixed != nullptr && (static_cast<int>(fixed->a.size()) < spec.horizon ||
                           static_cast<int>(fixed->b.size()) < spec.horizon)) {
    throw Error(ErrorKind::invalid_argument, "strategy shorter than the horizon");
  }
  PanelColumns cols;
  cols.resize(n, spec.horizon, 1);
  const auto slots = static_cast<std::size_t>(spec.horizon + 1);
  IndividualPath path;
  for (int i = 0; i < n; ++i) {
    Rng rng(fixed == nullptr ? observational_key(spec, seed, i) : truth_key(spec, seed, i));
    simulate_individual(spec, rng, fixed, path);
    cols.ids[static_cast<std::size_t>(i)] = std::to_string(i + 1);
    cols.last_observed[static_cast<std::size_t>(i)] = spec.horizon;
    const std::size_t base = static_cast<std::size_t>(i) * slots;
    for (std::size_t t = 0; t < slots; ++t) {
      cols.a[base + t] = path.a[t];
      cols.b[base + t] = path.b[t];
      cols.l[base + t] = path.l[t];
      cols.y[base + t] = path.y[t];
    }
    // L at the final outcome time is never generated.
    cols.l[base + slots - 1] = std::numeric_limits<double>::quiet_NaN();
  }
  return LongitudinalDataset(std::move(cols));
}

}  // namespace

LongitudinalDataset generate(const ScenarioSpec& spec, int n, SeedSpec seed) {
  return build(spec, n, seed, nullptr);
}

LongitudinalDataset generate_counterfactual(const ScenarioSpec& spec, const Strategy& strategy, int n,
                                            SeedSpec seed) {
  return build(spec, n, seed, &strategy);
}

}  // namespace gmethods
