#pragma once

#include <random>
#include <sstream>
#include <string>

#include "gmethods/longdata.hpp"
#include "gmethods/simgen.hpp"

namespace gmethods::testing {

inline LongitudinalDataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  return load_long_csv(in);
}

inline LongitudinalDataset scenario_data(int scenario, int n, std::uint64_t replication = 0) {
  return generate(scenario_spec(scenario), n, SeedSpec{6122020, replication});
}

// Copy of ds where each individual still under follow-up drops out before
// each outcome time t >= 1 with probability `rate`, independently of everything.
inline LongitudinalDataset censor_at_random(const LongitudinalDataset& ds, double rate, unsigned seed) {
  PanelColumns cols = ds.columns();
  std::mt19937 gen(seed);
  std::bernoulli_distribution drop(rate);
  for (int i = 0; i < cols.size(); ++i) {
    int last = cols.horizon;
    for (int t = 1; t <= cols.horizon; ++t) {
      if (drop(gen)) {
        last = t - 1;
        break;
      }
    }
    cols.last_observed[static_cast<std::size_t>(i)] = last;
  }
  cols.has_censoring = true;
  return LongitudinalDataset(std::move(cols));
}

}  // namespace gmethods::testing
