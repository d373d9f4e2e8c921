#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gmethods/error.hpp"
#include "gmethods/estimators.hpp"
#include "gmethods/parallel.hpp"
#include "gmethods/rng.hpp"

namespace gmethods {

BootstrapResult bootstrap_se(const LongitudinalDataset& ds,
                             const std::function<EstimateSet(const LongitudinalDataset&)>& method, int replicates,
                             std::uint64_t seed, int threads) {
  if (replicates < 2) throw Error(ErrorKind::invalid_argument, "bootstrap needs at least 2 replicates");
  const auto B = static_cast<std::size_t>(replicates);
  std::vector<std::optional<EstimateSet>> results(B);
  std::vector<std::string> errors(B);
  parallel_for(
      B,
      [&](std::size_t b) {
        Rng rng(StreamKey{StreamPurpose::bootstrap, seed, 0, static_cast<std::uint64_t>(b), 0});
        std::vector<int> draw(static_cast<std::size_t>(ds.size()));
        for (auto& i : draw) i = static_cast<int>(rng.below(static_cast<std::uint64_t>(ds.size())));
        try {
          results[b] = method(ds.resample(draw));
        } catch (const Error& e) {
          errors[b] = e.what();
        }
      },
      threads);

  BootstrapResult out;
  out.replicates = replicates;
  std::size_t cells = 0;
  for (const auto& r : results) {
    if (r) cells = std::max(cells, r->estimate.size());
  }
  std::vector<double> sum(cells, 0.0);
  std::vector<int> count(cells, 0);
  for (std::size_t b = 0; b < B; ++b) {
    if (!results[b]) {
      ++out.failures;
      out.failure_messages.push_back(fmt::format("replicate {}: {}", b, errors[b]));
      continue;
    }
    for (std::size_t k = 0; k < results[b]->estimate.size(); ++k) {
      if (results[b]->status[k] != CellStatus::ok) continue;
      sum[k] += results[b]->estimate[k];
      ++count[k];
    }
  }
  out.se.assign(cells, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < cells; ++k) {
    if (count[k] < 2) continue;
    const double mean = sum[k] / count[k];
    double ss = 0.0;
    for (const auto& r : results) {
      if (r && r->status[k] == CellStatus::ok) ss += (r->estimate[k] - mean) * (r->estimate[k] - mean);
    }
    out.se[k] = std::sqrt(ss / (count[k] - 1));
  }
  return out;
}

}  // namespace gmethods
