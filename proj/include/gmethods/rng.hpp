#pragma once

#include <array>
#include <cstdint>

namespace gmethods {

// Stream families. Each family gets an independent tree of streams so that,
// e.g., bootstrap draws never alias the observational data.
enum class StreamPurpose : std::uint64_t {
  observational = 1,
  truth = 2,
  bootstrap = 3,
  gformula = 4,
};

// Full key of one random stream. Streams are a pure function of the key, so
// results never depend on evaluation order or thread scheduling.
struct StreamKey {
  StreamPurpose purpose = StreamPurpose::observational;
  std::uint64_t master_seed = 0;
  std::uint64_t scenario = 0;
  std::uint64_t replication = 0;
  std::uint64_t individual = 0;
};

std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256++ seeded by SplitMix64 over the key fields. Uniforms use the top
// 53 bits; normals use the Marsaglia polar method (pairs are cached).
class Rng {
 public:
  explicit Rng(const StreamKey& key);
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // [0, 1)
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, bound), bound > 0; unbiased by rejection.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gmethods
