#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gmethods {

// Joint status of the two binary treatments at one time point.
enum class Combo : std::uint8_t { nil = 0, a_only = 1, b_only = 2, both = 3 };

inline constexpr int kComboCount = 4;
inline constexpr std::array<Combo, 4> kCombos = {Combo::nil, Combo::a_only, Combo::b_only,
                                                 Combo::both};

constexpr Combo encode_combo(bool a, bool b) noexcept {
  return static_cast<Combo>(static_cast<int>(a) + 2 * static_cast<int>(b));
}

constexpr std::pair<int, int> decode_combo(Combo z) noexcept {
  const int v = static_cast<int>(z);
  return {v & 1, (v >> 1) & 1};
}

constexpr int index(Combo z) noexcept { return static_cast<int>(z); }

// Throws invalid_argument outside 0..3.
Combo combo_from_int(int value);

std::string_view label(Combo z);

enum class Comparison : std::uint8_t { a_vs_nil, b_vs_nil, a_vs_b, ab_vs_nil, ab_vs_a, ab_vs_b };

inline constexpr std::array<Comparison, 6> kComparisons = {
    Comparison::a_vs_nil,  Comparison::b_vs_nil, Comparison::a_vs_b,
    Comparison::ab_vs_nil, Comparison::ab_vs_a,  Comparison::ab_vs_b};

// "A-0", "B-0", "A-B", "AB-0", "AB-A", "AB-B"
std::string_view label(Comparison c);
Comparison parse_comparison(std::string_view text);

// (minuend, subtrahend) strategies of a comparison.
constexpr std::pair<Combo, Combo> arms(Comparison c) noexcept {
  switch (c) {
    case Comparison::a_vs_nil: return {Combo::a_only, Combo::nil};
    case Comparison::b_vs_nil: return {Combo::b_only, Combo::nil};
    case Comparison::a_vs_b: return {Combo::a_only, Combo::b_only};
    case Comparison::ab_vs_nil: return {Combo::both, Combo::nil};
    case Comparison::ab_vs_a: return {Combo::both, Combo::a_only};
    case Comparison::ab_vs_b: return {Combo::both, Combo::b_only};
  }
  return {Combo::nil, Combo::nil};
}

struct EstimandId {
  Comparison comparison = Comparison::a_vs_nil;
  int horizon = 1;

  auto operator<=>(const EstimandId&) const = default;
};

// Comparison-major flat index used by every per-estimand vector in the library.
constexpr int estimand_index(EstimandId id, int horizons) noexcept {
  return static_cast<int>(id.comparison) * horizons + (id.horizon - 1);
}

std::vector<EstimandId> all_estimands(int horizons);

// Raw storage behind a dataset. Arrays are individual-major with horizon+1
// time slots; covariates add an innermost dimension of `width`.
struct PanelColumns {
  int horizon = 0;
  int width = 1;
  std::vector<std::string> ids;
  // Last time with an observed outcome; == horizon for complete follow-up.
  std::vector<int> last_observed;
  std::vector<std::uint8_t> a;
  std::vector<std::uint8_t> b;
  std::vector<double> l;
  std::vector<double> y;
  bool has_censoring = false;

  int size() const { return static_cast<int>(ids.size()); }
  void resize(int n, int horizon_, int width_);
};

// Person x time panel of two binary treatments, a covariate vector L and a
// continuous outcome Y. Treatment times are 0..horizon-1; outcomes Y_0..Y_horizon.
// Immutable once constructed.
class LongitudinalDataset {
 public:
  explicit LongitudinalDataset(PanelColumns columns);

  int size() const { return cols_.size(); }
  int horizon() const { return cols_.horizon; }
  int covariate_width() const { return cols_.width; }
  bool has_censoring() const { return cols_.has_censoring; }

  const std::string& id(int i) const { return cols_.ids[static_cast<std::size_t>(i)]; }
  int last_observed(int i) const { return cols_.last_observed[static_cast<std::size_t>(i)]; }

  bool outcome_observed(int i, int t) const { return t <= last_observed(i); }
  bool treatment_observed(int i, int t) const {
    return t < horizon() && t <= last_observed(i);
  }
  // C_t: 1 once the individual is censored by time t.
  bool censored(int i, int t) const { return t > last_observed(i); }

  int a(int i, int t) const { return cols_.a[slot(i, t)]; }
  int b(int i, int t) const { return cols_.b[slot(i, t)]; }
  Combo z(int i, int t) const { return encode_combo(a(i, t) != 0, b(i, t) != 0); }
  double y(int i, int t) const { return cols_.y[slot(i, t)]; }
  double l(int i, int t, int k = 0) const {
    return cols_.l[slot(i, t) * static_cast<std::size_t>(cols_.width) + static_cast<std::size_t>(k)];
  }
  std::span<const double> l_vector(int i, int t) const {
    return {cols_.l.data() + slot(i, t) * static_cast<std::size_t>(cols_.width),
            static_cast<std::size_t>(cols_.width)};
  }

  // New dataset made of the listed individuals (repeats allowed); ids are
  // suffixed with the draw position so they stay unique.
  LongitudinalDataset resample(std::span<const int> individuals) const;

  const PanelColumns& columns() const { return cols_; }

 private:
  std::size_t slot(int i, int t) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_.horizon + 1) +
           static_cast<std::size_t>(t);
  }

  PanelColumns cols_;
};

// I(z_j = c) for j = 0..t, c = 1..3, laid out j-major: (j0c1, j0c2, j0c3, j1c1, ...).
std::vector<int> history_indicators(const LongitudinalDataset& ds, int i, int t);

// Long format: header `id,time,a,b,l,y[,censored]`; multiple covariates may be
// given as `l1,l2,...` instead of `l`.
LongitudinalDataset load_long_csv(std::istream& in);
LongitudinalDataset load_long_csv(const std::filesystem::path& path);
void write_long_csv(const LongitudinalDataset& ds, std::ostream& out);

}  // namespace gmethods
