#pragma once

// Driven families of piecewise-linear expanding interval maps and the
// random compositions they generate on X = [0,1).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qspec/errors.hpp"
#include "qspec/rng.hpp"

namespace qspec {

/// Half-open interval [lo, hi).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double length() const noexcept { return hi - lo; }
  [[nodiscard]] bool contains(double x) const noexcept { return lo <= x && x < hi; }
};

/// One affine piece x -> slope * x + intercept on `domain`.
struct Branch {
  Interval domain;
  double slope = 0.0;
  double intercept = 0.0;

  [[nodiscard]] double apply(double x) const noexcept { return slope * x + intercept; }
  /// Image of the domain, oriented so that lo <= hi.
  [[nodiscard]] Interval image() const noexcept;
};

struct Preimage {
  double x = 0.0;
  double weight = 0.0;  // 1 / |slope|
};

/// Piecewise-linear map of [0,1). Construction checks that the branch
/// domains partition [0,1) and that every branch image lies in [0,1].
/// Expansion is a family-level property, checked by `validate_family`.
class PiecewiseLinearMap {
 public:
  explicit PiecewiseLinearMap(std::vector<Branch> branches, std::string name = {});

  [[nodiscard]] static PiecewiseLinearMap k_fold(int k);  // x -> kx mod 1
  [[nodiscard]] static PiecewiseLinearMap doubling() { return k_fold(2); }
  [[nodiscard]] static PiecewiseLinearMap tripling() { return k_fold(3); }
  /// Resolves "doubling", "tripling", "k_fold:<k>" or "affine: a,b,s,c; ...".
  [[nodiscard]] static PiecewiseLinearMap from_spec(const std::string& spec);

  [[nodiscard]] std::span<const Branch> branches() const noexcept { return branches_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] std::string spec() const;

  [[nodiscard]] std::size_t branch_index(double x) const noexcept;
  [[nodiscard]] double apply(double x) const noexcept;
  [[nodiscard]] std::vector<Preimage> inverse_branches(double y) const;

  [[nodiscard]] double min_expansion() const noexcept;
  /// Every branch image equals [0,1) up to 1e-12.
  [[nodiscard]] bool full_branch() const noexcept;
  /// Every branch has the same positive integer slope and an integer
  /// intercept, so the map acts on 2^-64 fixed point by wrapping multiply.
  [[nodiscard]] std::optional<std::uint64_t> uniform_integer_slope() const noexcept;

  friend bool operator==(const PiecewiseLinearMap& a, const PiecewiseLinearMap& b) noexcept;

 private:
  std::vector<Branch> branches_;
  std::string name_;
};

class MapFamily {
 public:
  explicit MapFamily(std::vector<PiecewiseLinearMap> maps);

  [[nodiscard]] std::span<const PiecewiseLinearMap> maps() const noexcept { return maps_; }
  [[nodiscard]] std::size_t size() const noexcept { return maps_.size(); }
  [[nodiscard]] const PiecewiseLinearMap& operator[](std::size_t i) const { return maps_.at(i); }

  /// min over maps and branches of |slope|.
  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] std::size_t b_max() const noexcept { return b_max_; }
  /// Smallest N with delta^N > 2; 0 when delta <= 1.
  [[nodiscard]] int iterate_n() const noexcept { return iterate_n_; }

  /// Throws NotExpanding when delta <= 1.
  void require_expanding() const;

 private:
  std::vector<PiecewiseLinearMap> maps_;
  double delta_ = 0.0;
  std::size_t b_max_ = 0;
  int iterate_n_ = 0;
};

/// Two-sided i.i.d. symbols: symbol(t) is drawn from a counter-based hash
/// of (seed, t), so negative times need no stored history.
struct BernoulliShift {
  std::vector<double> probabilities;
  std::uint64_t seed = 0;
};

/// symbol(t) = index of the cell of [0,1) containing frac(start + t*alpha).
struct IrrationalRotation {
  double alpha = 0.0;
  std::vector<double> cell_boundaries;  // sorted, first entry 0
  double start_point = 0.0;
};

class DrivingSystem {
 public:
  using Variant = std::variant<BernoulliShift, IrrationalRotation>;

  explicit DrivingSystem(Variant v);

  [[nodiscard]] static DrivingSystem bernoulli(std::vector<double> probabilities, std::uint64_t seed);
  [[nodiscard]] static DrivingSystem rotation(double alpha, std::vector<double> cell_boundaries,
                                              double start_point = 0.0);
  /// Rotation by the golden-ratio conjugate.
  [[nodiscard]] static double default_alpha() noexcept;

  [[nodiscard]] std::size_t symbol_at(std::int64_t t) const noexcept;
  [[nodiscard]] std::size_t num_symbols() const noexcept;
  [[nodiscard]] const Variant& variant() const noexcept { return v_; }

 private:
  Variant v_;
  std::vector<double> cumulative_;  // Bernoulli only
};

[[nodiscard]] inline std::size_t symbol_at(const DrivingSystem& d, std::int64_t t) noexcept {
  return d.symbol_at(t);
}

/// Symbols for times t0 - past ... t0 + future - 1.
struct OrbitWindow {
  std::int64_t t0 = 0;
  std::int64_t past = 0;
  std::int64_t future = 0;
  std::vector<std::size_t> symbols;

  [[nodiscard]] std::int64_t first_time() const noexcept { return t0 - past; }
  [[nodiscard]] std::int64_t end_time() const noexcept { return t0 + future; }
  [[nodiscard]] std::size_t symbol(std::int64_t t) const;
};

[[nodiscard]] OrbitWindow make_window(const DrivingSystem& d, std::int64_t t0, std::int64_t past,
                                      std::int64_t future);

/// Throws SymbolOutOfRange when the driving emits a symbol with no map.
[[nodiscard]] const PiecewiseLinearMap& map_at(const MapFamily& family, const DrivingSystem& d,
                                               std::int64_t t);

[[nodiscard]] inline double apply_map(const PiecewiseLinearMap& map, double x) noexcept {
  return map.apply(x);
}

/// result[0] = x, result[i+1] = T_{t0+i}(result[i]); plain double arithmetic.
[[nodiscard]] std::vector<double> trajectory(const MapFamily& family, const DrivingSystem& d,
                                             std::int64_t t0, std::size_t n, double x);

[[nodiscard]] inline std::vector<Preimage> inverse_branches(const PiecewiseLinearMap& map, double y) {
  return map.inverse_branches(y);
}

struct AdmissibilityReport {
  double delta = 0.0;
  std::size_t b_max = 0;
  int iterate_n = 0;
  /// Shortest interval of monotonicity of T_t^{(N)} over the horizon.
  double min_regularity_length = 0.0;
  double mesh = 1.0 / 64.0;
  int k_max = 0;
  /// Largest covering time over mesh intervals and symbol words; -1 if some
  /// interval never covers within k_max.
  int covering_k = -1;
  bool covering_ok = false;
  bool admissible_evidence = false;
  std::vector<std::string> notes;
};

struct ValidateOptions {
  std::int64_t horizon_start = 0;
  std::size_t horizon = 64;
  int mesh_log2 = 6;
  int k_max = 10;
};

/// Throws NotExpanding if delta <= 1.
[[nodiscard]] AdmissibilityReport validate_family(const MapFamily& family, const DrivingSystem& d,
                                                  const ValidateOptions& opts = {});

/// Union of intervals after one application of `map` to each member.
[[nodiscard]] std::vector<Interval> image_of(const PiecewiseLinearMap& map,
                                             std::span<const Interval> pieces);

// ---------------------------------------------------------------------------
// 2^-64 fixed-point orbits for Monte Carlo.
//
// Double-precision orbits of expanding maps lose one mantissa bit per
// doubling and collapse to 0 after ~53 steps. The stepper carries the state
// as x = (m + u) * 2^-64 with u a fresh uniform draw per step, which is the
// exact conditional law of the unresolved digits for any start law with a
// density. Integer-slope full-branch maps are stepped exactly in wrapping
// 64-bit arithmetic.
// ---------------------------------------------------------------------------

class FixedPointMap {
 public:
  explicit FixedPointMap(const PiecewiseLinearMap& map);

  /// One step; `sub_bits` supplies the unresolved digits u.
  [[nodiscard]] std::uint64_t step(std::uint64_t m, std::uint64_t sub_bits) const noexcept {
    if (integer_slope_ != 0) {
      return m * integer_slope_ + mulhi(sub_bits, integer_slope_);
    }
    return step_general(m, sub_bits);
  }

  [[nodiscard]] bool exact() const noexcept { return integer_slope_ != 0; }

 private:
  [[nodiscard]] std::uint64_t step_general(std::uint64_t m, std::uint64_t sub_bits) const noexcept;

  struct FixedBranch {
    std::uint64_t start = 0;  // first m in the branch
    long double slope = 0.0L;
    long double intercept = 0.0L;
  };
  std::vector<FixedBranch> branches_;
  std::uint64_t integer_slope_ = 0;
};

[[nodiscard]] constexpr double fixed_to_double(std::uint64_t m) noexcept {
  return static_cast<double>(m >> 11) * 0x1.0p-53;
}
[[nodiscard]] std::uint64_t double_to_fixed(double x) noexcept;

}  // namespace qspec
