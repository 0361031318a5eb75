#pragma once

// Discrete bounded-variation calculus on uniform dyadic grids. A
// GridFunction holds cell averages on cells [i/N, (i+1)/N); its variation
// is the exact variation of the piecewise-constant representative.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qspec/errors.hpp"

namespace qspec {

using Complex = std::complex<double>;

class GridFunction {
 public:
  GridFunction() = default;
  /// Throws InvalidGrid unless n_cells >= 2 is a power of two and all values are finite.
  explicit GridFunction(std::vector<Complex> values);
  explicit GridFunction(std::span<const double> real_values);

  [[nodiscard]] static GridFunction constant(std::size_t n_cells, Complex c);
  [[nodiscard]] static GridFunction zeros(std::size_t n_cells) { return constant(n_cells, 0.0); }
  /// Samples f at cell midpoints.
  [[nodiscard]] static GridFunction sample(std::size_t n_cells, const std::function<double(double)>& f);
  /// Exact cell averages of amplitude * 1_[lo,hi).
  [[nodiscard]] static GridFunction indicator(std::size_t n_cells, double lo, double hi,
                                              double amplitude = 1.0);

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const Complex> values() const noexcept { return values_; }
  [[nodiscard]] std::span<Complex> values() noexcept { return values_; }
  [[nodiscard]] const Complex& operator[](std::size_t i) const noexcept { return values_[i]; }
  [[nodiscard]] Complex& operator[](std::size_t i) noexcept { return values_[i]; }

  [[nodiscard]] static double midpoint(std::size_t n_cells, std::size_t i) noexcept {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(n_cells);
  }

  /// Integral against Lebesgue measure, (1/N) sum values[i].
  [[nodiscard]] Complex integral() const noexcept;
  [[nodiscard]] bool is_real(double tol = 0.0) const noexcept;

  /// N -> 2N by duplicating each cell.
  [[nodiscard]] GridFunction refined() const;
  /// N -> N/2 by averaging adjacent pairs.
  [[nodiscard]] GridFunction coarsened() const;

  GridFunction& operator*=(Complex s) noexcept;
  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);

  friend bool operator==(const GridFunction&, const GridFunction&) = default;

 private:
  std::vector<Complex> values_;
};

[[nodiscard]] GridFunction operator*(Complex s, GridFunction f);
[[nodiscard]] GridFunction operator+(GridFunction f, const GridFunction& g);
[[nodiscard]] GridFunction operator-(GridFunction f, const GridFunction& g);

[[nodiscard]] bool is_power_of_two(std::size_t n) noexcept;

struct BvNorms {
  double variation = 0.0;
  double l1 = 0.0;
  double bv = 0.0;
  double sup = 0.0;
};

/// sum_{i<N-1} |f[i+1] - f[i]|; no wrap-around term.
[[nodiscard]] double variation(const GridFunction& f) noexcept;
[[nodiscard]] double l1_norm(const GridFunction& f) noexcept;
[[nodiscard]] double sup_norm(const GridFunction& f) noexcept;
[[nodiscard]] BvNorms norms(const GridFunction& f) noexcept;
[[nodiscard]] inline double bv_norm(const GridFunction& f) noexcept {
  return variation(f) + l1_norm(f);
}
/// Bilinear pairing (1/N) sum phi[i] f[i]; phi represents a functional.
[[nodiscard]] Complex pairing(const GridFunction& phi, const GridFunction& f);

enum class CombineOp { add, multiply };

/// Throws GridMismatch on differing sizes.
[[nodiscard]] GridFunction combine(const GridFunction& f, const GridFunction& g, CombineOp op);
void require_same_grid(const GridFunction& f, const GridFunction& g);

/// Cellwise exp(theta * g).
[[nodiscard]] GridFunction exp_twist(const GridFunction& g, Complex theta);

// (V1)-(V9) spot checks. (V4) and (V6) are compactness/density statements
// with no finite counterpart and are listed as excluded.

struct AxiomViolation {
  std::string axiom;
  std::size_t pair_index = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct AxiomTally {
  std::string axiom;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::string skip_reason;
};

struct AxiomReport {
  std::size_t pairs = 0;
  std::size_t n_cells = 0;
  std::vector<AxiomTally> tallies;
  std::vector<AxiomViolation> violations;
  std::vector<std::string> excluded;

  [[nodiscard]] bool passed() const noexcept { return violations.empty(); }
  [[nodiscard]] const AxiomTally& tally(const std::string& axiom) const;
};

/// Real step function with a seeded number of jumps and values in [lo, hi].
[[nodiscard]] GridFunction random_step_function(std::size_t n_cells, std::uint64_t seed,
                                                std::uint64_t index, double lo = -1.0,
                                                double hi = 1.0);

struct AxiomCheckOptions {
  std::size_t pairs = 100;
  std::size_t n_cells = 256;
  std::uint64_t seed = 1;
  double rel_tol = 1e-12;
  /// Extra functions appended to the (V7) sample, e.g. to exercise the
  /// essinf filter.
  std::vector<GridFunction> extra_v7;
};

[[nodiscard]] AxiomReport check_variation_axioms(const AxiomCheckOptions& opts = {});

}  // namespace qspec
