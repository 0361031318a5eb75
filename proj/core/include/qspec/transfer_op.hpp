#pragma once

// Ulam discretization of fiber transfer operators, their twisted versions
// L^theta f = L(e^{theta g} f), adjoints, and cocycle products along the
// driving orbit.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "qspec/bv_calculus.hpp"
#include "qspec/observable.hpp"
#include "qspec/rds_model.hpp"

namespace qspec {

struct MatrixEntry {
  std::size_t col = 0;
  double weight = 0.0;
};

/// Row-stochastic matrix P[i][j] = m(A_i intersect T^{-1} A_j) / m(A_i).
class UlamMatrix {
 public:
  [[nodiscard]] std::size_t n_cells() const noexcept { return n_cells_; }
  [[nodiscard]] std::span<const MatrixEntry> row(std::size_t i) const noexcept {
    return {entries_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  [[nodiscard]] std::size_t nonzeros() const noexcept { return entries_.size(); }
  /// True when the dense kernel is used (n_cells <= 4096 and > 25% fill).
  [[nodiscard]] bool dense() const noexcept { return !dense_.empty(); }
  [[nodiscard]] double max_row_sum_error() const noexcept;

  /// out[j] = sum_i in[i] P[i][j]. `out` must not alias `in`.
  void push_forward(std::span<const Complex> in, std::span<Complex> out) const noexcept;
  /// out[i] = sum_j P[i][j] in[j]. `out` must not alias `in`.
  void pull_back(std::span<const Complex> in, std::span<Complex> out) const noexcept;

  friend UlamMatrix build_ulam(const PiecewiseLinearMap& map, std::size_t n_cells);

 private:
  std::size_t n_cells_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<MatrixEntry> entries_;
  std::vector<double> dense_;  // row-major, only when dense()
};

/// Exact interval intersection of each branch image of A_i with the A_j.
/// Throws InvalidGrid unless n_cells is a power of two >= 2.
[[nodiscard]] UlamMatrix build_ulam(const PiecewiseLinearMap& map, std::size_t n_cells);

[[nodiscard]] GridFunction apply_density(const UlamMatrix& matrix, const GridFunction& d);

struct TwistedOperator {
  std::shared_ptr<const UlamMatrix> base;
  GridFunction twist_diag;
  Complex theta = 0.0;
};

/// twist_diag = exp(theta * g) with g given on the grid.
[[nodiscard]] TwistedOperator make_twisted(std::shared_ptr<const UlamMatrix> base,
                                           const GridFunction& g, Complex theta);
[[nodiscard]] GridFunction apply_twisted(const TwistedOperator& op, const GridFunction& d);
/// twist_diag * (P phi): the representation of the functional phi o L^theta.
[[nodiscard]] GridFunction apply_adjoint(const TwistedOperator& op, const GridFunction& phi);

/// Plain-text dump: "ulam N=<n> map=<index>" then one "row col weight" per line.
void write_ulam_dump(std::ostream& os, const UlamMatrix& matrix, std::size_t map_index);

/// Fiber operators along the driving orbit, sharing one Ulam matrix per map.
class TwistedCocycle {
 public:
  TwistedCocycle(MapFamily family, DrivingSystem driving, Observable observable, std::size_t n_cells);

  [[nodiscard]] const MapFamily& family() const noexcept { return *family_; }
  [[nodiscard]] const DrivingSystem& driving() const noexcept { return *driving_; }
  [[nodiscard]] const Observable& observable() const noexcept { return observable_; }
  [[nodiscard]] std::size_t n_cells() const noexcept { return n_cells_; }

  /// Throws SymbolOutOfRange.
  [[nodiscard]] std::size_t symbol(std::int64_t t) const;
  [[nodiscard]] const UlamMatrix& matrix(std::size_t symbol) const { return (*matrices_)[symbol]; }
  [[nodiscard]] std::shared_ptr<const UlamMatrix> shared_matrix(std::size_t symbol) const;
  /// Raw observable of `symbol` on the grid.
  [[nodiscard]] std::span<const double> raw_grid(std::size_t symbol) const { return (*raw_grids_)[symbol]; }
  /// Centered observable g(t, .) on the grid.
  [[nodiscard]] GridFunction observable_grid(std::int64_t t) const;

  /// Same operators, different observable.
  [[nodiscard]] TwistedCocycle with_observable(Observable observable) const;

  /// Operators specialised to one theta, with exp(theta g_s) cached per symbol.
  class Slice {
   public:
    [[nodiscard]] Complex theta() const noexcept { return theta_; }
    /// out = L^theta_t in. `out` must not alias `in`.
    void step(std::int64_t t, std::span<const Complex> in, std::span<Complex> out) const;
    /// out = (L^theta_t)^* in. `out` must not alias `in`.
    void step_adjoint(std::int64_t t, std::span<const Complex> in, std::span<Complex> out) const;
    [[nodiscard]] GridFunction twist(std::int64_t t) const;
    [[nodiscard]] TwistedOperator op(std::int64_t t) const;
    [[nodiscard]] const TwistedCocycle& cocycle() const noexcept { return *owner_; }

   private:
    friend class TwistedCocycle;
    const TwistedCocycle* owner_ = nullptr;
    Complex theta_ = 0.0;
    std::vector<std::vector<Complex>> twist_;  // per symbol, empty at theta = 0
    mutable std::vector<Complex> scratch_;
  };

  /// The returned slice refers to *this and must not outlive it.
  [[nodiscard]] Slice at(Complex theta) const;

 private:
  std::shared_ptr<const MapFamily> family_;
  std::shared_ptr<const DrivingSystem> driving_;
  Observable observable_;
  std::size_t n_cells_ = 0;
  std::shared_ptr<const std::vector<UlamMatrix>> matrices_;
  std::shared_ptr<const std::vector<std::vector<double>>> raw_grids_;
};

struct CocycleResult {
  GridFunction result;
  std::vector<Complex> integrals;  // integral after each step
};

/// Applies L^theta_{t0+n-1} o ... o L^theta_{t0} to d.
[[nodiscard]] CocycleResult cocycle_apply(const TwistedCocycle& cocycle, std::int64_t t0,
                                          std::size_t n, Complex theta, const GridFunction& d);

struct LasotaYorkeFit {
  double alpha = 0.0;  // contraction coefficient on bv(f)
  double beta = 0.0;   // weak-norm coefficient on l1(f)
  std::size_t trials = 0;
};

/// Smallest alpha over a beta grid such that
/// bv(L^{theta,(steps)} f) <= alpha bv(f) + beta l1(f) on seeded step functions.
/// The sample is a lower bound for the true operator constants.
[[nodiscard]] LasotaYorkeFit fit_lasota_yorke(const TwistedCocycle& cocycle, Complex theta,
                                              std::int64_t t0, int steps, std::size_t trials,
                                              std::uint64_t seed);

}  // namespace qspec
