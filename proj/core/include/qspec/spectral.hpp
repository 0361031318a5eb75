#pragma once

// Quenched spectral objects of the twisted cocycle: equivariant densities
// v^theta_t with normalizers lambda^theta_t, dual functionals phi^theta_t,
// the Lyapunov exponent curve Lambda(theta), the asymptotic variance and
// decay-rate diagnostics.
//
// Fiber conventions: v_t is the top-space element at time t with
// integral 1, and lambda_t is defined by L^theta_t v_t = lambda_t v_{t+1},
// so lambda_t = integral of exp(theta g_t) v_t.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qspec/bv_calculus.hpp"
#include "qspec/transfer_op.hpp"

namespace qspec {

struct FiberSpectralData {
  std::int64_t t = 0;
  Complex theta = 0.0;
  GridFunction v;
  Complex lambda = 1.0;
  std::optional<GridFunction> phi;
  /// Pull-back horizon at which the Cauchy criterion was met.
  std::size_t burn_in_used = 0;
  /// Discrete BV distance between the horizon n and 2n results.
  double residual = 0.0;
  /// min_i Re v[i]; positive for theta = 0.
  double min_cell = 0.0;
};

struct DensityOptions {
  double tol = 1e-10;
  std::size_t n_start = 8;
  std::size_t n_max = std::size_t{1} << 14;
};

/// Pull-back power iteration: uniform seed at t - n, normalized forward
/// steps, horizon doubled until the Cauchy criterion holds.
/// Throws NormalizerCollapse if some |normalizer| < 1e-12, NoConvergence
/// if the tolerance is unmet at n_max.
[[nodiscard]] FiberSpectralData equivariant_density(const TwistedCocycle& cocycle, std::int64_t t,
                                                    Complex theta, const DensityOptions& opts = {});

/// Walks v^theta forward along consecutive fibers from a converged start.
class DensityOrbit {
 public:
  DensityOrbit(const TwistedCocycle& cocycle, Complex theta, std::int64_t t,
               const DensityOptions& opts = {});

  [[nodiscard]] std::int64_t time() const noexcept { return t_; }
  [[nodiscard]] const GridFunction& density() const noexcept { return v_; }
  /// lambda at the current fiber; computed by advance().
  Complex advance();

 private:
  TwistedCocycle::Slice slice_;
  std::int64_t t_;
  GridFunction v_;
  GridFunction next_;
};

struct CenteringWindow {
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

/// Subtracts integral g_t v0_t dm at every fiber of the window.
[[nodiscard]] Observable center_observable(const Observable& raw, const MapFamily& family,
                                           const DrivingSystem& driving, std::size_t n_cells,
                                           CenteringWindow window);
[[nodiscard]] Observable center_observable(const TwistedCocycle& cocycle, CenteringWindow window);

struct LyapunovEstimate {
  double value = 0.0;
  Complex theta = 0.0;
  std::size_t n_orbit = 0;
  std::size_t n_burn = 0;
  double min_abs_normalizer = 0.0;
  double max_abs_log_deviation = 0.0;  // max |log|lambda_j|| over the orbit
};

/// One pull-back pass over times [t_end - n_burn - n_orbit, t_end); returns
/// the mean of log |lambda_j| over the last n_orbit steps.
[[nodiscard]] LyapunovEstimate lyapunov_exponent(const TwistedCocycle& cocycle, Complex theta,
                                                 std::size_t n_orbit, std::size_t n_burn,
                                                 std::int64_t t_end = 0);

enum class Axis { real, imaginary };

struct CurveParams {
  std::size_t n_orbit = 20000;
  std::size_t n_burn = 256;
  double h = 1e-2;
  unsigned workers = 1;
  std::int64_t t_end = 0;
};

struct LambdaCurve {
  Axis axis = Axis::real;
  std::vector<double> thetas;
  std::vector<double> values;
  std::size_t n_orbit = 0;
  std::size_t n_burn = 0;
  std::size_t n_cells = 0;
  double d1_at_0 = 0.0;
  double d2_at_0 = 0.0;
  std::size_t convexity_violations = 0;
  double value_at_0 = 0.0;

  [[nodiscard]] double at(double theta) const;
};

/// Grid must contain 0 and be symmetric about it (InvalidArgument).
/// Derivatives at 0 use central differences at h and h/2 with one
/// Richardson step; every evaluation shares the same driving realization.
[[nodiscard]] LambdaCurve lambda_curve(const TwistedCocycle& cocycle, Axis axis,
                                       std::vector<double> theta_grid, const CurveParams& params = {});

/// Chord test on consecutive triples, tolerance `tol`.
[[nodiscard]] std::size_t convexity_violations(std::span<const double> x, std::span<const double> y,
                                               double tol = 1e-8);

struct VarianceEstimate {
  double sigma2_series = 0.0;
  double sigma2_curve = 0.0;   // filled from a lambda_curve run, NaN otherwise
  std::vector<double> terms;   // terms[0] = mean of integral g^2 v, terms[j] correlations
  double decay_rate = 0.0;     // 0 when correlations vanish faster than resolvable
  std::size_t truncation_j = 0;
  std::size_t n_orbit = 0;
  std::size_t n_cells = 0;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

struct VarianceParams {
  std::size_t j_max = 64;
  std::size_t n_orbit = 2000;
  std::int64_t t_start = 0;
};

/// Correlation series by quadrature with j-fold push-forward of g_t v_t.
/// Requires a centered observable (InvalidArgument otherwise).
[[nodiscard]] VarianceEstimate variance(const TwistedCocycle& cocycle, const VarianceParams& params = {});

/// Adjoint pull-back from the functional m at t + n_fwd, rescaled so that
/// <phi, v_t> = 1. Throws NormalizerCollapse, NoConvergence.
[[nodiscard]] GridFunction dual_functional(const TwistedCocycle& cocycle, std::int64_t t,
                                           Complex theta, const GridFunction& v_t,
                                           std::size_t n_fwd = 8, double tol = 1e-10,
                                           std::size_t n_max = std::size_t{1} << 14);

struct DecayFit {
  double r_hat = 0.0;
  double c_hat = 0.0;
  /// sqrt(1 - R^2) of the log-linear fit.
  double residual = 0.0;
  /// max_k envelope[k] / r_hat^k.
  double c_bound = 0.0;
  bool degenerate = false;
  std::vector<double> envelope;  // max over trials of the normalized norm at step k
  std::size_t points_used = 0;
};

struct DecayParams {
  std::int64_t t = 0;
  std::size_t n = 10;
  std::size_t trials = 32;
  std::uint64_t seed = 7;
  /// Relative floor below which the envelope is treated as zero.
  double floor = 1e-12;
  /// Overrides the seeded test functions when non-empty.
  std::vector<GridFunction> test_functions;
};

/// Decay of f - <phi, f> v under the normalized twisted cocycle, in the
/// discrete BV norm.
[[nodiscard]] DecayFit decay_rate(const TwistedCocycle& cocycle, Complex theta,
                                  const DecayParams& params = {});

/// Envelope of sup_{|h|<=1} |int L^(k)(f v_t) h - int f dmu_t int h dmu_{t+k}| / bv(f).
[[nodiscard]] DecayFit correlation_decay(const TwistedCocycle& cocycle, const DecayParams& params = {});

/// int L^(n)(f v_t) h dm - int f v_t dm * int h v_{t+n} dm.
[[nodiscard]] double correlation(const TwistedCocycle& cocycle, std::int64_t t, std::size_t n,
                                 const GridFunction& f, const GridFunction& h);

struct LogLinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // sqrt(1 - R^2)
};

/// Least squares of log(y) on x; y must be positive.
[[nodiscard]] LogLinearFit fit_log_linear(std::span<const double> x, std::span<const double> y);

}  // namespace qspec
