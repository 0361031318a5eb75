#pragma once

// Monte-Carlo and analytic checks of the quenched limit theorems: large
// deviations against the Legendre transform of Lambda, the CLT, the
// aperiodic and lattice local CLTs, and the aperiodicity diagnostics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qspec/spectral.hpp"

namespace qspec {

struct RateFunction {
  std::vector<double> epsilons;
  std::vector<double> c_values;
  std::vector<double> theta_star;
  double theta_plus = 0.0;
  /// Slope of Lambda at theta_plus; rates are exact only for |eps| < epsilon0.
  double epsilon0 = 0.0;
  std::vector<std::string> warnings;

  [[nodiscard]] double at(double epsilon) const;
};

/// c(eps) = max over |theta| <= theta_plus of theta*eps - Lambda(theta),
/// grid maximum refined by the vertex of the local parabola.
/// theta_plus <= 0 selects the largest grid magnitude.
/// Throws NonConvexCurve if the curve has convexity violations,
/// InvalidArgument for an imaginary-axis curve.
[[nodiscard]] RateFunction legendre_rate(const LambdaCurve& curve, std::span<const double> epsilons,
                                         double theta_plus = 0.0);

/// Uniform in [0,1) of sample `index`; the first draw of its stream.
[[nodiscard]] double start_uniform(std::uint64_t seed, std::uint64_t index) noexcept;

/// x_i ~ v0 dm by exact inversion of the piecewise-linear CDF applied to
/// start_uniform(seed, i). v0 == 1 returns the uniforms unchanged.
/// Throws InvalidDensity if some cell is below -1e-12 or the mass is not positive.
[[nodiscard]] std::vector<double> sample_start_points(const GridFunction& v0, std::size_t count,
                                                      std::uint64_t seed);

enum class StartLaw { mu_omega, lebesgue };

[[nodiscard]] std::string to_string(StartLaw law);
/// Throws InvalidArgument.
[[nodiscard]] StartLaw parse_start_law(const std::string& s);

struct SampleParams {
  std::int64_t t0 = 0;
  std::size_t n = 1;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  StartLaw start_law = StartLaw::mu_omega;
  unsigned workers = 1;
};

struct SampleBatch {
  std::int64_t t0 = 0;
  std::size_t n = 0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  StartLaw start_law = StartLaw::mu_omega;
  std::vector<double> sums;
  /// Sum of centering offsets over [t0, t0 + n), already subtracted.
  double offset_total = 0.0;
};

/// S_n = sum_{i<n} g(t0+i, x_i) with x_{i+1} = T_{t0+i} x_i along 2^-64
/// fixed-point orbits. Sample i draws from stream (seed, i) only, so sums do
/// not depend on the worker count. An uncentered observable is summed raw.
/// mu_omega starts use v0 at t0 on the cocycle grid.
[[nodiscard]] SampleBatch birkhoff_samples(const TwistedCocycle& cocycle, const SampleParams& params);
[[nodiscard]] SampleBatch birkhoff_samples(const MapFamily& family, const DrivingSystem& driving,
                                           const Observable& observable, std::int64_t t0, std::size_t n,
                                           std::size_t count, std::uint64_t seed, StartLaw start_law,
                                           std::size_t n_cells = 4096, unsigned workers = 1);

struct LdpRow {
  double epsilon = 0.0;
  std::size_t n = 0;
  double p_hat = 0.0;
  double rate_hat = 0.0;  // -(1/n) log p_hat; +inf when p_hat = 0
  double c_eps = 0.0;
  double rel_gap = 0.0;
  bool low_stat = false;  // p_hat * count < 50
  /// rate_hat minus the (1/n) log(theta* sqrt(2 pi n Lambda''(theta*))) prefactor.
  double rate_prefactor_corrected = 0.0;
};

struct LdpTrend {
  double epsilon = 0.0;
  std::size_t n_small = 0;
  std::size_t n_large = 0;
  bool gap_shrinks = false;
};

struct LdpReport {
  std::vector<LdpRow> rows;
  std::vector<LdpTrend> trends;
};

/// Upper tails P(S_n > n eps) for eps > 0, lower tails P(S_n < n eps) for
/// eps < 0. `curve` supplies Lambda'' for the prefactor column only.
[[nodiscard]] LdpReport ldp_experiment(std::span<const SampleBatch> batches, const RateFunction& rate,
                                       const LambdaCurve* curve = nullptr);

struct CltResult {
  std::size_t n = 0;
  std::size_t count = 0;
  double ks = 0.0;
  double var_emp = 0.0;  // mean of S_n^2 / n
  double sigma2 = 0.0;
};

/// Kolmogorov-Smirnov distance of S_n / sqrt(n) to N(0, sigma2).
/// Throws DegenerateVariance when sigma2 <= 0.
[[nodiscard]] CltResult clt_experiment(const SampleBatch& batch, double sigma2);

/// Kolmogorov-Smirnov distance of a sample to N(0, sigma2).
[[nodiscard]] double ks_normal(std::vector<double> sample, double sigma2);

struct LcltReport {
  std::vector<double> s_grid;
  Interval J;
  std::vector<double> statistic;
  std::vector<double> target;
  double sup_error = 0.0;
  bool periodic = false;
  std::optional<double> lattice_span;
  std::optional<double> eta_bar_n;
  /// Fraction of sums off eta_bar + span*Z (periodic only).
  double off_lattice_mass = 0.0;
  /// Trapezoid integral of the statistic over s divided by |J| sqrt(n sigma2);
  /// near 1 when the grid spans the bulk.
  double mass_ratio = 0.0;
};

/// statistic(s) = sqrt(n sigma2) * #{s + S_n in J} / count with J closed;
/// target(s) = exp(-s^2 / (2 n sigma2)) |J| / sqrt(2 pi).
/// Throws DegenerateVariance, InvalidArgument on an empty J.
[[nodiscard]] LcltReport lclt_experiment(const SampleBatch& batch, double sigma2, Interval J,
                                         std::span<const double> s_grid);

/// Lattice target span * exp(-s^2 / (2 n sigma2)) / sqrt(2 pi) *
/// #{l in Z : eta_bar + s + l span in J}. The lattice count is exact.
/// Throws NoLattice when span <= 0, DegenerateVariance.
[[nodiscard]] LcltReport lclt_periodic_experiment(const SampleBatch& batch, double sigma2, Interval J,
                                                  std::span<const double> s_grid, double eta_bar_n,
                                                  double span);

struct LatticeInfo {
  std::vector<double> eta;  // per symbol, g_s on the first cell
  double span = 0.0;        // gcd of integer gaps; 0 for constant observables
};

/// Tests whether g_s - eta_s is integer-valued on the n_cells grid for every
/// symbol within tol. Returns nullopt when some cell fails.
[[nodiscard]] std::optional<LatticeInfo> lattice_detect(const Observable& observable, std::size_t n_symbols,
                                                        std::size_t n_cells = 4096, double tol = 1e-9);

/// sum over [t0, t0+n) of eta_{symbol(t)} - offset(t).
[[nodiscard]] double eta_bar(const LatticeInfo& lattice, const TwistedCocycle& cocycle, std::int64_t t0,
                             std::size_t n);

enum class Classification { aperiodic_evidence, periodic_lattice, inconclusive };

[[nodiscard]] std::string to_string(Classification c);

struct ScanParams {
  std::size_t n_orbit = 20000;
  std::size_t n_burn = 256;
  std::int64_t t_end = 0;
  /// Steps of the direct norm-decay fit.
  std::size_t decay_steps = 32;
  std::size_t decay_trials = 4;
  std::uint64_t seed = 11;
  double threshold = -1e-3;
  unsigned workers = 1;
  std::size_t lattice_cells = 4096;
};

struct AperiodicityReport {
  std::vector<double> t_grid;
  std::vector<double> lambda_it;
  std::vector<double> rho_fit;
  std::vector<double> c_fit;
  Classification classification = Classification::inconclusive;
  std::optional<LatticeInfo> lattice;
  /// Lambda(2 pi i / span) when a lattice with span > 0 is found.
  std::optional<double> lambda_at_lattice;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

/// A detected lattice with Lambda(2 pi i / span) >= threshold classifies as
/// periodic; otherwise all Lambda(it) <= threshold gives aperiodic evidence.
[[nodiscard]] AperiodicityReport aperiodicity_scan(const TwistedCocycle& cocycle,
                                                   std::span<const double> t_grid,
                                                   const ScanParams& params = {});

}  // namespace qspec
