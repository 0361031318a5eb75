#include "qspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "qspec/util.hpp"

namespace qspec {

namespace {

constexpr double kCollapse = 1e-12;

std::string theta_str(Complex theta) {
  std::ostringstream os;
  os << "theta=(" << format_double(theta.real()) << "," << format_double(theta.imag()) << ")";
  return os.str();
}

// One normalized step; returns the normalizer.
Complex normalized_step(const TwistedCocycle::Slice& slice, std::int64_t t, GridFunction& v,
                        GridFunction& scratch) {
  slice.step(t, v.values(), scratch.values());
  const Complex lam = scratch.integral();
  if (!(std::abs(lam) >= kCollapse)) {
    throw NormalizerCollapse("|normalizer| = " + format_double(std::abs(lam)) + " at fiber t=" +
                             std::to_string(t) + ", " + theta_str(slice.theta()));
  }
  scratch *= 1.0 / lam;
  std::swap(v, scratch);
  return lam;
}

GridFunction pull_back_density(const TwistedCocycle::Slice& slice, std::int64_t t, std::size_t n,
                               std::size_t n_cells) {
  auto v = GridFunction::constant(n_cells, 1.0);
  auto scratch = GridFunction::zeros(n_cells);
  const auto start = t - static_cast<std::int64_t>(n);
  for (std::int64_t s = start; s < t; ++s) normalized_step(slice, s, v, scratch);
  return v;
}

}  // namespace

FiberSpectralData equivariant_density(const TwistedCocycle& cocycle, std::int64_t t, Complex theta,
                                      const DensityOptions& opts) {
  const auto slice = cocycle.at(theta);
  const std::size_t n_cells = cocycle.n_cells();
  std::size_t n = std::max<std::size_t>(1, opts.n_start);
  GridFunction prev = pull_back_density(slice, t, n, n_cells);
  while (true) {
    if (2 * n > opts.n_max) {
      throw NoConvergence("pull-back did not meet tol=" + format_double(opts.tol) + " by n_max=" +
                          std::to_string(opts.n_max) + " at fiber t=" + std::to_string(t) + ", " +
                          theta_str(theta));
    }
    GridFunction cur = pull_back_density(slice, t, 2 * n, n_cells);
    const double dist = bv_norm(cur - prev);
    n *= 2;
    if (dist <= opts.tol) {
      FiberSpectralData out;
      out.t = t;
      out.theta = theta;
      out.burn_in_used = n;
      out.residual = dist;
      auto scratch = GridFunction::zeros(n_cells);
      slice.step(t, cur.values(), scratch.values());
      out.lambda = scratch.integral();
      out.min_cell = std::numeric_limits<double>::infinity();
      for (const auto& x : cur.values()) out.min_cell = std::min(out.min_cell, x.real());
      out.v = std::move(cur);
      return out;
    }
    prev = std::move(cur);
  }
}

DensityOrbit::DensityOrbit(const TwistedCocycle& cocycle, Complex theta, std::int64_t t,
                           const DensityOptions& opts)
    : slice_(cocycle.at(theta)),
      t_(t),
      v_(equivariant_density(cocycle, t, theta, opts).v),
      next_(GridFunction::zeros(cocycle.n_cells())) {}

Complex DensityOrbit::advance() {
  const Complex lam = normalized_step(slice_, t_, v_, next_);
  ++t_;
  return lam;
}

Observable center_observable(const TwistedCocycle& cocycle, CenteringWindow window) {
  if (window.end < window.begin) throw InvalidArgument("centering window end precedes begin");
  const Observable& raw = cocycle.observable();
  const TwistedCocycle base = raw.centered() ? cocycle.with_observable(Observable(raw.spec())) : cocycle;
  DensityOrbit orbit(base, 0.0, window.begin);
  std::vector<double> offsets;
  offsets.reserve(static_cast<std::size_t>(window.end - window.begin));
  for (std::int64_t t = window.begin; t < window.end; ++t) {
    const auto g = base.raw_grid(base.symbol(t));
    const auto v = orbit.density().values();
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * v[i].real();
    offsets.push_back(s / static_cast<double>(g.size()));
    orbit.advance();
  }
  return Observable(raw.spec()).with_offsets(window.begin, std::move(offsets));
}

Observable center_observable(const Observable& raw, const MapFamily& family,
                             const DrivingSystem& driving, std::size_t n_cells, CenteringWindow window) {
  return center_observable(TwistedCocycle(family, driving, raw, n_cells), window);
}

LyapunovEstimate lyapunov_exponent(const TwistedCocycle& cocycle, Complex theta, std::size_t n_orbit,
                                   std::size_t n_burn, std::int64_t t_end) {
  if (n_orbit == 0) throw InvalidArgument("n_orbit must be positive");
  const auto slice = cocycle.at(theta);
  const std::size_t n_cells = cocycle.n_cells();
  auto v = GridFunction::constant(n_cells, 1.0);
  auto scratch = GridFunction::zeros(n_cells);
  const std::int64_t start = t_end - static_cast<std::int64_t>(n_burn + n_orbit);
  LyapunovEstimate est;
  est.theta = theta;
  est.n_orbit = n_orbit;
  est.n_burn = n_burn;
  est.min_abs_normalizer = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::int64_t t = start; t < t_end; ++t) {
    const Complex lam = normalized_step(slice, t, v, scratch);
    if (t >= start + static_cast<std::int64_t>(n_burn)) {
      const double l = std::log(std::abs(lam));
      sum += l;
      est.min_abs_normalizer = std::min(est.min_abs_normalizer, std::abs(lam));
      est.max_abs_log_deviation = std::max(est.max_abs_log_deviation, std::abs(l));
    }
  }
  est.value = sum / static_cast<double>(n_orbit);
  return est;
}

double LambdaCurve::at(double theta) const {
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (thetas[i] == theta) return values[i];
  }
  throw InvalidArgument("theta " + format_double(theta) + " not on the curve grid");
}

std::size_t convexity_violations(std::span<const double> x, std::span<const double> y, double tol) {
  std::size_t bad = 0;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const double w = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
    const double chord = (1.0 - w) * y[i - 1] + w * y[i + 1];
    if (y[i] > chord + tol) ++bad;
  }
  return bad;
}

LambdaCurve lambda_curve(const TwistedCocycle& cocycle, Axis axis, std::vector<double> grid,
                         const CurveParams& params) {
  std::sort(grid.begin(), grid.end());
  if (std::find(grid.begin(), grid.end(), 0.0) == grid.end())
    throw InvalidArgument("theta grid must contain 0");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] + grid[grid.size() - 1 - i]) > 1e-12)
      throw InvalidArgument("theta grid must be symmetric about 0");
  }
  const double h = params.h;
  std::vector<double> points = grid;
  for (double extra : {-h, -h / 2, h / 2, h}) points.push_back(extra);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  std::vector<double> values(points.size());
  parallel_for(points.size(), params.workers, [&](std::size_t i) {
    const Complex theta = axis == Axis::real ? Complex(points[i], 0.0) : Complex(0.0, points[i]);
    values[i] = lyapunov_exponent(cocycle, theta, params.n_orbit, params.n_burn, params.t_end).value;
  });
  std::map<double, double> lookup;
  for (std::size_t i = 0; i < points.size(); ++i) lookup[points[i]] = values[i];

  LambdaCurve curve;
  curve.axis = axis;
  curve.thetas = grid;
  for (double th : grid) curve.values.push_back(lookup.at(th));
  curve.n_orbit = params.n_orbit;
  curve.n_burn = params.n_burn;
  curve.n_cells = cocycle.n_cells();
  const double f0 = lookup.at(0.0);
  curve.value_at_0 = f0;
  const auto d1 = [&](double s) { return (lookup.at(s) - lookup.at(-s)) / (2.0 * s); };
  const auto d2 = [&](double s) { return (lookup.at(s) - 2.0 * f0 + lookup.at(-s)) / (s * s); };
  curve.d1_at_0 = (4.0 * d1(h / 2) - d1(h)) / 3.0;
  curve.d2_at_0 = (4.0 * d2(h / 2) - d2(h)) / 3.0;
  if (axis == Axis::real) curve.convexity_violations = convexity_violations(curve.thetas, curve.values);
  return curve;
}

VarianceEstimate variance(const TwistedCocycle& cocycle, const VarianceParams& params) {
  const Observable& obs = cocycle.observable();
  if (!obs.centered()) throw InvalidArgument("variance requires a centered observable");
  if (params.n_orbit == 0) throw InvalidArgument("n_orbit must be positive");
  const std::size_t n_cells = cocycle.n_cells();
  const double m_bound = std::max(obs.sup_bound(), 1e-300);
  const auto slice = cocycle.at(0.0);

  VarianceEstimate est;
  est.n_orbit = params.n_orbit;
  est.n_cells = n_cells;
  est.sigma2_curve = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> sums(params.j_max + 1, 0.0);
  std::vector<double> envelope(params.j_max + 1, 0.0);

  DensityOrbit orbit(cocycle, 0.0, params.t_start);
  auto w = GridFunction::zeros(n_cells);
  auto scratch = GridFunction::zeros(n_cells);
  for (std::size_t f = 0; f < params.n_orbit; ++f) {
    const std::int64_t t = orbit.time();
    const auto g = cocycle.observable_grid(t);
    const auto v = orbit.density().values();
    double t0 = 0.0;
    for (std::size_t i = 0; i < n_cells; ++i) {
      w[i] = g[i] * v[i];
      t0 += (g[i] * g[i] * v[i]).real();
    }
    sums[0] += t0 / static_cast<double>(n_cells);
    const double w0 = std::max(l1_norm(w), 1e-300);
    envelope[0] += 1.0;
    for (std::size_t j = 1; j <= params.j_max; ++j) {
      slice.step(t + static_cast<std::int64_t>(j) - 1, w.values(), scratch.values());
      std::swap(w, scratch);
      const double wl1 = l1_norm(w);
      envelope[j] += wl1 / w0;
      if (wl1 * m_bound < 1e-13) break;
      const auto gj = cocycle.observable_grid(t + static_cast<std::int64_t>(j));
      sums[j] += pairing(gj, w).real();
    }
    orbit.advance();
  }
  const double nf = static_cast<double>(params.n_orbit);
  for (std::size_t j = 0; j <= params.j_max; ++j) {
    est.terms.push_back(sums[j] / nf);
    envelope[j] /= nf;
  }
  std::size_t last = 0;
  while (last + 1 <= params.j_max && std::abs(est.terms[last + 1]) >= 1e-8) ++last;
  est.truncation_j = last;
  est.sigma2_series = est.terms[0];
  for (std::size_t j = 1; j <= last; ++j) est.sigma2_series += 2.0 * est.terms[j];

  std::vector<double> xs, ys;
  for (std::size_t j = 1; j <= params.j_max; ++j) {
    if (envelope[j] > 1e-14) {
      xs.push_back(static_cast<double>(j));
      ys.push_back(envelope[j]);
    }
  }
  if (xs.size() >= 2) {
    est.decay_rate = std::min(1.0, std::exp(fit_log_linear(xs, ys).slope));
  } else {
    est.decay_rate = 0.0;
  }
  if (est.sigma2_series < 1e-6) {
    est.degenerate = true;
    est.warnings.push_back("DegenerateVariance: sigma2_series = " + format_double(est.sigma2_series) +
                           " < 1e-6; observable may be a coboundary");
  }
  return est;
}

GridFunction dual_functional(const TwistedCocycle& cocycle, std::int64_t t, Complex theta,
                             const GridFunction& v_t, std::size_t n_fwd, double tol, std::size_t n_max) {
  const auto slice = cocycle.at(theta);
  const std::size_t n_cells = cocycle.n_cells();
  const auto pull = [&](std::size_t n) {
    auto phi = GridFunction::constant(n_cells, 1.0);
    auto scratch = GridFunction::zeros(n_cells);
    for (std::int64_t s = t + static_cast<std::int64_t>(n) - 1; s >= t; --s) {
      slice.step_adjoint(s, phi.values(), scratch.values());
      const Complex c = scratch.integral();
      if (!(std::abs(c) >= kCollapse)) {
        throw NormalizerCollapse("adjoint normalizer collapsed at fiber t=" + std::to_string(s) + ", " +
                                 theta_str(theta));
      }
      scratch *= 1.0 / c;
      std::swap(phi, scratch);
    }
    const Complex p = pairing(phi, v_t);
    if (!(std::abs(p) >= kCollapse)) throw NormalizerCollapse("<phi, v> vanished, " + theta_str(theta));
    phi *= 1.0 / p;
    return phi;
  };
  std::size_t n = std::max<std::size_t>(1, n_fwd);
  GridFunction prev = pull(n);
  while (2 * n <= n_max) {
    GridFunction cur = pull(2 * n);
    n *= 2;
    if (sup_norm(cur - prev) <= tol) return cur;
    prev = std::move(cur);
  }
  throw NoConvergence("dual functional did not converge by n_max=" + std::to_string(n_max) + ", " +
                      theta_str(theta));
}

LogLinearFit fit_log_linear(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("log-linear fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ly = std::log(y[i]);
    sx += x[i];
    sy += ly;
    sxx += x[i] * x[i];
    sxy += x[i] * ly;
  }
  LogLinearFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  const double mean = sy / n;
  double ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ly = std::log(y[i]);
    ss_tot += (ly - mean) * (ly - mean);
    const double r = ly - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.residual = ss_tot > 0 ? std::sqrt(ss_res / ss_tot) : 0.0;
  return fit;
}

namespace {

std::vector<GridFunction> seeded_tests(const DecayParams& p, std::size_t n_cells) {
  if (!p.test_functions.empty()) return p.test_functions;
  std::vector<GridFunction> out;
  for (std::size_t k = 0; k < p.trials; ++k) out.push_back(random_step_function(n_cells, p.seed, k));
  return out;
}

DecayFit finish_fit(std::vector<double> envelope, double floor) {
  DecayFit fit;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < envelope.size(); ++k) {
    if (!(envelope[k] > floor)) break;
    xs.push_back(static_cast<double>(k));
    ys.push_back(envelope[k]);
  }
  fit.points_used = xs.size();
  if (xs.size() >= 2) {
    const auto lf = fit_log_linear(xs, ys);
    fit.r_hat = std::exp(lf.slope);
    fit.c_hat = std::exp(lf.intercept);
    fit.residual = lf.residual;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      fit.c_bound = std::max(fit.c_bound, ys[k] / std::pow(fit.r_hat, xs[k]));
    }
  } else {
    fit.degenerate = xs.empty();
    fit.c_bound = xs.empty() ? 0.0 : ys[0];
  }
  fit.envelope = std::move(envelope);
  return fit;
}

}  // namespace

DecayFit decay_rate(const TwistedCocycle& cocycle, Complex theta, const DecayParams& params) {
  const std::size_t n_cells = cocycle.n_cells();
  const auto data = equivariant_density(cocycle, params.t, theta);
  const GridFunction phi = dual_functional(cocycle, params.t, theta, data.v);
  const auto slice = cocycle.at(theta);

  std::vector<double> lambda_mod;
  {
    GridFunction v = data.v;
    auto scratch = GridFunction::zeros(n_cells);
    for (std::size_t k = 0; k < params.n; ++k) {
      lambda_mod.push_back(std::abs(normalized_step(slice, params.t + static_cast<std::int64_t>(k), v, scratch)));
    }
  }

  std::vector<double> envelope(params.n + 1, 0.0);
  bool any = false;
  auto scratch = GridFunction::zeros(n_cells);
  for (const auto& f : seeded_tests(params, n_cells)) {
    GridFunction w = f - pairing(phi, f) * data.v;
    const double norm0 = bv_norm(w);
    if (!(norm0 > 1e-12 * std::max(1.0, bv_norm(f)))) continue;
    any = true;
    envelope[0] = std::max(envelope[0], 1.0);
    for (std::size_t k = 0; k < params.n; ++k) {
      slice.step(params.t + static_cast<std::int64_t>(k), w.values(), scratch.values());
      std::swap(w, scratch);
      w *= 1.0 / lambda_mod[k];
      envelope[k + 1] = std::max(envelope[k + 1], bv_norm(w) / norm0);
    }
  }
  if (!any) {
    DecayFit fit;
    fit.degenerate = true;
    fit.envelope = std::move(envelope);
    return fit;
  }
  return finish_fit(std::move(envelope), params.floor);
}

DecayFit correlation_decay(const TwistedCocycle& cocycle, const DecayParams& params) {
  const std::size_t n_cells = cocycle.n_cells();
  const auto slice = cocycle.at(0.0);
  const auto data = equivariant_density(cocycle, params.t, 0.0);
  std::vector<GridFunction> v_orbit{data.v};
  {
    GridFunction v = data.v;
    auto scratch = GridFunction::zeros(n_cells);
    for (std::size_t k = 0; k < params.n; ++k) {
      normalized_step(slice, params.t + static_cast<std::int64_t>(k), v, scratch);
      v_orbit.push_back(v);
    }
  }
  std::vector<double> envelope(params.n + 1, 0.0);
  auto scratch = GridFunction::zeros(n_cells);
  bool any = false;
  for (const auto& f : seeded_tests(params, n_cells)) {
    const GridFunction fv = combine(f, data.v, CombineOp::multiply);
    const Complex mean = fv.integral();
    const double scale = bv_norm(f);
    if (!(scale > 0.0)) continue;
    GridFunction w = fv;
    const double e0 = l1_norm(w - mean * v_orbit[0]) / scale;
    if (!(e0 > 1e-12)) continue;
    any = true;
    envelope[0] = std::max(envelope[0], e0);
    for (std::size_t k = 0; k < params.n; ++k) {
      slice.step(params.t + static_cast<std::int64_t>(k), w.values(), scratch.values());
      std::swap(w, scratch);
      envelope[k + 1] = std::max(envelope[k + 1], l1_norm(w - mean * v_orbit[k + 1]) / scale);
    }
  }
  if (!any) {
    DecayFit fit;
    fit.degenerate = true;
    fit.envelope = std::move(envelope);
    return fit;
  }
  const double first = envelope[0];
  return finish_fit(std::move(envelope), params.floor * first);
}

double correlation(const TwistedCocycle& cocycle, std::int64_t t, std::size_t n, const GridFunction& f,
                   const GridFunction& h) {
  const auto v_t = equivariant_density(cocycle, t, 0.0).v;
  const auto v_tn = equivariant_density(cocycle, t + static_cast<std::int64_t>(n), 0.0).v;
  const GridFunction fv = combine(f, v_t, CombineOp::multiply);
  const auto pushed = cocycle_apply(cocycle, t, n, 0.0, fv).result;
  return (pairing(h, pushed) - fv.integral() * pairing(h, v_tn)).real();
}

}  // namespace qspec
