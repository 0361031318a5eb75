#include "qspec/limit_theorems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "qspec/rng.hpp"
#include "qspec/util.hpp"

namespace qspec {

double RateFunction::at(double epsilon) const {
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (epsilons[i] == epsilon) return c_values[i];
  }
  throw InvalidArgument("epsilon " + format_double(epsilon) + " not in the rate table");
}

RateFunction legendre_rate(const LambdaCurve& curve, std::span<const double> epsilons, double theta_plus) {
  if (curve.axis != Axis::real) throw InvalidArgument("legendre_rate needs a real-axis curve");
  const std::size_t flagged = std::max(curve.convexity_violations, convexity_violations(curve.thetas, curve.values));
  if (flagged > 0) {
    throw NonConvexCurve("Lambda curve has " + std::to_string(flagged) + " convexity violations");
  }
  std::vector<double> xs, ys;
  double grid_max = 0.0;
  for (double th : curve.thetas) grid_max = std::max(grid_max, std::abs(th));
  RateFunction rate;
  rate.theta_plus = theta_plus > 0.0 ? std::min(theta_plus, grid_max) : grid_max;
  for (std::size_t i = 0; i < curve.thetas.size(); ++i) {
    if (std::abs(curve.thetas[i]) <= rate.theta_plus * (1.0 + 1e-15)) {
      xs.push_back(curve.thetas[i]);
      ys.push_back(curve.values[i]);
    }
  }
  if (xs.size() < 3) throw InvalidArgument("legendre_rate needs at least 3 grid points within theta_plus");
  const std::size_t m = xs.size();
  rate.epsilon0 = (ys[m - 1] - ys[m - 2]) / (xs[m - 1] - xs[m - 2]);
  const double eps_lo = (ys[1] - ys[0]) / (xs[1] - xs[0]);

  for (double eps : epsilons) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (xs[i] * eps - ys[i] > xs[best] * eps - ys[best]) best = i;
    }
    double c = xs[best] * eps - ys[best];
    double arg = xs[best];
    if (best > 0 && best + 1 < m) {
      const double x0 = xs[best - 1], x1 = xs[best], x2 = xs[best + 1];
      const double f0 = x0 * eps - ys[best - 1], f1 = c, f2 = x2 * eps - ys[best + 1];
      const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
      const double a = (x2 * (f1 - f0) + x1 * (f0 - f2) + x0 * (f2 - f1)) / denom;
      const double b = (x2 * x2 * (f0 - f1) + x1 * x1 * (f2 - f0) + x0 * x0 * (f1 - f2)) / denom;
      const double c0 = (x1 * x2 * (x1 - x2) * f0 + x2 * x0 * (x2 - x0) * f1 + x0 * x1 * (x0 - x1) * f2) / denom;
      if (a < 0.0) {
        const double xv = -b / (2.0 * a);
        if (xv >= x0 && xv <= x2) {
          c = std::max(c, c0 - b * b / (4.0 * a));
          arg = xv;
        }
      }
    } else if (eps != 0.0) {
      rate.warnings.push_back("epsilon " + format_double(eps) +
                              ": supremum at the theta_plus boundary; rate is a lower bound");
    }
    if (eps > rate.epsilon0 || eps < eps_lo) {
      rate.warnings.push_back("epsilon " + format_double(eps) + " outside (" + format_double(eps_lo) + ", " +
                              format_double(rate.epsilon0) + ")");
    }
    rate.epsilons.push_back(eps);
    rate.c_values.push_back(std::max(c, 0.0));
    rate.theta_star.push_back(arg);
  }
  return rate;
}

double start_uniform(std::uint64_t seed, std::uint64_t index) noexcept {
  CounterRng rng(seed, index);
  return to_unit(rng.next_u64());
}

namespace {

// Exact inverse of the CDF of a piecewise-constant density.
class InverseCdf {
 public:
  explicit InverseCdf(const GridFunction& v0) : n_(v0.size()) {
    for (std::size_t i = 0; i < n_; ++i) {
      const double c = v0[i].real();
      if (!(c >= -1e-12) || !std::isfinite(c)) {
        throw InvalidDensity("density cell " + std::to_string(i) + " = " + format_double(c) + " is negative");
      }
      if (std::abs(c - 1.0) > 1e-14) identity_ = false;
    }
    cum_.assign(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) cum_[i + 1] = cum_[i] + std::max(v0[i].real(), 0.0);
    if (!(cum_[n_] > 0.0)) throw InvalidDensity("density has no positive mass");
    const double total = cum_[n_];
    for (auto& c : cum_) c /= total;
  }

  [[nodiscard]] bool identity() const noexcept { return identity_; }

  [[nodiscard]] double operator()(double u) const noexcept {
    if (identity_) return u;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    std::size_t i = static_cast<std::size_t>(std::distance(cum_.begin(), it));
    i = std::clamp<std::size_t>(i, 1, n_) - 1;
    while (i + 1 < n_ && cum_[i + 1] <= cum_[i]) ++i;
    const double w = cum_[i + 1] - cum_[i];
    const double frac = w > 0.0 ? std::clamp((u - cum_[i]) / w, 0.0, 1.0) : 0.0;
    const double x = (static_cast<double>(i) + frac) / static_cast<double>(n_);
    const double cell_hi = static_cast<double>(i + 1) / static_cast<double>(n_);
    return std::min(x, std::nextafter(cell_hi, 0.0));
  }

 private:
  std::size_t n_;
  std::vector<double> cum_;
  bool identity_ = true;
};

// cos(2 pi phase 2^-64) from a 4096-entry table and a third-order correction
// in the residual angle; absolute error below 3e-13.
class CosTable {
 public:
  static const CosTable& get() {
    static const CosTable table;
    return table;
  }
  [[nodiscard]] double operator()(std::uint64_t phase) const noexcept {
    const std::size_t idx = phase >> 52;
    const double d = static_cast<double>(phase & ((std::uint64_t{1} << 52) - 1)) * kScale;
    const double d2 = d * d;
    return cos_[idx] * (1.0 - 0.5 * d2) - sin_[idx] * d * (1.0 - d2 / 6.0);
  }

 private:
  static constexpr double kScale = 2.0 * std::numbers::pi * 0x1.0p-64;
  CosTable() {
    for (std::size_t i = 0; i < cos_.size(); ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(cos_.size());
      cos_[i] = std::cos(a);
      sin_[i] = std::sin(a);
    }
  }
  std::array<double, 4096> cos_{};
  std::array<double, 4096> sin_{};
};

struct TrigEval {
  std::vector<std::pair<std::uint64_t, double>> terms;
  const CosTable* table = &CosTable::get();
  double operator()(std::size_t, std::uint64_t m) const noexcept {
    double s = 0.0;
    for (const auto& [k, a] : terms) s += a * (*table)(m * k);
    return s;
  }
};

struct IndicatorEval {
  std::uint64_t threshold = 0;
  bool never = false;
  double amplitude = 1.0;
  double offset = 0.0;
  double operator()(std::size_t, std::uint64_t m) const noexcept {
    return (!never && m >= threshold ? amplitude : 0.0) - offset;
  }
};

struct TableEval {
  std::vector<const double*> rows;  // per step
  std::vector<int> shifts;          // per step
  double operator()(std::size_t i, std::uint64_t m) const noexcept { return rows[i][m >> shifts[i]]; }
};

template <class Eval>
void run_samples(const Eval& eval, std::span<const FixedPointMap* const> maps, const InverseCdf* cdf,
                 const SampleParams& p, double offset_total, std::vector<double>& sums) {
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (p.count + kBlock - 1) / kBlock;
  parallel_for(blocks, p.workers, [&](std::size_t b) {
    const std::size_t end = std::min(p.count, (b + 1) * kBlock);
    for (std::size_t idx = b * kBlock; idx < end; ++idx) {
      CounterRng rng(p.seed, idx);
      const std::uint64_t first = rng.next_u64();
      std::uint64_t m = cdf ? double_to_fixed((*cdf)(to_unit(first))) : first;
      double s = 0.0;
      for (std::size_t i = 0; i < p.n; ++i) {
        s += eval(i, m);
        m = maps[i]->step(m, rng.next_u64());
      }
      sums[idx] = s - offset_total;
    }
  });
}

int log2_exact(std::size_t n) {
  int k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

}  // namespace

std::vector<double> sample_start_points(const GridFunction& v0, std::size_t count, std::uint64_t seed) {
  const InverseCdf cdf(v0);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = cdf(start_uniform(seed, i));
  return out;
}

std::string to_string(StartLaw law) { return law == StartLaw::mu_omega ? "mu_omega" : "lebesgue"; }

StartLaw parse_start_law(const std::string& s) {
  if (s == "mu_omega") return StartLaw::mu_omega;
  if (s == "lebesgue") return StartLaw::lebesgue;
  throw InvalidArgument("start_law must be mu_omega or lebesgue, got '" + s + "'");
}

SampleBatch birkhoff_samples(const TwistedCocycle& cocycle, const SampleParams& p) {
  if (p.n == 0) throw InvalidArgument("birkhoff_samples needs n >= 1");
  const Observable& obs = cocycle.observable();
  const MapFamily& family = cocycle.family();

  std::vector<FixedPointMap> fixed;
  fixed.reserve(family.size());
  for (const auto& map : family.maps()) fixed.emplace_back(map);

  SampleBatch batch;
  batch.t0 = p.t0;
  batch.n = p.n;
  batch.count = p.count;
  batch.seed = p.seed;
  batch.start_law = p.start_law;
  batch.sums.assign(p.count, 0.0);

  std::vector<std::size_t> symbols(p.n);
  std::vector<const FixedPointMap*> maps(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    const std::int64_t t = p.t0 + static_cast<std::int64_t>(i);
    symbols[i] = cocycle.symbol(t);
    maps[i] = &fixed[symbols[i]];
    batch.offset_total += obs.offset(t);
  }

  std::optional<InverseCdf> cdf;
  if (p.start_law == StartLaw::mu_omega) {
    cdf.emplace(equivariant_density(cocycle, p.t0, 0.0).v);
  }
  const InverseCdf* cdf_ptr = cdf && !cdf->identity() ? &*cdf : nullptr;

  const auto& spec = obs.spec();
  if (const auto* trig = std::get_if<TrigSpec>(&spec)) {
    TrigEval eval;
    for (const auto& term : trig->terms) {
      eval.terms.emplace_back(static_cast<std::uint64_t>(static_cast<std::int64_t>(term.k)), term.amplitude);
    }
    run_samples(eval, maps, cdf_ptr, p, batch.offset_total, batch.sums);
  } else if (const auto* ind = std::get_if<IndicatorSpec>(&spec)) {
    IndicatorEval eval;
    const long double thr = std::ceil(std::ldexp(static_cast<long double>(ind->threshold), 64));
    eval.never = thr >= 0x1.0p64L;
    eval.threshold = eval.never ? 0 : static_cast<std::uint64_t>(thr);
    eval.amplitude = ind->amplitude;
    eval.offset = ind->offset;
    run_samples(eval, maps, cdf_ptr, p, batch.offset_total, batch.sums);
  } else {
    const auto& table = std::get<TableSpec>(spec);
    TableEval eval;
    for (std::size_t i = 0; i < p.n; ++i) {
      const auto& row = table.per_symbol.size() == 1 ? table.per_symbol.front() : table.per_symbol.at(symbols[i]);
      eval.rows.push_back(row.data());
      eval.shifts.push_back(64 - log2_exact(row.size()));
    }
    run_samples(eval, maps, cdf_ptr, p, batch.offset_total, batch.sums);
  }
  return batch;
}

SampleBatch birkhoff_samples(const MapFamily& family, const DrivingSystem& driving, const Observable& observable,
                             std::int64_t t0, std::size_t n, std::size_t count, std::uint64_t seed,
                             StartLaw start_law, std::size_t n_cells, unsigned workers) {
  const TwistedCocycle cocycle(family, driving, observable, n_cells);
  return birkhoff_samples(cocycle, SampleParams{t0, n, count, seed, start_law, workers});
}

LdpReport ldp_experiment(std::span<const SampleBatch> batches, const RateFunction& rate, const LambdaCurve* curve) {
  LdpReport report;
  std::vector<const SampleBatch*> order;
  for (const auto& b : batches) order.push_back(&b);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->n < b->n; });

  const auto second_derivative = [&](double theta) {
    if (!curve || curve->thetas.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    const auto& x = curve->thetas;
    std::size_t i = 1;
    while (i + 2 < x.size() && std::abs(x[i + 1] - theta) < std::abs(x[i] - theta)) ++i;
    const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    const auto& y = curve->values;
    return 2.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0) / (h0 + h1);
  };

  for (std::size_t e = 0; e < rate.epsilons.size(); ++e) {
    const double eps = rate.epsilons[e];
    const double c = rate.c_values[e];
    const double lam2 = second_derivative(rate.theta_star[e]);
    std::vector<const LdpRow*> mine;
    const std::size_t first_row = report.rows.size();
    for (const auto* b : order) {
      const double level = static_cast<double>(b->n) * eps;
      std::size_t hits = 0;
      for (double s : b->sums) hits += eps >= 0.0 ? (s > level) : (s < level);
      LdpRow row;
      row.epsilon = eps;
      row.n = b->n;
      row.p_hat = static_cast<double>(hits) / static_cast<double>(b->count);
      const double nd = static_cast<double>(b->n);
      row.rate_hat = hits == 0 ? std::numeric_limits<double>::infinity() : -std::log(row.p_hat) / nd;
      row.c_eps = c;
      row.rel_gap = c > 0.0 ? std::abs(row.rate_hat - c) / c : std::numeric_limits<double>::infinity();
      row.low_stat = static_cast<double>(hits) < 50.0;
      const double pref = std::abs(rate.theta_star[e]) * std::sqrt(2.0 * std::numbers::pi * nd * lam2);
      row.rate_prefactor_corrected = row.rate_hat - std::log(pref) / nd;
      report.rows.push_back(row);
    }
    if (report.rows.size() - first_row >= 2) {
      const auto& small = report.rows[first_row];
      const auto& large = report.rows.back();
      report.trends.push_back({eps, small.n, large.n,
                               !small.low_stat && !large.low_stat && large.rel_gap <= small.rel_gap});
    }
  }
  return report;
}

double ks_normal(std::vector<double> z, double sigma2) {
  if (!(sigma2 > 0.0)) throw DegenerateVariance("sigma2 = " + format_double(sigma2) + " <= 0");
  if (z.empty()) throw InvalidArgument("ks_normal needs a non-empty sample");
  std::sort(z.begin(), z.end());
  const double scale = 1.0 / std::sqrt(2.0 * sigma2);
  const double nd = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = 0.5 * std::erfc(-z[i] * scale);
    d = std::max({d, static_cast<double>(i + 1) / nd - f, f - static_cast<double>(i) / nd});
  }
  return d;
}

CltResult clt_experiment(const SampleBatch& batch, double sigma2) {
  if (!(sigma2 > 0.0)) {
    throw DegenerateVariance("CLT refused: sigma2 = " + format_double(sigma2) +
                             " <= 0 (degenerate, observable may be a coboundary)");
  }
  if (batch.sums.empty()) throw InvalidArgument("empty sample batch");
  CltResult out;
  out.n = batch.n;
  out.count = batch.count;
  out.sigma2 = sigma2;
  const double root_n = std::sqrt(static_cast<double>(batch.n));
  std::vector<double> z(batch.sums.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = batch.sums[i] / root_n;
    sq += z[i] * z[i];
  }
  out.var_emp = sq / static_cast<double>(z.size());
  out.ks = ks_normal(std::move(z), sigma2);
  return out;
}

namespace {

LcltReport lclt_common(const SampleBatch& batch, double sigma2, Interval J, std::span<const double> s_grid) {
  if (!(sigma2 > 0.0)) throw DegenerateVariance("LCLT refused: sigma2 = " + format_double(sigma2) + " <= 0");
  if (!(J.hi > J.lo)) throw InvalidArgument("LCLT interval J must have positive length");
  if (batch.sums.empty()) throw InvalidArgument("empty sample batch");
  LcltReport r;
  r.s_grid.assign(s_grid.begin(), s_grid.end());
  r.J = J;
  std::vector<double> sorted = batch.sums;
  std::sort(sorted.begin(), sorted.end());
  const double scale = std::sqrt(static_cast<double>(batch.n) * sigma2);
  for (double s : s_grid) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), J.lo - s);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), J.hi - s);
    const auto k = static_cast<double>(std::distance(lo, hi));
    r.statistic.push_back(scale * k / static_cast<double>(sorted.size()));
  }
  double integral = 0.0;
  for (std::size_t i = 1; i < r.s_grid.size(); ++i) {
    integral += 0.5 * (r.statistic[i] + r.statistic[i - 1]) * (r.s_grid[i] - r.s_grid[i - 1]);
  }
  r.mass_ratio = integral / (J.length() * scale);
  return r;
}

void finish_errors(LcltReport& r) {
  r.sup_error = 0.0;
  for (std::size_t i = 0; i < r.statistic.size(); ++i) {
    r.sup_error = std::max(r.sup_error, std::abs(r.statistic[i] - r.target[i]));
  }
}

}  // namespace

LcltReport lclt_experiment(const SampleBatch& batch, double sigma2, Interval J, std::span<const double> s_grid) {
  LcltReport r = lclt_common(batch, sigma2, J, s_grid);
  const double var = static_cast<double>(batch.n) * sigma2;
  for (double s : r.s_grid) {
    r.target.push_back(std::exp(-s * s / (2.0 * var)) * J.length() / std::sqrt(2.0 * std::numbers::pi));
  }
  finish_errors(r);
  return r;
}

LcltReport lclt_periodic_experiment(const SampleBatch& batch, double sigma2, Interval J,
                                    std::span<const double> s_grid, double eta_bar_n, double span) {
  if (!(span > 0.0)) throw NoLattice("periodic LCLT needs a lattice span > 0, got " + format_double(span));
  LcltReport r = lclt_common(batch, sigma2, J, s_grid);
  r.periodic = true;
  r.lattice_span = span;
  r.eta_bar_n = eta_bar_n;
  const double var = static_cast<double>(batch.n) * sigma2;
  for (double s : r.s_grid) {
    const double lo = std::ceil((J.lo - eta_bar_n - s) / span);
    const double hi = std::floor((J.hi - eta_bar_n - s) / span);
    const double lattice_points = std::max(0.0, hi - lo + 1.0);
    r.target.push_back(span * std::exp(-s * s / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi) * lattice_points);
  }
  std::size_t off = 0;
  for (double x : batch.sums) {
    const double q = (x - eta_bar_n) / span;
    if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, std::abs(q))) ++off;
  }
  r.off_lattice_mass = static_cast<double>(off) / static_cast<double>(batch.sums.size());
  finish_errors(r);
  return r;
}

std::optional<LatticeInfo> lattice_detect(const Observable& observable, std::size_t n_symbols, std::size_t n_cells,
                                          double tol) {
  LatticeInfo info;
  std::int64_t g = 0;
  for (std::size_t s = 0; s < std::max<std::size_t>(1, n_symbols); ++s) {
    const auto values = observable.raw_grid(s, n_cells);
    const double eta = values.front();
    for (double v : values) {
      const double k = v - eta;
      const double r = std::round(k);
      if (std::abs(k - r) > tol) return std::nullopt;
      g = std::gcd(g, static_cast<std::int64_t>(std::abs(r)));
    }
    info.eta.push_back(eta);
  }
  info.span = static_cast<double>(g);
  return info;
}

double eta_bar(const LatticeInfo& lattice, const TwistedCocycle& cocycle, std::int64_t t0, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t t = t0 + static_cast<std::int64_t>(i);
    const std::size_t sym = lattice.eta.size() == 1 ? 0 : cocycle.symbol(t);
    s += lattice.eta.at(sym) - cocycle.observable().offset(t);
  }
  return s;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::aperiodic_evidence:
      return "aperiodic_evidence";
    case Classification::periodic_lattice:
      return "periodic_lattice";
    case Classification::inconclusive:
      break;
  }
  return "inconclusive";
}

AperiodicityReport aperiodicity_scan(const TwistedCocycle& cocycle, std::span<const double> t_grid,
                                     const ScanParams& params) {
  AperiodicityReport rep;
  rep.t_grid.assign(t_grid.begin(), t_grid.end());
  const std::size_t m = t_grid.size();
  rep.lambda_it.assign(m, 0.0);
  rep.rho_fit.assign(m, 0.0);
  rep.c_fit.assign(m, 0.0);
  const std::size_t n_cells = cocycle.n_cells();
  const std::size_t k_steps = std::max<std::size_t>(4, params.decay_steps);
  const std::int64_t decay_start = params.t_end - static_cast<std::int64_t>(k_steps);

  std::vector<char> collapsed(m, 0);
  parallel_for(m, params.workers, [&](std::size_t i) {
    const Complex theta(0.0, t_grid[i]);
    try {
      rep.lambda_it[i] = lyapunov_exponent(cocycle, theta, params.n_orbit, params.n_burn, params.t_end).value;
    } catch (const NormalizerCollapse&) {
      // The twisted cocycle annihilates the density: Lambda(it) = -inf.
      rep.lambda_it[i] = -std::numeric_limits<double>::infinity();
      collapsed[i] = 1;
    }

    const auto slice = cocycle.at(theta);
    std::vector<double> env(k_steps + 1, 0.0);
    std::vector<GridFunction> tests{GridFunction::constant(n_cells, 1.0)};
    for (std::size_t k = 0; k + 1 < params.decay_trials; ++k) {
      tests.push_back(random_step_function(n_cells, params.seed, k, 0.0, 1.0));
    }
    auto scratch = GridFunction::zeros(n_cells);
    for (auto& w : tests) {
      const double norm0 = bv_norm(w);
      if (!(norm0 > 0.0)) continue;
      env[0] = 1.0;
      for (std::size_t k = 0; k < k_steps; ++k) {
        slice.step(decay_start + static_cast<std::int64_t>(k), w.values(), scratch.values());
        std::swap(w, scratch);
        env[k + 1] = std::max(env[k + 1], bv_norm(w) / norm0);
      }
    }
    std::vector<double> xs, ys;
    for (std::size_t k = k_steps / 2; k <= k_steps; ++k) {
      if (env[k] > 1e-300) {
        xs.push_back(static_cast<double>(k));
        ys.push_back(env[k]);
      }
    }
    if (xs.size() >= 2) {
      const auto fit = fit_log_linear(xs, ys);
      rep.rho_fit[i] = std::exp(fit.slope);
      rep.c_fit[i] = std::exp(fit.intercept);
    }
  });

  for (std::size_t i = 0; i < m; ++i) {
    if (collapsed[i]) rep.warnings.push_back("normalizer collapsed at t=" + format_double(t_grid[i]) + ": Lambda(it) = -inf");
  }

  const Observable& obs = cocycle.observable();
  const std::size_t n_symbols = std::max({obs.symbol_count(), cocycle.driving().num_symbols(), std::size_t{1}});
  rep.lattice = lattice_detect(obs, n_symbols, params.lattice_cells);
  if (rep.lattice && rep.lattice->span == 0.0) {
    rep.classification = Classification::periodic_lattice;
    rep.degenerate = true;
    rep.warnings.push_back("observable is constant on every fiber: lattice span 0, degenerate");
    return rep;
  }
  if (rep.lattice) {
    const Complex theta(0.0, 2.0 * std::numbers::pi / rep.lattice->span);
    rep.lambda_at_lattice = lyapunov_exponent(cocycle, theta, params.n_orbit, params.n_burn, params.t_end).value;
    if (*rep.lambda_at_lattice >= params.threshold) {
      rep.classification = Classification::periodic_lattice;
      return rep;
    }
    rep.warnings.push_back("lattice form found but Lambda(2 pi i / span) = " +
                           format_double(*rep.lambda_at_lattice) + " below threshold");
  }
  const bool all_negative =
      m > 0 && std::all_of(rep.lambda_it.begin(), rep.lambda_it.end(), [&](double v) { return v <= params.threshold; });
  rep.classification = all_negative ? Classification::aperiodic_evidence : Classification::inconclusive;
  return rep;
}

}  // namespace qspec
