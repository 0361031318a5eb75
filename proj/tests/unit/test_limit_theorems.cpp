#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "qspec/limit_theorems.hpp"
#include "qspec/rng.hpp"

using namespace qspec;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

TwistedCocycle doubling(Observable g, std::size_t n_cells = 1024) {
  return TwistedCocycle(MapFamily({PiecewiseLinearMap::doubling()}), DrivingSystem::bernoulli({1.0}, 1),
                        std::move(g), n_cells);
}

TwistedCocycle centered(const TwistedCocycle& c, std::int64_t lo, std::int64_t hi) {
  return c.with_observable(center_observable(c, {lo, hi}));
}

LambdaCurve synthetic_curve(double sigma2, std::size_t points = 61, double reach = 0.3) {
  LambdaCurve c;
  c.axis = Axis::real;
  for (std::size_t i = 0; i < points; ++i) {
    const double th = -reach + 2.0 * reach * static_cast<double>(i) / static_cast<double>(points - 1);
    c.thetas.push_back(th);
    c.values.push_back(0.5 * sigma2 * th * th);
  }
  return c;
}

SampleBatch batch_of(std::vector<double> sums, std::size_t n) {
  SampleBatch b;
  b.n = n;
  b.count = sums.size();
  b.sums = std::move(sums);
  return b;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST(LegendreRate, ZeroEpsilon) {
  const auto rate = legendre_rate(synthetic_curve(0.5), std::vector<double>{0.0});
  EXPECT_NEAR(rate.c_values[0], 0.0, 1e-15);
  EXPECT_NEAR(rate.theta_star[0], 0.0, 1e-12);
}

TEST(LegendreRate, QuadraticClosedForm) {
  // Lambda = theta^2 / 4 has c(eps) = eps^2 / (2 Sigma^2) = eps^2.
  const std::vector<double> eps{0.01, 0.02, 0.05, 0.1, 0.12};
  const auto rate = legendre_rate(synthetic_curve(0.5), eps);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_NEAR(rate.c_values[i], eps[i] * eps[i], 1e-10) << "eps=" << eps[i];
    EXPECT_NEAR(rate.theta_star[i], 2.0 * eps[i], 1e-9);
  }
}

TEST(LegendreRate, RateProperties) {
  std::vector<double> eps;
  for (int i = 1; i <= 12; ++i) eps.push_back(0.01 * i);
  const auto rate = legendre_rate(synthetic_curve(0.5), eps);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_GT(rate.c_values[i], 0.0);
    if (i > 0) {
      EXPECT_GE(rate.c_values[i], rate.c_values[i - 1]);
    }
  }
  EXPECT_EQ(convexity_violations(eps, rate.c_values, 1e-12), 0u);
}

TEST(LegendreRate, ThetaPlusRestrictsDomain) {
  const auto rate = legendre_rate(synthetic_curve(0.5), std::vector<double>{0.1}, 0.1);
  EXPECT_NEAR(rate.theta_plus, 0.1, 1e-15);
  // sup over |theta| <= 0.1 of 0.1 theta - theta^2 / 4 is at the boundary.
  EXPECT_NEAR(rate.c_values[0], 0.01 - 0.0025, 1e-12);
  EXPECT_FALSE(rate.warnings.empty());
  EXPECT_NEAR(rate.epsilon0, 0.05, 1e-2);
}

TEST(LegendreRate, RejectsNonConvexAndImaginary) {
  auto c = synthetic_curve(0.5, 11);
  c.values[3] += 0.01;
  EXPECT_THROW((void)legendre_rate(c, std::vector<double>{0.05}), NonConvexCurve);
  auto im = synthetic_curve(0.5, 11);
  im.axis = Axis::imaginary;
  EXPECT_THROW((void)legendre_rate(im, std::vector<double>{0.05}), InvalidArgument);
}

TEST(LegendreRate, MeasuredDoublingCurve) {
  const auto c = centered(doubling(Observable::cosine()), -5000, 100);
  CurveParams p;
  p.n_orbit = 4000;
  std::vector<double> grid;
  for (int i = -6; i <= 6; ++i) grid.push_back(0.05 * i);
  const auto curve = lambda_curve(c, Axis::real, grid, p);
  const auto rate = legendre_rate(curve, std::vector<double>{0.05});
  EXPECT_NEAR(rate.c_values[0], 0.0025, 0.2 * 0.0025);
}

TEST(StartPoints, LebesgueIsIdentity) {
  const auto xs = sample_start_points(GridFunction::constant(64, 1.0), 100, 5);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(xs[i], start_uniform(5, i));
}

TEST(StartPoints, Support) {
  const auto xs = sample_start_points(GridFunction::indicator(64, 0.0, 0.5, 2.0), 10000, 6);
  for (double x : xs) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 0.5);
  }
}

TEST(StartPoints, ChiSquareGoodnessOfFit) {
  constexpr std::size_t bins = 64, count = 100000;
  const auto v0 = GridFunction::sample(bins, [](double x) { return 1.0 + 0.8 * std::cos(kTwoPi * x); });
  const auto xs = sample_start_points(v0, count, 7);
  std::vector<double> hist(bins, 0.0);
  for (double x : xs) hist[static_cast<std::size_t>(x * bins)] += 1.0;
  double chi2 = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double expected = count * v0[b].real() / bins;
    chi2 += (hist[b] - expected) * (hist[b] - expected) / expected;
  }
  // 99th percentile of chi^2 with 63 degrees of freedom.
  EXPECT_LT(chi2, 92.01);
}

TEST(StartPoints, RejectsNegativeDensity) {
  auto v = GridFunction::constant(8, 1.0);
  v[2] = -0.1;
  EXPECT_THROW((void)sample_start_points(v, 10, 1), InvalidDensity);
  EXPECT_THROW((void)sample_start_points(GridFunction::zeros(8), 10, 1), InvalidDensity);
}

TEST(StartLaw, RoundTrip) {
  for (auto l : {StartLaw::mu_omega, StartLaw::lebesgue}) EXPECT_EQ(parse_start_law(to_string(l)), l);
  EXPECT_THROW((void)parse_start_law("gibbs"), InvalidArgument);
}

TEST(BirkhoffSamples, ZeroObservable) {
  const auto c = doubling(Observable::zero(), 64);
  const auto b = birkhoff_samples(c, {0, 50, 1000, 3, StartLaw::lebesgue, 1});
  ASSERT_EQ(b.sums.size(), 1000u);
  for (double s : b.sums) EXPECT_EQ(s, 0.0);
}

TEST(BirkhoffSamples, SingleStepMeanIsZero) {
  const auto c = doubling(Observable::cosine(), 64);
  constexpr std::size_t count = 100000;
  const auto b = birkhoff_samples(c, {0, 1, count, 8, StartLaw::lebesgue, 1});
  const double sd = std::sqrt(0.5);
  EXPECT_NEAR(mean(b.sums), 0.0, 3.0 * sd / std::sqrt(static_cast<double>(count)));
}

TEST(BirkhoffSamples, MatchesExactTrajectory) {
  // Short orbits: fixed-point sums equal double-precision trajectories.
  const MapFamily fam({PiecewiseLinearMap::doubling(), PiecewiseLinearMap::tripling()});
  const auto drive = DrivingSystem::bernoulli({0.5, 0.5}, 12);
  const TwistedCocycle c(fam, drive, Observable::cosine(), 64);
  const auto b = birkhoff_samples(c, {3, 10, 50, 9, StartLaw::lebesgue, 1});
  for (std::size_t i = 0; i < 50; ++i) {
    const auto tr = trajectory(fam, drive, 3, 9, start_uniform(9, i));
    double s = 0.0;
    for (double x : tr) s += std::cos(kTwoPi * x);
    EXPECT_NEAR(b.sums[i], s, 1e-9) << "sample " << i;
  }
}

TEST(BirkhoffSamples, WorkerCountInvariant) {
  const auto c = centered(TwistedCocycle(MapFamily({PiecewiseLinearMap::doubling(), PiecewiseLinearMap::tripling()}),
                                         DrivingSystem::bernoulli({0.5, 0.5}, 2), Observable::indicator(0.3), 256),
                          -100, 400);
  const SampleParams p1{0, 200, 5000, 77, StartLaw::mu_omega, 1};
  SampleParams p8 = p1;
  p8.workers = 8;
  EXPECT_EQ(birkhoff_samples(c, p1).sums, birkhoff_samples(c, p8).sums);
}

TEST(BirkhoffSamples, DisjointSeedsUncorrelated) {
  const auto c = doubling(Observable::cosine(), 64);
  constexpr std::size_t count = 20000;
  const auto a = birkhoff_samples(c, {0, 20, count, 100, StartLaw::lebesgue, 1}).sums;
  const auto b = birkhoff_samples(c, {0, 20, count, 101, StartLaw::lebesgue, 1}).sums;
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < count; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  EXPECT_LE(std::abs(sab / std::sqrt(saa * sbb)), 3.0 / std::sqrt(static_cast<double>(count)));
}

TEST(BirkhoffSamples, StartLawsAgreeForLebesgueDensity) {
  const auto c = doubling(Observable::cosine(), 64);
  const auto a = birkhoff_samples(c, {0, 30, 2000, 4, StartLaw::lebesgue, 1}).sums;
  const auto b = birkhoff_samples(c, {0, 30, 2000, 4, StartLaw::mu_omega, 1}).sums;
  EXPECT_EQ(a, b);
}

TEST(BirkhoffSamples, RejectsZeroLength) {
  EXPECT_THROW((void)birkhoff_samples(doubling(Observable::cosine(), 64), {0, 0, 10, 1, StartLaw::lebesgue, 1}),
               InvalidArgument);
}

TEST(Ldp, EmptyTailIsFlagged) {
  const auto rate = legendre_rate(synthetic_curve(0.5), std::vector<double>{0.2});
  const std::vector<SampleBatch> batches{batch_of({0.0, 1.0, -1.0, 2.0}, 100)};
  const auto rep = ldp_experiment(batches, rate);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].p_hat, 0.0);
  EXPECT_TRUE(std::isinf(rep.rows[0].rate_hat));
  EXPECT_TRUE(rep.rows[0].low_stat);
}

TEST(Ldp, TailCountsAndTrend) {
  // Gaussian sums with variance n/2 against the matching quadratic rate.
  const auto rate = legendre_rate(synthetic_curve(0.5), std::vector<double>{0.05, -0.05});
  std::vector<SampleBatch> batches;
  for (std::size_t n : {200u, 800u}) {
    CounterRng rng(3, n);
    std::vector<double> s(400000);
    for (auto& x : s) x = std::sqrt(0.5 * n) * rng.normal();
    batches.push_back(batch_of(std::move(s), n));
  }
  const auto rep = ldp_experiment(batches, rate);
  ASSERT_EQ(rep.rows.size(), 4u);
  ASSERT_EQ(rep.trends.size(), 2u);
  for (const auto& t : rep.trends) EXPECT_TRUE(t.gap_shrinks) << "eps=" << t.epsilon;
  for (const auto& r : rep.rows) {
    // Exact Gaussian tail P(Z > eps sqrt(2n)).
    const double p = 0.5 * std::erfc(std::abs(r.epsilon) * std::sqrt(static_cast<double>(r.n)));
    EXPECT_NEAR(r.p_hat, p, 5.0 * std::sqrt(p / 400000.0));
  }
}

TEST(Clt, SyntheticNormalSelfTest) {
  constexpr std::size_t count = 100000, n = 400;
  CounterRng rng(11, 0);
  std::vector<double> s(count);
  for (auto& x : s) x = std::sqrt(0.5 * n) * rng.normal();
  const auto r = clt_experiment(batch_of(std::move(s), n), 0.5);
  EXPECT_LE(r.ks, 1.63 / std::sqrt(static_cast<double>(count)));
  EXPECT_NEAR(r.var_emp, 0.5, 0.02);
}

TEST(Clt, DetectsWrongVariance) {
  constexpr std::size_t count = 20000;
  CounterRng rng(12, 0);
  std::vector<double> s(count);
  for (auto& x : s) x = rng.normal();
  // sup |Phi(x) - Phi(x / 2)| = 0.1613 at x = 2 sqrt(log(4) / 3).
  EXPECT_NEAR(ks_normal(s, 4.0), 0.1613, 0.015);
}

TEST(Clt, DegenerateVarianceRefused) {
  EXPECT_THROW((void)clt_experiment(batch_of({1.0, 2.0}, 10), 0.0), DegenerateVariance);
}

TEST(Lclt, FarTailIsZero) {
  const auto rep = lclt_experiment(batch_of({-1.0, 0.0, 1.0}, 100), 0.5, {-0.25, 0.25}, std::vector<double>{1000.0});
  EXPECT_EQ(rep.statistic[0], 0.0);
  EXPECT_LT(rep.target[0], 1e-300);
}

TEST(Lclt, StatisticDefinition) {
  const std::vector<double> sums{-0.3, -0.1, 0.0, 0.1, 0.2, 0.26, 1.0, 2.0};
  const auto rep = lclt_experiment(batch_of(sums, 4), 0.5, {-0.25, 0.25}, std::vector<double>{0.0, -0.1});
  const double scale = std::sqrt(4 * 0.5);
  EXPECT_NEAR(rep.statistic[0], scale * 4.0 / 8.0, 1e-15);
  EXPECT_NEAR(rep.statistic[1], scale * 5.0 / 8.0, 1e-15);  // S in [-0.15, 0.35]
  EXPECT_NEAR(rep.target[0], 0.5 / std::sqrt(kTwoPi), 1e-15);
  EXPECT_NEAR(rep.sup_error, std::max(std::abs(rep.statistic[0] - rep.target[0]),
                                      std::abs(rep.statistic[1] - rep.target[1])), 1e-15);
}

TEST(Lclt, LinearInIntervalLength) {
  const auto c = centered(doubling(Observable::cosine()), -100, 3000);
  const auto b = birkhoff_samples(c, {0, 1000, 200000, 5, StartLaw::mu_omega, 1});
  const std::vector<double> s{-5.0, 0.0, 7.5};
  const auto narrow = lclt_experiment(b, 0.5, {-0.25, 0.25}, s);
  const auto wide = lclt_experiment(b, 0.5, {-0.5, 0.5}, s);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(wide.statistic[i], 2.0 * narrow.statistic[i], 0.03);
}

TEST(Lclt, MassRatioNearOne) {
  const auto c = centered(doubling(Observable::cosine()), -100, 3000);
  const auto b = birkhoff_samples(c, {0, 1000, 100000, 6, StartLaw::mu_omega, 1});
  std::vector<double> s;
  const double half = 4.0 * std::sqrt(1000 * 0.5);
  for (int i = 0; i <= 160; ++i) s.push_back(-half + 2.0 * half * i / 160.0);
  const auto rep = lclt_experiment(b, 0.5, {-0.25, 0.25}, s);
  EXPECT_NEAR(rep.mass_ratio, 1.0, 0.05);
}

TEST(LcltPeriodic, OffLatticeMassIsZero) {
  const auto c = centered(doubling(Observable::indicator(0.5)), -100, 500);
  const auto lat = lattice_detect(c.observable(), 1);
  ASSERT_TRUE(lat.has_value());
  const std::size_t n = 200;
  const auto b = birkhoff_samples(c, {0, n, 20000, 9, StartLaw::mu_omega, 1});
  const double eta = eta_bar(*lat, c, 0, n);
  EXPECT_NEAR(eta, -static_cast<double>(n) / 2, 1e-9);
  const auto rep = lclt_periodic_experiment(b, 0.25, {-0.25, 0.25}, std::vector<double>{0.0, 0.5, 3.0}, eta, lat->span);
  EXPECT_EQ(rep.off_lattice_mass, 0.0);
  EXPECT_TRUE(rep.periodic);
  // s = 0.5 puts J between lattice points: zero count, zero target.
  EXPECT_EQ(rep.target[1], 0.0);
  EXPECT_EQ(rep.statistic[1], 0.0);
  EXPECT_GT(rep.target[0], 0.0);
}

TEST(LcltPeriodic, LatticeCountAgainstBruteForce) {
  const double eta = -7.3, span = 1.0;
  const Interval J{-1.2, 2.7};
  const std::vector<double> s{0.0, 0.4, 1.1, -3.3};
  const auto rep = lclt_periodic_experiment(batch_of({0.0}, 100), 0.25, J, s, eta, span);
  for (std::size_t i = 0; i < s.size(); ++i) {
    int count = 0;
    for (int l = -100; l <= 100; ++l) {
      const double x = eta + s[i] + l * span;
      count += (x >= J.lo && x <= J.hi) ? 1 : 0;
    }
    const double expected = span * std::exp(-s[i] * s[i] / (2.0 * 100 * 0.25)) / std::sqrt(kTwoPi) * count;
    EXPECT_NEAR(rep.target[i], expected, 1e-14) << "s=" << s[i];
  }
}

TEST(LcltPeriodic, RequiresLattice) {
  EXPECT_THROW((void)lclt_periodic_experiment(batch_of({0.0}, 1), 0.25, {-0.25, 0.25}, std::vector<double>{0.0}, 0.0, 0.0),
               NoLattice);
}

TEST(LatticeDetect, UnitLattice) {
  const auto lat = lattice_detect(Observable::indicator(0.5, 1.0, 0.5), 1);
  ASSERT_TRUE(lat.has_value());
  EXPECT_DOUBLE_EQ(lat->eta[0], -0.5);
  EXPECT_DOUBLE_EQ(lat->span, 1.0);
}

TEST(LatticeDetect, SpanThree) {
  const auto lat = lattice_detect(Observable::indicator(0.5, 3.0, 1.5), 1);
  ASSERT_TRUE(lat.has_value());
  EXPECT_DOUBLE_EQ(lat->span, 3.0);
}

TEST(LatticeDetect, CosineHasNoLattice) { EXPECT_FALSE(lattice_detect(Observable::cosine(), 1).has_value()); }

TEST(LatticeDetect, ZeroObservableSpanZero) {
  const auto lat = lattice_detect(Observable::zero(), 1);
  ASSERT_TRUE(lat.has_value());
  EXPECT_EQ(lat->span, 0.0);
}

TEST(Aperiodicity, CosineIsAperiodic) {
  const auto c = centered(doubling(Observable::cosine()), -5000, 100);
  ScanParams p;
  p.n_orbit = 2000;
  const std::vector<double> t{0.5, 1.0, 2.0, 3.0};
  const auto rep = aperiodicity_scan(c, t, p);
  EXPECT_EQ(rep.classification, Classification::aperiodic_evidence);
  for (double v : rep.lambda_it) EXPECT_LE(v, -1e-3);
  for (double r : rep.rho_fit) EXPECT_LT(r, 1.0);
}

TEST(Aperiodicity, IndicatorIsPeriodicWithUnitSpan) {
  const auto c = centered(doubling(Observable::indicator(0.5)), -5000, 100);
  ScanParams p;
  p.n_orbit = 2000;
  const std::vector<double> t{0.5, 1.0};
  const auto rep = aperiodicity_scan(c, t, p);
  EXPECT_EQ(rep.classification, Classification::periodic_lattice);
  ASSERT_TRUE(rep.lattice.has_value());
  EXPECT_EQ(rep.lattice->span, 1.0);
  ASSERT_TRUE(rep.lambda_at_lattice.has_value());
  EXPECT_GE(*rep.lambda_at_lattice, -1e-3);
}

TEST(Aperiodicity, ZeroObservableDegenerate) {
  const auto c = doubling(Observable::zero(), 256);
  ScanParams p;
  p.n_orbit = 200;
  const std::vector<double> t{0.5, 2.0};
  const auto rep = aperiodicity_scan(c, t, p);
  EXPECT_EQ(rep.classification, Classification::periodic_lattice);
  EXPECT_TRUE(rep.degenerate);
  EXPECT_EQ(rep.lattice->span, 0.0);
  EXPECT_FALSE(rep.warnings.empty());
  for (double v : rep.lambda_it) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Aperiodicity, ClassifiersExclusive) {
  EXPECT_NE(to_string(Classification::aperiodic_evidence), to_string(Classification::periodic_lattice));
  EXPECT_EQ(to_string(Classification::inconclusive), "inconclusive");
}
