#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qspec/rds_model.hpp"

using namespace qspec;

namespace {

// [0,1/2) -> 2x (full), [1/2,1) -> 1.5x - 0.75 (image [0, 3/4)).
PiecewiseLinearMap skewed() {
  return PiecewiseLinearMap({{{0.0, 0.5}, 2.0, 0.0}, {{0.5, 1.0}, 1.5, -0.75}}, "skewed");
}

DrivingSystem golden_halves() { return DrivingSystem::rotation(DrivingSystem::default_alpha(), {0.0, 0.5}); }

double frac(double x) { return x - std::floor(x); }

}  // namespace

TEST(SymbolAt, RotationStartsInFirstCell) {
  const auto d = golden_halves();
  EXPECT_EQ(symbol_at(d, 0), 0u);
}

TEST(SymbolAt, RotationMatchesCellOfFractionalPart) {
  const auto d = golden_halves();
  const double a = DrivingSystem::default_alpha();
  EXPECT_NEAR(a, 0.5 * (std::sqrt(5.0) - 1.0), 1e-15);
  for (std::int64_t t = -50; t < 50; ++t) {
    const double x = frac(static_cast<double>(t) * a);
    EXPECT_EQ(symbol_at(d, t), x < 0.5 ? 0u : 1u) << "t=" << t;
  }
}

TEST(SymbolAt, Deterministic) {
  const auto rot = golden_halves();
  const auto ber = DrivingSystem::bernoulli({0.3, 0.7}, 9);
  for (std::int64_t t = -20; t < 20; ++t) {
    EXPECT_EQ(symbol_at(rot, t), symbol_at(rot, t));
    EXPECT_EQ(symbol_at(ber, t), DrivingSystem::bernoulli({0.3, 0.7}, 9).symbol_at(t));
  }
}

TEST(SymbolAt, BernoulliFrequencies) {
  const auto d = DrivingSystem::bernoulli({0.5, 0.5}, 42);
  std::size_t ones = 0;
  constexpr std::int64_t n = 100000;
  for (std::int64_t t = 0; t < n; ++t) ones += symbol_at(d, t);
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 0.01);
}

TEST(SymbolAt, BernoulliNegativeTimesAndWeights) {
  const auto d = DrivingSystem::bernoulli({0.2, 0.8}, 3);
  std::size_t ones = 0;
  constexpr std::int64_t n = 100000;
  for (std::int64_t t = -n; t < 0; ++t) ones += symbol_at(d, t);
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.8, 0.01);
}

TEST(SymbolAt, DrivingValidation) {
  EXPECT_THROW(DrivingSystem::bernoulli({0.5, 0.4}, 1), InvalidDriving);
  EXPECT_THROW(DrivingSystem::bernoulli({1.0, 0.0}, 1), InvalidDriving);
  EXPECT_THROW(DrivingSystem::rotation(1.5, {0.0, 0.5}), InvalidDriving);
  EXPECT_THROW(DrivingSystem::rotation(0.3, {0.1, 0.5}), InvalidDriving);
  EXPECT_THROW(DrivingSystem::rotation(0.3, {0.0, 0.5, 0.4}), InvalidDriving);
}

TEST(MapAt, SingletonFamily) {
  const MapFamily fam({PiecewiseLinearMap::doubling()});
  const auto d = DrivingSystem::bernoulli({1.0}, 5);
  for (std::int64_t t = -5; t < 5; ++t) EXPECT_EQ(map_at(fam, d, t), PiecewiseLinearMap::doubling());
}

TEST(MapAt, RotationCellLookup) {
  const MapFamily fam({PiecewiseLinearMap::doubling(), PiecewiseLinearMap::tripling()});
  const auto d = golden_halves();
  const double a = DrivingSystem::default_alpha();
  std::int64_t t = 1;
  while (frac(static_cast<double>(t) * a) < 0.5) ++t;
  EXPECT_EQ(map_at(fam, d, t), PiecewiseLinearMap::tripling());
}

TEST(MapAt, SymbolOutOfRange) {
  const MapFamily fam({PiecewiseLinearMap::doubling(), PiecewiseLinearMap::tripling()});
  const auto d = DrivingSystem::rotation(DrivingSystem::default_alpha(), {0.0, 1.0 / 3.0, 2.0 / 3.0});
  bool thrown = false;
  for (std::int64_t t = 0; t < 10 && !thrown; ++t) {
    if (symbol_at(d, t) == 2) {
      EXPECT_THROW((void)map_at(fam, d, t), SymbolOutOfRange);
      thrown = true;
    }
  }
  EXPECT_TRUE(thrown);
}

TEST(MapAt, ConsistentWithSymbols) {
  const MapFamily fam({PiecewiseLinearMap::doubling(), PiecewiseLinearMap::tripling()});
  const auto d = DrivingSystem::bernoulli({0.5, 0.5}, 17);
  for (std::int64_t t = -100; t < 100; ++t) EXPECT_EQ(map_at(fam, d, t), fam[symbol_at(d, t)]);
}

TEST(ApplyMap, Doubling) {
  const auto m = PiecewiseLinearMap::doubling();
  EXPECT_DOUBLE_EQ(apply_map(m, 0.3), 0.6);
  EXPECT_DOUBLE_EQ(apply_map(m, 0.75), 0.5);
}

TEST(ApplyMap, TriplingMiddleBranch) {
  EXPECT_DOUBLE_EQ(apply_map(PiecewiseLinearMap::tripling(), 0.5), 0.5);
}

TEST(ApplyMap, HalfOpenEndpoints) {
  const auto m = PiecewiseLinearMap::doubling();
  EXPECT_EQ(m.branch_index(0.5), 1u);
  EXPECT_DOUBLE_EQ(apply_map(m, 0.5), 0.0);
}

TEST(Trajectory, DoublingFromOneTenth) {
  const MapFamily fam({PiecewiseLinearMap::doubling()});
  const auto d = DrivingSystem::bernoulli({1.0}, 1);
  const auto tr = trajectory(fam, d, 0, 3, 0.1);
  ASSERT_EQ(tr.size(), 4u);
  EXPECT_DOUBLE_EQ(tr[0], 0.1);
  EXPECT_DOUBLE_EQ(tr[1], 0.2);
  EXPECT_DOUBLE_EQ(tr[2], 0.4);
  EXPECT_DOUBLE_EQ(tr[3], 0.8);
}

TEST(Trajectory, ZeroSteps) {
  const MapFamily fam({PiecewiseLinearMap::doubling()});
  const auto d = DrivingSystem::bernoulli({1.0}, 1);
  const auto tr = trajectory(fam, d, 7, 0, 0.37);
  ASSERT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr[0], 0.37);
}

TEST(Trajectory, HandComposedRotationOrbit) {
  const MapFamily fam({PiecewiseLinearMap::doubling(), PiecewiseLinearMap::tripling()});
  const auto d = golden_halves();
  const double a = DrivingSystem::default_alpha();
  auto slope_at = [&](std::int64_t t) { return frac(static_cast<double>(t) * a) < 0.5 ? 2.0 : 3.0; };
  const std::int64_t t0 = 3;
  const auto tr = trajectory(fam, d, t0, 2, 0.1);
  const double x1 = frac(slope_at(t0) * 0.1);
  const double x2 = frac(slope_at(t0 + 1) * x1);
  EXPECT_NEAR(tr[1], x1, 1e-15);
  EXPECT_NEAR(tr[2], x2, 1e-15);
}

TEST(Trajectory, BitwiseDeterministic) {
  const MapFamily fam({PiecewiseLinearMap::doubling(), skewed()});
  const auto d = DrivingSystem::bernoulli({0.5, 0.5}, 4);
  EXPECT_EQ(trajectory(fam, d, -3, 40, 0.123), trajectory(fam, d, -3, 40, 0.123));
}

TEST(InverseBranches, Doubling) {
  const auto pre = inverse_branches(PiecewiseLinearMap::doubling(), 0.5);
  ASSERT_EQ(pre.size(), 2u);
  EXPECT_DOUBLE_EQ(pre[0].x, 0.25);
  EXPECT_DOUBLE_EQ(pre[0].weight, 0.5);
  EXPECT_DOUBLE_EQ(pre[1].x, 0.75);
  EXPECT_DOUBLE_EQ(pre[1].weight, 0.5);
}

TEST(InverseBranches, TriplingAtZero) {
  const auto pre = inverse_branches(PiecewiseLinearMap::tripling(), 0.0);
  ASSERT_EQ(pre.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(pre[i].x, static_cast<double>(i) / 3.0, 1e-15);
    EXPECT_NEAR(pre[i].weight, 1.0 / 3.0, 1e-15);
  }
}

TEST(InverseBranches, RestrictedImageBranch) {
  const auto m = skewed();
  // Interval-membership oracle: branch k contributes iff y lies in its image.
  for (double y : {0.1, 0.5, 0.74, 0.75, 0.8, 0.99}) {
    const auto pre = inverse_branches(m, y);
    std::size_t expected = 0;
    for (const auto& b : m.branches()) expected += b.image().contains(y) ? 1 : 0;
    ASSERT_EQ(pre.size(), expected) << "y=" << y;
    for (const auto& p : pre) {
      const auto& b = m.branches()[m.branch_index(p.x)];
      EXPECT_TRUE(b.domain.contains(p.x));
      EXPECT_NEAR(b.apply(p.x), y, 1e-15);
      EXPECT_DOUBLE_EQ(p.weight, 1.0 / std::abs(b.slope));
    }
  }
  EXPECT_EQ(inverse_branches(m, 0.8).size(), 1u);
}

TEST(InverseBranches, WeightSumsForFullBranchMaps) {
  for (int k = 2; k <= 5; ++k) {
    const auto m = PiecewiseLinearMap::k_fold(k);
    for (double y : {0.0, 0.2, 0.5, 0.9}) {
      double w = 0.0;
      for (const auto& p : inverse_branches(m, y)) w += p.weight;
      EXPECT_NEAR(w, 1.0, 1e-15);
    }
  }
}

TEST(PiecewiseLinearMap, SpecRoundTrip) {
  const auto m = PiecewiseLinearMap::from_spec("affine: 0,0.5,2,0; 0.5,1,2,-1");
  EXPECT_TRUE(m.full_branch());
  EXPECT_DOUBLE_EQ(m.apply(0.3), 0.6);
  EXPECT_EQ(PiecewiseLinearMap::from_spec(m.spec()), m);
  EXPECT_EQ(PiecewiseLinearMap::from_spec("k_fold:3"), PiecewiseLinearMap::tripling());
}

TEST(PiecewiseLinearMap, RejectsGapsAndEscapes) {
  EXPECT_THROW(PiecewiseLinearMap::from_spec("affine: 0,0.4,2,0; 0.5,1,2,-1"), InvalidMap);
  EXPECT_THROW(PiecewiseLinearMap::from_spec("affine: 0,1,2,0"), InvalidMap);
  EXPECT_THROW(PiecewiseLinearMap::from_spec("quadratic"), InvalidMap);
  EXPECT_THROW(PiecewiseLinearMap::k_fold(1), InvalidMap);
}

TEST(MapFamily, Constants) {
  const MapFamily dbl({PiecewiseLinearMap::doubling()});
  EXPECT_DOUBLE_EQ(dbl.delta(), 2.0);
  EXPECT_EQ(dbl.iterate_n(), 2);
  const MapFamily sk({PiecewiseLinearMap::tripling(), skewed()});
  EXPECT_DOUBLE_EQ(sk.delta(), 1.5);
  EXPECT_EQ(sk.b_max(), 3u);
  EXPECT_EQ(sk.iterate_n(), 2);
}

TEST(ValidateFamily, DoublingCoversInSixSteps) {
  const MapFamily fam({PiecewiseLinearMap::doubling()});
  const auto rep = validate_family(fam, DrivingSystem::bernoulli({1.0}, 1));
  EXPECT_DOUBLE_EQ(rep.mesh, 1.0 / 64.0);
  EXPECT_EQ(rep.covering_k, 6);
  EXPECT_TRUE(rep.admissible_evidence);
}

TEST(ValidateFamily, DoublingTripling) {
  const MapFamily fam({PiecewiseLinearMap::doubling(), PiecewiseLinearMap::tripling()});
  const auto rep = validate_family(fam, DrivingSystem::bernoulli({0.5, 0.5}, 3));
  EXPECT_TRUE(rep.admissible_evidence);
  EXPECT_EQ(rep.iterate_n, 2);
  EXPECT_DOUBLE_EQ(rep.delta, 2.0);
  EXPECT_EQ(rep.b_max, 3u);
  EXPECT_GT(rep.min_regularity_length, 0.0);
  EXPECT_FALSE(rep.notes.empty());
}

TEST(ValidateFamily, NotExpanding) {
  const PiecewiseLinearMap contracting({{{0.0, 0.5}, 0.5, 0.0}, {{0.5, 1.0}, 2.0, -1.0}});
  const MapFamily fam({contracting});
  EXPECT_THROW((void)validate_family(fam, DrivingSystem::bernoulli({1.0}, 1)), NotExpanding);
}

TEST(ImageOf, DoublingDoublesLength) {
  const std::vector<Interval> piece{{0.0, 1.0 / 64.0}};
  const auto img = image_of(PiecewiseLinearMap::doubling(), piece);
  double len = 0.0;
  for (const auto& i : img) len += i.length();
  EXPECT_DOUBLE_EQ(len, 2.0 / 64.0);
}

TEST(OrbitWindow, MatchesSymbols) {
  const auto d = DrivingSystem::bernoulli({0.5, 0.5}, 8);
  const auto w = make_window(d, 10, 5, 7);
  ASSERT_EQ(w.symbols.size(), 12u);
  for (std::int64_t t = w.first_time(); t < w.end_time(); ++t) EXPECT_EQ(w.symbol(t), symbol_at(d, t));
  EXPECT_THROW((void)w.symbol(w.end_time()), OutOfWindow);
}

TEST(FixedPointMap, IntegerSlopeIsExact) {
  const FixedPointMap dbl(PiecewiseLinearMap::doubling());
  ASSERT_TRUE(dbl.exact());
  const std::uint64_t m = 0xc000000000000001ULL;  // x = 3/4 + 2^-64
  EXPECT_EQ(dbl.step(m, 0), 0x8000000000000002ULL);
  EXPECT_EQ(dbl.step(m, ~0ULL), 0x8000000000000003ULL);  // sub-bits carry one digit
  const FixedPointMap tri(PiecewiseLinearMap::tripling());
  EXPECT_EQ(tri.step(0x5555555555555556ULL, 0), 2u);
}

TEST(FixedPointMap, GeneralBranchesTrackDoubleArithmetic) {
  const auto m = skewed();
  const FixedPointMap fp(m);
  EXPECT_FALSE(fp.exact());
  for (double x : {0.01, 0.3, 0.49, 0.5, 0.6, 0.99}) {
    const double y = fixed_to_double(fp.step(double_to_fixed(x), 0));
    EXPECT_NEAR(y, m.apply(x), 1e-15) << "x=" << x;
  }
}
