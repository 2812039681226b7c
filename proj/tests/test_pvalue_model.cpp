#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <pluginfdr/pvalue_model.hpp>
#include <pluginfdr/random.hpp>
#include <pluginfdr/stat_tests.hpp>

using namespace pluginfdr;

namespace {

DiscreteNullDistribution two_point() { return {{0.2, 1.0}, {0.2, 1.0}}; }

}  // namespace

TEST(Transform, NuClosedForms) {
  EXPECT_DOUBLE_EQ(TransformFn::indicator(0.5).nu(), 0.5);
  EXPECT_DOUBLE_EQ(TransformFn::power(1.0, 0.0).nu(), 0.5);
  EXPECT_NEAR(TransformFn::power(2.0, 0.5).nu(), 7.0 / 24.0, 1e-15);
  EXPECT_NEAR(1.0 / TransformFn::power(2.0, 0.5).nu(), 24.0 / 7.0, 1e-14);
  EXPECT_DOUBLE_EQ(nu_uniform(TransformFn::identity()), 0.5);
}

TEST(Transform, TableNuIsExactPiecewiseSum) {
  const auto g = TransformFn::table({0.0, 0.5, 0.8}, {0.0, 0.4, 1.0});
  EXPECT_NEAR(g.nu(), 0.32, 1e-15);
  EXPECT_EQ(g(0.49), 0.0);
  EXPECT_EQ(g(0.5), 0.4);
  EXPECT_EQ(g(0.8), 1.0);
  EXPECT_EQ(g(1.0), 1.0);
}

TEST(Transform, IndicatorEqualsPowerZero) {
  Rng rng(7);
  for (double lambda : {0.0, 0.1, 0.5, 0.95}) {
    const auto a = TransformFn::indicator(lambda);
    const auto b = TransformFn::power(0.0, lambda);
    EXPECT_EQ(a.nu(), b.nu());
    for (int k = 0; k < 1000; ++k) {
      const double u = rng.uniform();
      EXPECT_EQ(a(u), b(u));
    }
    EXPECT_EQ(a(lambda), b(lambda));
  }
}

TEST(Transform, RejectsInvalid) {
  EXPECT_THROW(TransformFn::indicator(1.0), InputError);
  EXPECT_THROW(TransformFn::indicator(-0.1), InputError);
  EXPECT_THROW(TransformFn::power(-1.0, 0.0), InputError);
  EXPECT_THROW(TransformFn::table({0.0, 0.5}, {0.6, 0.4}), InputError);
  EXPECT_THROW(TransformFn::table({0.5, 0.5}, {0.1, 0.4}), InputError);
  EXPECT_THROW(TransformFn::table({0.0}, {0.0}), InputError);  // ν = 0
  EXPECT_THROW(TransformFn::mixture({0.5, 0.6}, {TransformFn::identity(), TransformFn::identity()}), InputError);
}

TEST(Transform, NonDecreasingAndInUnitInterval) {
  Rng rng(11);
  const std::vector<TransformFn> gs = {
      TransformFn::indicator(0.3), TransformFn::power(0.5, 0.2), TransformFn::power(3.0, 0.0),
      TransformFn::table({0.1, 0.4, 0.9}, {0.2, 0.2, 0.7}),
      TransformFn::mixture({0.3, 0.7}, {TransformFn::indicator(0.5), TransformFn::identity()})};
  for (const auto& g : gs) {
    double prev = g(0.0);
    for (int k = 1; k <= 2000; ++k) {
      const double u = k / 2000.0;
      const double v = g(u);
      EXPECT_GE(v, prev) << g.describe() << " at " << u;
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      prev = v;
    }
  }
}

TEST(Transform, MixtureNuIsWeighted) {
  const auto g = TransformFn::mixture({0.25, 0.75}, {TransformFn::indicator(0.5), TransformFn::power(2.0, 0.5)});
  EXPECT_NEAR(g.nu(), 0.25 * 0.5 + 0.75 * 7.0 / 24.0, 1e-15);
  EXPECT_FALSE(g.uniform_second_moment().has_value());
}

TEST(Support, ValidatesInvariants) {
  EXPECT_THROW(DiscreteNullDistribution({}, {}), InputError);
  EXPECT_THROW(DiscreteNullDistribution({0.2, 1.0}, {0.2, 0.9}), InputError);
  EXPECT_THROW(DiscreteNullDistribution({0.5, 0.2}, {0.2, 1.0}), InputError);
  EXPECT_THROW(DiscreteNullDistribution({0.0, 1.0}, {0.2, 1.0}), InputError);
  EXPECT_THROW(DiscreteNullDistribution({0.2, 0.5, 1.0}, {0.2, 0.2, 1.0}), InputError);  // zero mass
  const DiscreteNullDistribution f({0.2, 1.0}, {0.2, 1.0 - 1e-13});
  EXPECT_EQ(f.cdf().back(), 1.0);
}

TEST(Support, MassLookupToleranceAndZero) {
  const auto f = two_point();
  EXPECT_DOUBLE_EQ(f.mass_at(0.2), 0.2);
  EXPECT_DOUBLE_EQ(f.mass_at(0.2 + 5e-13), 0.2);
  EXPECT_DOUBLE_EQ(f.mass_at(0.0), 0.0);
  EXPECT_THROW(f.mass_at(0.3), InputError);
}

TEST(NuAdjusted, HandValues) {
  const auto f = two_point();
  EXPECT_NEAR(nu_adjusted(TransformFn::indicator(0.5), f), 0.8, 1e-15);
  EXPECT_NEAR(nu_adjusted(TransformFn::identity(), f), 0.84, 1e-15);
  EXPECT_EQ(nu_adjusted(TransformFn::indicator(0.5), DiscreteNullDistribution::point_mass_at_one()), 1.0);
}

TEST(NuAdjusted, NotBelowUniformForSuperUniformSupports) {
  const std::vector<TransformFn> gs = {TransformFn::indicator(0.5), TransformFn::identity(),
                                       TransformFn::power(2.0, 0.5), TransformFn::power(0.5, 0.1),
                                       TransformFn::table({0.0, 0.3, 0.6}, {0.1, 0.5, 1.0})};
  for (std::uint32_t n1 = 1; n1 <= 12; ++n1) {
    for (std::uint32_t n2 = 1; n2 <= 12; n2 += 3) {
      for (std::uint32_t k1 = 1; k1 < n1 + n2; k1 += 2) {
        for (auto alt : {Alternative::greater, Alternative::two_sided}) {
          const auto f = detail::build_fisher_support(n1, n2, k1, alt).support;
          ASSERT_TRUE(check_superuniform(f));
          for (const auto& g : gs) EXPECT_GE(nu_adjusted(g, f), g.nu() - 1e-15) << g.describe();
        }
      }
    }
  }
}

TEST(MidTransform, TwoPointSupport) {
  const auto mt = mid_transform(two_point());
  ASSERT_EQ(mt.mid_atoms.size(), 2u);
  EXPECT_NEAR(mt.mid_atoms[0], 0.1, 1e-15);
  EXPECT_NEAR(mt.mid_atoms[1], 0.6, 1e-15);
  EXPECT_NEAR(mt.distribution.mean(), 0.5, 1e-15);
}

TEST(MidTransform, PointMassAtOne) {
  const auto mt = mid_transform(DiscreteNullDistribution::point_mass_at_one());
  EXPECT_EQ(mt.mid_atoms, std::vector<double>{0.5});
}

TEST(MidTransform, StandardSupportPair) {
  // Standard atoms and their mid images. The implied masses
  // are 2(a - q).
  const std::vector<double> atoms = {0.3, 0.55, 0.7, 0.9, 1.0};
  const std::vector<double> mids = {0.15, 0.465, 0.625, 0.8, 0.95};
  const std::vector<double> masses = {0.3, 0.17, 0.15, 0.2, 0.1};
  for (std::size_t j = 0; j < atoms.size(); ++j) EXPECT_NEAR(mid_value(atoms[j], masses[j]), mids[j], 1e-15);
}

TEST(MidTransform, PreservesMassesAndShiftsLeft) {
  for (std::uint32_t n1 = 1; n1 <= 10; ++n1) {
    for (std::uint32_t k1 = 1; k1 < 2 * n1; ++k1) {
      const auto f = detail::build_fisher_support(n1, n1, k1, Alternative::greater).support;
      const auto mt = mid_transform(f);
      const auto masses = f.masses();
      for (std::size_t j = 0; j < f.size(); ++j) EXPECT_LT(mt.mid_atoms[j], f.atoms()[j]);
      // One-sided supports are exact, so the mid-p mean is exactly 1/2.
      EXPECT_NEAR(mt.distribution.mean(), 0.5, 1e-12);
      ASSERT_EQ(mt.distribution.size(), f.size());
      for (std::size_t j = 0; j < f.size(); ++j) EXPECT_NEAR(mt.distribution.masses()[j], masses[j], 1e-15);
    }
  }
}

TEST(Randomize, HandValuesAndEdges) {
  const auto f = two_point();
  EXPECT_NEAR(randomize(0.2, f, 0.5), 0.1, 1e-15);
  EXPECT_EQ(randomize(0.2, f, 0.0), 0.2);
  EXPECT_EQ(randomize(1.0, f, 0.0), 1.0);
  for (double u : {0.0, 0.3, 1.0}) EXPECT_EQ(randomize(0.0, f, u), 0.0);
  EXPECT_THROW(randomize(0.3, f, 0.5), InputError);
  EXPECT_THROW(randomize(0.2, f, 1.5), InputError);
}

TEST(Randomize, MonotoneInPAndU) {
  const auto f = detail::build_fisher_support(8, 8, 7, Alternative::greater).support;
  const auto atoms = f.atoms();
  for (double u = 0.0; u <= 1.0; u += 0.125) {
    for (std::size_t j = 1; j < atoms.size(); ++j) {
      EXPECT_LE(randomize(atoms[j - 1], f, u), randomize(atoms[j], f, u));
    }
  }
  for (double a : atoms) {
    for (double u = 0.125; u <= 1.0; u += 0.125) EXPECT_LE(randomize(a, f, u), randomize(a, f, u - 0.125));
  }
}

TEST(SuperUniform, Flags) {
  EXPECT_TRUE(check_superuniform(two_point()));
  EXPECT_FALSE(check_superuniform(DiscreteNullDistribution({0.2, 1.0}, {0.5, 1.0})));
  const auto fet = fisher_exact({3, 1, 1, 3}, Alternative::greater);
  EXPECT_TRUE(check_superuniform(fet.support));
}

TEST(PValueVector, Validation) {
  EXPECT_THROW(PValueVector({0.5, 1.2}), InputError);
  EXPECT_THROW(PValueVector({-0.1}), InputError);
  EXPECT_THROW(PValueVector({0.3}, {two_point()}), InputError);
  EXPECT_THROW(PValueVector({0.2, 1.0}, {two_point()}), InputError);
  EXPECT_THROW(PValueVector({0.2}, {}, {true, false}), InputError);
  const PValueVector ok({0.0, 0.2, 1.0}, {two_point(), two_point(), two_point()}, {true, true, false});
  EXPECT_EQ(ok.size(), 3u);
  EXPECT_EQ(ok.null_count(), 2u);
  EXPECT_EQ(ok.with_value(2, 0.0)[2], 0.0);
}
