#include <gtest/gtest.h>

#include <cmath>

#include "prefopt/oracles.hpp"

using namespace prefopt;
using namespace prefopt::oracles;

TEST(ToleranceOracle, Rule) {
  EXPECT_EQ(compare_values(1.0, 1.05, 0.1), PreferenceOutcome::Equivalent);
  EXPECT_EQ(compare_values(1.0, 1.125, 0.125), PreferenceOutcome::Equivalent);  // inclusive boundary
  EXPECT_EQ(compare_values(1.0, 1.25, 0.125), PreferenceOutcome::FirstGreater);
  EXPECT_EQ(compare_values(1.0, 2.0, 0.1), PreferenceOutcome::FirstGreater);
  EXPECT_EQ(compare_values(2.0, 1.0, 0.1), PreferenceOutcome::FirstLess);
  EXPECT_EQ(compare_values(1.0, 1.0, 0.0), PreferenceOutcome::Equivalent);
  ToleranceOracle o([](std::span<const double> x) { return x[0]; }, 0.0);
  EXPECT_EQ(o.compare_points(Point{0.2}, Point{0.3}), PreferenceOutcome::FirstGreater);
  EXPECT_EQ(*o.compare(Point{0.3}, Point{0.2}), PreferenceOutcome::FirstLess);
}

TEST(Shekel, KnownMinimum) {
  EXPECT_NEAR(shekel05(Point{4, 4, 4, 4}), -10.1532, 1e-4);
  // Independent evaluation at an arbitrary point.
  const double a[5][4] = {{4, 4, 4, 4}, {1, 1, 1, 1}, {8, 8, 8, 8}, {6, 6, 6, 6}, {3, 7, 3, 7}};
  const double c[5] = {0.1, 0.2, 0.2, 0.4, 0.4};
  const Point x{1.5, 7.2, 3.3, 9.9};
  double expected = 0;
  for (int i = 0; i < 5; ++i) {
    double s = c[i];
    for (int j = 0; j < 4; ++j) s += (x[j] - a[i][j]) * (x[j] - a[i][j]);
    expected -= 1.0 / s;
  }
  EXPECT_NEAR(shekel05(x), expected, 1e-14);
  const auto f = lookup("shekel05");
  EXPECT_EQ(f.domain.dims(), 4u);
  EXPECT_EQ(f.domain.lower()[0], 0.0);
  EXPECT_EQ(f.domain.upper()[3], 10.0);
  EXPECT_NEAR(*f.known_minimum, -10.1532, 1e-4);
}

TEST(TwoBump, Landscape) {
  const Point xs = TwoBump::global_minimizer();
  const Point x2 = TwoBump::second_center();
  EXPECT_NEAR(std::hypot(x2[0] - xs[0], x2[1] - xs[1]), 2.4, 1e-12);
  EXPECT_NEAR(TwoBump::value(xs), -0.6, 1e-6);
  EXPECT_NEAR(TwoBump::value(x2), -0.45, 1e-6);
  EXPECT_LT(TwoBump::value(xs), TwoBump::value(x2));
}

TEST(Scalarization, SignedCubeRoot) {
  // At f = -0.6 and distance 2.4 both terms vanish.
  EXPECT_NEAR(scalarized_quality(-0.6, 2.4), 0.0, 1e-12);
  EXPECT_NEAR(scalarized_quality(-0.6, 2.4 + std::cbrt(1.0 / 0.3)), -1.0, 1e-12);
  EXPECT_NEAR(scalarized_quality(0.4, 2.4), std::cbrt(4.0), 1e-12);
  EXPECT_TRUE(std::isfinite(multiobjective_ftest(Point{2.5, -2.5})));
}

TEST(Scalarization, ValueAtTheGlobalMinimizer) {
  // The value term vanishes; the distance term is 0.3 * 2.4^3 = 4.1472.
  const double f_star = TwoBump::value(TwoBump::global_minimizer());
  EXPECT_NEAR(multiobjective_ftest(TwoBump::global_minimizer()),
              std::cbrt(4.0 * std::pow(f_star + 0.6, 3) + 4.1472), 1e-12);
  EXPECT_NEAR(multiobjective_ftest(TwoBump::global_minimizer()), 1.6067, 1e-3);
}

TEST(Scalarization, PreferredRegionIsAwayFromTheGlobalMinimizer) {
  const Point c = multiobjective_preferred_center();
  const Point xs = TwoBump::global_minimizer();
  const double dist = std::hypot(c[0] - xs[0], c[1] - xs[1]);
  EXPECT_GT(dist, 1.0);
  const Point x2 = TwoBump::second_center();
  EXPECT_LT(std::hypot(c[0] - x2[0], c[1] - x2[1]), TwoBump::kWidth);
  // The grid minimizer is no worse than a dense sample of the domain.
  RandomStream rng(1);
  const Domain d = TwoBump::domain();
  const double best = multiobjective_ftest(c);
  for (int i = 0; i < 20000; ++i) {
    EXPECT_GE(multiobjective_ftest(d.uniform_point(rng)), best - 0.05);
  }
}

TEST(Registry, AllNamesResolve) {
  for (const auto& name : registered_names()) {
    const auto f = lookup(name);
    EXPECT_EQ(f.name, name);
    RandomStream rng(2);
    for (int i = 0; i < 100; ++i) EXPECT_TRUE(std::isfinite(f.evaluate(f.domain.uniform_point(rng))));
  }
  EXPECT_THROW(lookup("nope"), std::invalid_argument);
}
