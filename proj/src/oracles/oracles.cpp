#include "prefopt/oracles.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace prefopt::oracles {

ToleranceOracle::ToleranceOracle(ScalarFunction f_test, double epsilon)
    : f_test_(std::move(f_test)), epsilon_(epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("tolerance must be non-negative");
}

PreferenceOutcome compare_values(double f1, double f2, double epsilon) {
  if (std::abs(f1 - f2) <= epsilon) return PreferenceOutcome::Equivalent;
  if (f1 < f2) return PreferenceOutcome::FirstGreater;
  return PreferenceOutcome::FirstLess;
}

PreferenceOutcome ToleranceOracle::compare_points(std::span<const double> x1,
                                                  std::span<const double> x2) const {
  return compare_values(f_test_(x1), f_test_(x2), epsilon_);
}

namespace {

constexpr std::array<std::array<double, 4>, 5> kShekelA{{
    {4.0, 4.0, 4.0, 4.0},
    {1.0, 1.0, 1.0, 1.0},
    {8.0, 8.0, 8.0, 8.0},
    {6.0, 6.0, 6.0, 6.0},
    {3.0, 7.0, 3.0, 7.0},
}};
constexpr std::array<double, 5> kShekelC{0.1, 0.2, 0.2, 0.4, 0.4};

}  // namespace

double shekel05(std::span<const double> x) {
  if (x.size() != 4) throw std::invalid_argument("shekel05 is four-dimensional");
  double total = 0.0;
  for (std::size_t i = 0; i < kShekelA.size(); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double diff = x[j] - kShekelA[i][j];
      sq += diff * diff;
    }
    total -= 1.0 / (sq + kShekelC[i]);
  }
  return total;
}

Point TwoBump::global_minimizer() { return {0.0, 0.0}; }

Point TwoBump::second_center() {
  const double offset = kSeparation / std::numbers::sqrt2;
  return {offset, offset};
}

Domain TwoBump::domain() { return Domain::cube(2, -2.5, 2.5); }

double TwoBump::value(std::span<const double> x) {
  if (x.size() != 2) throw std::invalid_argument("two-bump function is two-dimensional");
  const Point a = global_minimizer();
  const Point b = second_center();
  const double da = (x[0] - a[0]) * (x[0] - a[0]) + (x[1] - a[1]) * (x[1] - a[1]);
  const double db = (x[0] - b[0]) * (x[0] - b[0]) + (x[1] - b[1]) * (x[1] - b[1]);
  const double two_w2 = 2.0 * kWidth * kWidth;
  return -kGlobalDepth * std::exp(-da / two_w2) - kSecondDepth * std::exp(-db / two_w2);
}

double scalarized_quality(double f_value, double distance_from_minimizer) {
  const double value_term = f_value + 0.6;
  const double distance_term = 2.4 - distance_from_minimizer;
  return std::cbrt(4.0 * value_term * value_term * value_term +
                   0.3 * distance_term * distance_term * distance_term);
}

double multiobjective_ftest(std::span<const double> x) {
  const Point star = TwoBump::global_minimizer();
  const double dist = std::hypot(x[0] - star[0], x[1] - star[1]);
  return scalarized_quality(TwoBump::value(x), dist);
}

Point multiobjective_preferred_center() {
  const Domain domain = TwoBump::domain();
  constexpr int kGrid = 200;
  Point best;
  double best_value = INFINITY;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const Point x{domain.lower()[0] + domain.range(0) * (i + 0.5) / kGrid,
                    domain.lower()[1] + domain.range(1) * (j + 0.5) / kGrid};
      const double v = multiobjective_ftest(x);
      if (v < best_value) {
        best_value = v;
        best = x;
      }
    }
  }
  return best;
}

ScalarTestFunction lookup(const std::string& name) {
  if (name == "shekel05") {
    return {name, Domain::cube(4, 0.0, 10.0), shekel05, Point{4.0, 4.0, 4.0, 4.0},
            shekel05(Point{4.0, 4.0, 4.0, 4.0})};
  }
  if (name == "mo2d") {
    const Point center = multiobjective_preferred_center();
    return {name, TwoBump::domain(), multiobjective_ftest, center, multiobjective_ftest(center)};
  }
  if (name == "sphere") {
    auto f = [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s;
    };
    return {name, Domain::cube(2, -5.0, 5.0), f, Point{0.0, 0.0}, 0.0};
  }
  if (name == "linear1d") {
    auto f = [](std::span<const double> x) { return x[0]; };
    return {name, Domain::cube(1, 0.0, 1.0), f, Point{0.0}, 0.0};
  }
  throw std::invalid_argument("unknown test function '" + name + "'");
}

std::vector<std::string> registered_names() { return {"shekel05", "mo2d", "sphere", "linear1d"}; }

}  // namespace prefopt::oracles
