#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prefopt/core.hpp"
#include "prefopt/optimizer.hpp"

namespace prefopt::oracles {

using ScalarFunction = std::function<double(std::span<const double>)>;

struct ScalarTestFunction {
  std::string name;
  Domain domain;
  ScalarFunction evaluate;
  std::optional<Point> known_minimizer;
  std::optional<double> known_minimum;
};

/// Deterministic tolerance rule: equivalent when the two values differ by at
/// most epsilon, otherwise the lower value is preferred.
class ToleranceOracle final : public PreferenceProvider {
 public:
  ToleranceOracle(ScalarFunction f_test, double epsilon);

  PreferenceOutcome compare_points(std::span<const double> x1, std::span<const double> x2) const;
  std::optional<PreferenceOutcome> compare(const Point& incumbent,
                                           const Point& challenger) override {
    return compare_points(incumbent, challenger);
  }

  double epsilon() const { return epsilon_; }
  double value(std::span<const double> x) const { return f_test_(x); }

 private:
  ScalarFunction f_test_;
  double epsilon_;
};

/// Outcome for two known function values under the tolerance rule.
PreferenceOutcome compare_values(double f1, double f2, double epsilon);

// 4-D Shekel function with m = 5 terms on [0,10]^4:
//   f(x) = -sum_i 1 / (sum_j (x_j - A_ij)^2 + c_i)
// A = {4,4,4,4}, {1,1,1,1}, {8,8,8,8}, {6,6,6,6}, {3,7,3,7}
// c = {0.1, 0.2, 0.2, 0.4, 0.4}
double shekel05(std::span<const double> x);

// Two-bump landscape used for the scalarized multi-objective study, on
// [-2.5, 2.5]^2:
//   f(x) = -0.6 exp(-|x - x*|^2 / (2 w^2)) - 0.45 exp(-|x - x2|^2 / (2 w^2))
// with x* = (0, 0), x2 = (2.4/sqrt 2, 2.4/sqrt 2), w = 0.4. The global
// minimum sits at x*; the second-lowest minimum is 2.4 away.
struct TwoBump {
  static constexpr double kGlobalDepth = 0.6;
  static constexpr double kSecondDepth = 0.45;
  static constexpr double kWidth = 0.4;
  static constexpr double kSeparation = 2.4;
  static Point global_minimizer();
  static Point second_center();
  static Domain domain();
  static double value(std::span<const double> x);
};

/// Quality scalarization trading function value against distance from the
/// global minimizer, cube-rooted with the real signed cube root:
///   [4 (f + 0.6)^3 + 0.3 (2.4 - |x - x*|)^3]^(1/3)
double scalarized_quality(double f_value, double distance_from_minimizer);

/// The scalarized quality of TwoBump at x.
double multiobjective_ftest(std::span<const double> x);

/// Centre of the region the scalarized quality prefers: its minimizer on a
/// 200 x 200 grid over the study domain.
Point multiobjective_preferred_center();

/// Registered functions: "shekel05", "mo2d", "sphere", "linear1d".
ScalarTestFunction lookup(const std::string& name);
std::vector<std::string> registered_names();

}  // namespace prefopt::oracles
