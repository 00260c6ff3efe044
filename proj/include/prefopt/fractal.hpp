#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "prefopt/core.hpp"

namespace prefopt::fractal {

/// The 10 coloring parameters: a hue and a saturation for each of the three
/// roots of z^3 - 1, one shared transition speed, and an RGB base color.
/// Vector layout: [hue0, hue1, hue2, sat0, sat1, sat2, speed, red, green, blue].
struct ColoringParams {
  std::array<double, 3> root_hue{0.0, 1.0 / 3.0, 2.0 / 3.0};
  std::array<double, 3> root_sat{1.0, 1.0, 1.0};
  double transition_speed = 0.3;
  std::array<double, 3> base_color{0.0, 0.0, 0.0};

  static constexpr std::size_t kDims = 10;
  static constexpr double kMinSpeed = 0.05;
  static constexpr double kMaxSpeed = 2.0;

  std::vector<double> to_vector() const;
  /// Throws DomainViolation unless x lies in coloring_domain().
  static ColoringParams from_vector(std::span<const double> x);
};

/// The search box over ColoringParams vectors.
Domain coloring_domain();

struct RenderSpec {
  int width = 384;
  int height = 384;
  double re_min = -2.0;
  double re_max = 2.0;
  double im_min = -2.0;
  double im_max = 2.0;
  int max_iters = 40;
  double tolerance = 1e-6;
  // Worker threads for row-parallel rendering; output does not depend on it.
  unsigned threads = 1;

  void validate() const;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  std::array<std::uint8_t, 3> at(int x, int y) const;
};

struct Classification {
  std::optional<int> root;  // 0: 1, 1: exp(2 pi i/3), 2: exp(4 pi i/3)
  int iterations = 0;
};

/// Newton's method for z^3 - 1 from (re, im). Converged when |z^3 - 1| < tol;
/// a step from |z| < 1e-12 or running out of iterations leaves it unclassified.
Classification newton_classify(double re, double im, const RenderSpec& spec);

/// Hue/saturation at value 1 to RGB in [0,1].
std::array<double, 3> hsv_to_rgb(double hue, double saturation, double value = 1.0);

/// Pure function of its inputs; identical bytes for any thread count.
Image render(const ColoringParams& params, const RenderSpec& spec);

/// Lossless 8-bit RGB PNG.
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace prefopt::fractal
