#include "prefopt/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace prefopt::fractal {

namespace {

constexpr double kSqrt3Over2 = 0.86602540378443864676;
constexpr std::array<std::array<double, 2>, 3> kRoots{{{1.0, 0.0},
                                                       {-0.5, kSqrt3Over2},
                                                       {-0.5, -kSqrt3Over2}}};

}  // namespace

std::vector<double> ColoringParams::to_vector() const {
  return {root_hue[0],      root_hue[1],   root_hue[2],   root_sat[0],   root_sat[1],
          root_sat[2],      transition_speed, base_color[0], base_color[1], base_color[2]};
}

Domain coloring_domain() {
  std::vector<double> lower{0, 0, 0, 0, 0, 0, ColoringParams::kMinSpeed, 0, 0, 0};
  std::vector<double> upper{1, 1, 1, 1, 1, 1, ColoringParams::kMaxSpeed, 1, 1, 1};
  return Domain(std::move(lower), std::move(upper));
}

ColoringParams ColoringParams::from_vector(std::span<const double> x) {
  coloring_domain().require(x);
  ColoringParams p;
  for (int k = 0; k < 3; ++k) {
    p.root_hue[k] = x[k];
    p.root_sat[k] = x[3 + k];
    p.base_color[k] = x[7 + k];
  }
  p.transition_speed = x[6];
  return p;
}

void RenderSpec::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
  if (!(re_min < re_max) || !(im_min < im_max)) throw std::invalid_argument("empty viewport");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

std::array<std::uint8_t, 3> Image::at(int x, int y) const {
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

Classification newton_classify(double re, double im, const RenderSpec& spec) {
  double x = re;
  double y = im;
  for (int it = 0;; ++it) {
    // p = z^3 - 1
    const double x2 = x * x - y * y;
    const double y2 = 2.0 * x * y;
    const double pr = x2 * x - y2 * y - 1.0;
    const double pi = x2 * y + y2 * x;
    if (std::sqrt(pr * pr + pi * pi) < spec.tolerance) {
      int nearest = 0;
      double best = INFINITY;
      for (int k = 0; k < 3; ++k) {
        const double dr = x - kRoots[k][0];
        const double di = y - kRoots[k][1];
        const double dist = dr * dr + di * di;
        if (dist < best) {
          best = dist;
          nearest = k;
        }
      }
      return {nearest, it};
    }
    if (it >= spec.max_iters) return {std::nullopt, it};
    if (std::sqrt(x * x + y * y) < 1e-12) return {std::nullopt, it};
    // z <- z - p / (3 z^2)
    const double dr = 3.0 * x2;
    const double di = 3.0 * y2;
    const double denom = dr * dr + di * di;
    const double qr = (pr * dr + pi * di) / denom;
    const double qi = (pi * dr - pr * di) / denom;
    x -= qr;
    y -= qi;
  }
}

std::array<double, 3> hsv_to_rgb(double hue, double saturation, double value) {
  double h = hue - std::floor(hue);
  h *= 6.0;
  const int sector = std::min(static_cast<int>(h), 5);
  const double frac = h - sector;
  const double p = value * (1.0 - saturation);
  const double q = value * (1.0 - saturation * frac);
  const double t = value * (1.0 - saturation * (1.0 - frac));
  switch (sector) {
    case 0:
      return {value, t, p};
    case 1:
      return {q, value, p};
    case 2:
      return {p, value, t};
    case 3:
      return {p, q, value};
    case 4:
      return {t, p, value};
    default:
      return {value, p, q};
  }
}

namespace {

std::uint8_t to_byte(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

void render_rows(const ColoringParams& params, const RenderSpec& spec,
                 const std::array<std::array<double, 3>, 3>& root_rgb, int row_begin, int row_end,
                 std::vector<std::uint8_t>& pixels) {
  const double dx = (spec.re_max - spec.re_min) / spec.width;
  const double dy = (spec.im_max - spec.im_min) / spec.height;
  for (int row = row_begin; row < row_end; ++row) {
    const double im = spec.im_max - (row + 0.5) * dy;
    for (int col = 0; col < spec.width; ++col) {
      const double re = spec.re_min + (col + 0.5) * dx;
      const Classification c = newton_classify(re, im, spec);
      std::array<double, 3> rgb = params.base_color;
      if (c.root) {
        const double w = std::exp(-params.transition_speed * c.iterations);
        const auto& root = root_rgb[*c.root];
        for (int k = 0; k < 3; ++k) rgb[k] = w * root[k] + (1.0 - w) * params.base_color[k];
      }
      const std::size_t i = 3 * (static_cast<std::size_t>(row) * spec.width + col);
      for (int k = 0; k < 3; ++k) pixels[i + k] = to_byte(rgb[k]);
    }
  }
}

}  // namespace

Image render(const ColoringParams& params, const RenderSpec& spec) {
  spec.validate();
  coloring_domain().require(params.to_vector());
  std::array<std::array<double, 3>, 3> root_rgb;
  for (int k = 0; k < 3; ++k) root_rgb[k] = hsv_to_rgb(params.root_hue[k], params.root_sat[k]);

  Image image{spec.width, spec.height,
              std::vector<std::uint8_t>(3 * static_cast<std::size_t>(spec.width) * spec.height)};
  const unsigned workers = std::clamp<unsigned>(spec.threads, 1, static_cast<unsigned>(spec.height));
  if (workers == 1) {
    render_rows(params, spec, root_rgb, 0, spec.height, image.pixels);
    return image;
  }
  std::vector<std::thread> pool;
  const int chunk = (spec.height + static_cast<int>(workers) - 1) / static_cast<int>(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(w) * chunk;
    const int end = std::min(spec.height, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      render_rows(params, spec, root_rgb, begin, end, image.pixels);
    });
  }
  for (auto& t : pool) t.join();
  return image;
}

}  // namespace prefopt::fractal
