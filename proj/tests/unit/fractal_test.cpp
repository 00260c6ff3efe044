#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "prefopt/fractal.hpp"

using namespace prefopt;
using namespace prefopt::fractal;

namespace {

// Decodes an in-memory PNG with libpng's simplified API.
Image decode(const std::vector<std::uint8_t>& bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw std::runtime_error("png decode failed");
  }
  img.format = PNG_FORMAT_RGB;
  Image out{static_cast<int>(img.width), static_cast<int>(img.height),
            std::vector<std::uint8_t>(PNG_IMAGE_SIZE(img))};
  png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr);
  return out;
}

RenderSpec small_spec() {
  RenderSpec s;
  s.width = 96;
  s.height = 80;
  return s;
}

ColoringParams sample_params() {
  return ColoringParams::from_vector(
      std::vector<double>{0.05, 0.4, 0.75, 0.9, 0.6, 1.0, 0.35, 0.1, 0.2, 0.3});
}

}  // namespace

TEST(NewtonClassify, RootsConvergeImmediately) {
  const RenderSpec spec;
  const auto a = newton_classify(1.0, 0.0, spec);
  ASSERT_TRUE(a.root.has_value());
  EXPECT_EQ(*a.root, 0);
  EXPECT_EQ(a.iterations, 0);
  const auto b = newton_classify(std::cos(2 * std::numbers::pi / 3), std::sin(2 * std::numbers::pi / 3), spec);
  EXPECT_EQ(*b.root, 1);
  EXPECT_EQ(b.iterations, 0);
  const auto c = newton_classify(std::cos(4 * std::numbers::pi / 3), std::sin(4 * std::numbers::pi / 3), spec);
  EXPECT_EQ(*c.root, 2);
  EXPECT_EQ(c.iterations, 0);
}

TEST(NewtonClassify, OriginIsSingular) {
  EXPECT_FALSE(newton_classify(0.0, 0.0, RenderSpec{}).root.has_value());
}

TEST(NewtonClassify, PositiveRealAxisGoesToOne) {
  for (double x = 0.01; x < 50.0; x *= 1.37) {
    const auto c = newton_classify(x, 0.0, RenderSpec{});
    ASSERT_TRUE(c.root.has_value()) << x;
    EXPECT_EQ(*c.root, 0) << x;
  }
}

TEST(NewtonClassify, ThreeFoldSymmetry) {
  RandomStream rng(1);
  const double c = std::cos(2 * std::numbers::pi / 3), s = std::sin(2 * std::numbers::pi / 3);
  RenderSpec spec;
  spec.max_iters = 100;
  int compared = 0;
  for (int i = 0; i < 2000; ++i) {
    const double re = rng.uniform(-2, 2), im = rng.uniform(-2, 2);
    const auto a = newton_classify(re, im, spec);
    const auto b = newton_classify(c * re - s * im, s * re + c * im, spec);
    if (!a.root || !b.root) continue;
    // Points near basin boundaries can be knocked across by rounding.
    if (std::abs(a.iterations - b.iterations) > 1) continue;
    EXPECT_EQ(*b.root, (*a.root + 1) % 3) << re << " " << im;
    ++compared;
  }
  EXPECT_GT(compared, 1800);
}

TEST(HsvToRgb, PrimaryHues) {
  const auto red = hsv_to_rgb(0.0, 1.0);
  EXPECT_EQ(red, (std::array<double, 3>{1, 0, 0}));
  const auto green = hsv_to_rgb(1.0 / 3.0, 1.0);
  EXPECT_NEAR(green[0], 0.0, 1e-12);
  EXPECT_NEAR(green[1], 1.0, 1e-12);
  const auto white = hsv_to_rgb(0.7, 0.0);
  EXPECT_EQ(white, (std::array<double, 3>{1, 1, 1}));
}

TEST(ColoringParams, VectorRoundTripAndBox) {
  const auto p = sample_params();
  const auto v = p.to_vector();
  ASSERT_EQ(v.size(), ColoringParams::kDims);
  EXPECT_EQ(ColoringParams::from_vector(v).to_vector(), v);
  auto bad = v;
  bad[6] = 0.01;  // speed below 0.05
  EXPECT_THROW(ColoringParams::from_vector(bad), DomainViolation);
  EXPECT_EQ(coloring_domain().dims(), 10u);
}

TEST(Render, RootPixelAndBaseColor) {
  // A 3x1 viewport whose first pixel center is exactly z = 1.
  RenderSpec spec;
  spec.width = 3;
  spec.height = 1;
  spec.re_min = 0.5;
  spec.re_max = 2.0;
  spec.im_min = -0.25;
  spec.im_max = 0.25;
  auto params = sample_params();
  params.transition_speed = ColoringParams::kMaxSpeed;
  params.root_hue[0] = 0.0;
  params.root_sat[0] = 1.0;
  const Image img = render(params, spec);
  ASSERT_EQ(img.pixels.size(), 9u);
  // Pixel 1 is centered at 0.5 + 1.5 * 0.5 = 1.25; pixel 0 at 0.75.
  const auto classify = newton_classify(1.25, 0.0, spec);
  const double w = std::exp(-params.transition_speed * classify.iterations);
  EXPECT_EQ(img.at(1, 0)[0], static_cast<std::uint8_t>(std::lround(255 * (w + (1 - w) * 0.1))));

  RenderSpec at_root = spec;
  at_root.re_min = 0.5;
  at_root.re_max = 1.5;
  at_root.width = 1;
  const Image one = render(params, at_root);
  EXPECT_EQ(one.at(0, 0), (std::array<std::uint8_t, 3>{255, 0, 0}));

  RenderSpec no_iters = spec;
  no_iters.max_iters = 0;
  no_iters.re_min = 3.0;
  no_iters.re_max = 4.0;
  const Image dull = render(params, no_iters);
  EXPECT_EQ(dull.at(2, 0), (std::array<std::uint8_t, 3>{26, 51, 77}));
}

TEST(Render, DeterministicAcrossRunsAndThreads) {
  RenderSpec spec = small_spec();
  const Image a = render(sample_params(), spec);
  const Image b = render(sample_params(), spec);
  EXPECT_EQ(a.pixels, b.pixels);
  spec.threads = 4;
  EXPECT_EQ(render(sample_params(), spec).pixels, a.pixels);
  spec.threads = 7;
  EXPECT_EQ(render(sample_params(), spec).pixels, a.pixels);
  EXPECT_EQ(encode_png(a), encode_png(b));
}

TEST(Png, LosslessRoundTrip) {
  const Image img = render(sample_params(), small_spec());
  const auto bytes = encode_png(img);
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(bytes[1], 'P');
  const Image back = decode(bytes);
  EXPECT_EQ(back.width, img.width);
  EXPECT_EQ(back.height, img.height);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(RenderSpec, Validation) {
  RenderSpec s;
  s.width = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.tolerance = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.re_max = s.re_min;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}
