#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace prefopt {

/// An unnormalized log density over R^n that can also report its gradient.
class DifferentiableLogDensity {
 public:
  virtual ~DifferentiableLogDensity() = default;
  virtual std::size_t dimension() const = 0;
  /// Returns log p(z). When grad is non-empty it receives d log p / dz.
  virtual double log_density(std::span<const double> z, std::span<double> grad) const = 0;

  /// Length of a leading block of z that enters log p through a Gaussian
  /// prior term whose average over a diagonal Gaussian is available in
  /// closed form. Zero when the density has no such block.
  virtual std::size_t gaussian_block() const { return 0; }

  /// log p(z) with the Gaussian prior term of the leading block replaced by
  /// its average over head ~ N(head_mean, diag(head_scale^2)); every other
  /// term is evaluated at z. grad_z receives the derivative with respect to
  /// z, grad_mean and grad_scale the derivatives of the averaged term with
  /// respect to head_mean and head_scale. All three are filled together or
  /// left untouched when empty.
  virtual double integrated_log_density(std::span<const double> z,
                                        std::span<const double> head_mean,
                                        std::span<const double> head_scale,
                                        std::span<double> grad_z, std::span<double> grad_mean,
                                        std::span<double> grad_scale) const {
    (void)z, (void)head_mean, (void)head_scale, (void)grad_z, (void)grad_mean, (void)grad_scale;
    throw std::logic_error("density has no integrable Gaussian block");
  }
};

}  // namespace prefopt
