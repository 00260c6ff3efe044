#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "prefopt/likelihood.hpp"
#include "prefopt/random_stream.hpp"

namespace prefopt {

/// Mean-field Gaussian q(z) = prod_i N(z_i | mean_i, exp(logscale_i)^2) over
/// the N latent utilities and the D lengthscale parameters: 2N + 2D numbers.
struct VariationalState {
  Eigen::VectorXd f_means;
  Eigen::VectorXd f_logscales;
  Eigen::VectorXd gamma_means;
  Eigen::VectorXd gamma_logscales;
  std::uint64_t step_count = 0;

  /// Means 0, scales 1.
  static VariationalState initial(std::size_t num_points, std::size_t dims);

  std::size_t num_points() const { return static_cast<std::size_t>(f_means.size()); }
  std::size_t dims() const { return static_cast<std::size_t>(gamma_means.size()); }
  std::size_t num_parameters() const { return 2 * (num_points() + dims()); }

  /// Grows to num_points factors; new ones start at mean 0, scale 1.
  VariationalState extended(std::size_t num_points) const;

  /// Flattened [f, gamma] views used by the optimiser.
  Eigen::VectorXd means() const;
  Eigen::VectorXd logscales() const;
  void assign(const Eigen::VectorXd& means, const Eigen::VectorXd& logscales);
};

struct FitConfig {
  std::size_t steps = 1500;
  std::size_t samples_per_step = 8;
  double learning_rate = 0.02;
  std::uint64_t seed = 0;
  // Adaptive moment estimation constants.
  double beta1 = 0.9;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  // The step size holds for the first decay_start fraction of the steps, then
  // falls linearly to final_lr_scale times its initial value.
  double decay_start = 0.5;
  double final_lr_scale = 0.01;
  // Logscales are kept inside this interval.
  double min_logscale = -20.0;
  double max_logscale = 5.0;

  void validate() const;
};

/// Draws z ~ q one coordinate at a time.
LatentAssignment sample_posterior(const VariationalState& state, RandomStream& rng);

/// Analytic entropy of q.
double entropy(const VariationalState& state);

/// Monte-Carlo estimate of E_q[log p(z, X, c)] + H[q].
double elbo_estimate(const VariationalState& state, const DifferentiableLogDensity& density,
                     std::size_t n_samples, RandomStream& rng);

/// Stochastic gradient ascent on the ELBO with the reparameterization
/// estimator. If trace is given it receives one ELBO estimate per step.
/// Throws DivergenceError on a non-finite objective or gradient.
VariationalState fit(const DifferentiableLogDensity& density, const VariationalState& init,
                     const FitConfig& config, std::vector<double>* trace = nullptr);

/// Convenience: build the preference model for a dataset and fit it from a
/// fresh initialization.
VariationalState fit(const PreferenceDataset& dataset, const KernelHyperParams& kernel_bounds,
                     const TieModelParams& tie_params, const FitConfig& config,
                     std::vector<double>* trace = nullptr);

/// ELBO with the standard-normal noise held fixed (one row per sample, one
/// column per coordinate). Its exact gradient is what fit() follows.
double fixed_noise_objective(const VariationalState& state, const DifferentiableLogDensity& density,
                             const Eigen::MatrixXd& noise, Eigen::VectorXd* grad_means = nullptr,
                             Eigen::VectorXd* grad_logscales = nullptr);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  Eigen::VectorXd analytic;  // [d/dmeans, d/dlogscales]
  Eigen::VectorXd numeric;
};

/// Compares the reparameterized gradient against central differences of the
/// same fixed-noise objective (common random numbers).
GradientCheckReport gradient_check(const VariationalState& state,
                                   const DifferentiableLogDensity& density,
                                   std::size_t n_samples = 4, std::uint64_t seed = 0,
                                   double step = 1e-5);

/// Writes "step,elbo_estimate" rows.
void write_elbo_trace(const std::filesystem::path& path, std::span<const double> trace);

}  // namespace prefopt
