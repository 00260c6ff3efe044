#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "prefopt/core.hpp"
#include "prefopt/kernel.hpp"
#include "prefopt/log_density.hpp"

namespace prefopt {

/// Bradley-Terry-with-ties parameters. beta = 1 switches ties off; sigma sets
/// the sqrt(2 sigma^2) discrimination scale and is the kernel's signal scale.
struct TieModelParams {
  double beta = 1.1;
  double sigma = 0.1;

  void validate() const;
};

struct CategoryProbs {
  double less = 0.0;     // first less preferred
  double tie = 0.0;      // roughly equal
  double greater = 0.0;  // first preferred

  double of(PreferenceOutcome outcome) const;
};

/// Probabilities of the three outcomes for latent utilities f1 (first) and
/// f2 (second).
CategoryProbs categorical_probs(double f1, double f2, const TieModelParams& params);

/// Smallest probability that enters a logarithm.
inline constexpr double kProbabilityFloor = 1e-300;

/// log P(outcome | f1, f2), computed in the log domain; optionally the
/// derivative with respect to f1 (the derivative in f2 is its negation).
double log_outcome_probability(double f1, double f2, PreferenceOutcome outcome,
                               const TieModelParams& params, double* d_f1 = nullptr);

/// Latent utilities at the unique points plus the lengthscale parameters.
struct LatentAssignment {
  Eigen::VectorXd f;
  std::vector<double> gamma;
};

double log_likelihood(const PreferenceDataset& dataset, const LatentAssignment& assignment,
                      const TieModelParams& params);

/// log N(gamma; 0, I) + log N(f; 0, K(theta(gamma))) + log likelihood.
/// Only the bounds and sigma of kernel_bounds are used; gamma comes from the
/// assignment.
double log_joint(const PreferenceDataset& dataset, const LatentAssignment& assignment,
                 const KernelHyperParams& kernel_bounds, const TieModelParams& tie_params);

/// The full preference model as a differentiable density over z = [f, gamma]
/// (f first, N entries, then D entries of gamma).
class PreferenceModel final : public DifferentiableLogDensity {
 public:
  PreferenceModel(const PreferenceDataset& dataset, KernelHyperParams kernel_bounds,
                  TieModelParams tie_params);

  std::size_t dimension() const override { return num_points_ + dims_; }
  double log_density(std::span<const double> z, std::span<double> grad) const override;
  /// The latent utilities f form the Gaussian block.
  std::size_t gaussian_block() const override { return num_points_; }
  double integrated_log_density(std::span<const double> z, std::span<const double> f_mean,
                                std::span<const double> f_scale, std::span<double> grad_z,
                                std::span<double> grad_mean,
                                std::span<double> grad_scale) const override;

  std::size_t num_points() const { return num_points_; }
  std::size_t dims() const { return dims_; }
  const KernelHyperParams& kernel_bounds() const { return kernel_; }
  const TieModelParams& tie_params() const { return tie_; }

 private:
  double evaluate(std::span<const double> z, std::span<const double> f_mean,
                  std::span<const double> f_scale, std::span<double> grad_z,
                  std::span<double> grad_mean, std::span<double> grad_scale) const;

  struct Comparison {
    Eigen::Index first;
    Eigen::Index second;
    PreferenceOutcome outcome;
  };

  std::size_t num_points_;
  std::size_t dims_;
  KernelHyperParams kernel_;
  TieModelParams tie_;
  PairwiseSquaredDiffs diffs_;
  std::vector<Comparison> comparisons_;
};

}  // namespace prefopt
