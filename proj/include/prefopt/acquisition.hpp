#pragma once

#include <cstdint>
#include <vector>

#include "prefopt/core.hpp"
#include "prefopt/kernel.hpp"
#include "prefopt/vinfer.hpp"

namespace prefopt {

struct AcquisitionConfig {
  std::size_t posterior_samples = 32;
  std::size_t candidate_count = 2048;
  std::size_t refine_top_k = 5;    // 0 disables local refinement
  std::size_t refine_steps = 40;
  double refine_initial_step = 0.1;  // in unit-box coordinates
  bool design_skeleton = true;       // add a 2D+1 Latin hypercube to the candidates
  // Candidates closer than this (unit-box Euclidean) to the incumbent are skipped.
  double incumbent_exclusion = 1e-9;

  void validate() const;
};

/// Closed-form expected improvement of a Gaussian N(mu, s^2) over f_best;
/// exactly 0 when s == 0.
double expected_improvement(double mu, double s, double f_best);

double standard_normal_pdf(double x);
double standard_normal_cdf(double x);

/// Monte-Carlo integrated expected improvement. Posterior draws of (f, gamma)
/// are taken once at construction; each draw contributes EI against its own
/// latent value at the incumbent.
class IntegratedEI {
 public:
  IntegratedEI(const PreferenceDataset& dataset, const VariationalState& state,
               const KernelHyperParams& kernel_bounds, std::size_t incumbent_index,
               std::size_t samples, RandomStream& rng);

  double operator()(std::span<const double> x) const;
  /// Average predictive variance over the posterior draws.
  double mean_variance(std::span<const double> x) const;
  std::size_t samples() const { return predictors_.size(); }

 private:
  std::vector<GpPredictor> predictors_;
  std::vector<double> f_best_;
};

double integrated_ei(std::span<const double> x, const PreferenceDataset& dataset,
                     const VariationalState& state, const KernelHyperParams& kernel_bounds,
                     std::size_t incumbent_index, const AcquisitionConfig& config,
                     RandomStream& rng);

struct AcquisitionResult {
  Point x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool fell_back_to_variance = false;
};

/// Scores random candidates (plus a Latin hypercube skeleton), refines the
/// best few by compass pattern search and returns the highest-scoring point
/// that is not the incumbent. If nothing has positive score the candidate with
/// the largest predictive variance is returned instead.
AcquisitionResult maximize_acquisition(const Domain& domain, const PreferenceDataset& dataset,
                                       const VariationalState& state,
                                       const KernelHyperParams& kernel_bounds,
                                       std::size_t incumbent_index,
                                       const AcquisitionConfig& config, RandomStream& rng);

}  // namespace prefopt
