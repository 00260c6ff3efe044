#include "prefopt/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace prefopt {

void AcquisitionConfig::validate() const {
  if (posterior_samples == 0) throw std::invalid_argument("posterior_samples must be positive");
  if (candidate_count == 0) throw std::invalid_argument("candidate_count must be positive");
  if (refine_top_k > candidate_count) {
    throw std::invalid_argument("refine_top_k cannot exceed candidate_count");
  }
}

double standard_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double expected_improvement(double mu, double s, double f_best) {
  if (!(s > 0.0)) return 0.0;
  const double nu = (mu - f_best) / s;
  const double value = s * (nu * standard_normal_cdf(nu) + standard_normal_pdf(nu));
  return value > 0.0 ? value : 0.0;
}

IntegratedEI::IntegratedEI(const PreferenceDataset& dataset, const VariationalState& state,
                           const KernelHyperParams& kernel_bounds, std::size_t incumbent_index,
                           std::size_t samples, RandomStream& rng) {
  if (state.num_points() != dataset.num_points()) {
    throw std::invalid_argument("variational state was fit on a different dataset");
  }
  if (incumbent_index >= dataset.num_points()) {
    throw std::invalid_argument("incumbent index out of range");
  }
  predictors_.reserve(samples);
  f_best_.reserve(samples);
  KernelHyperParams params = kernel_bounds;
  for (std::size_t s = 0; s < samples; ++s) {
    LatentAssignment z = sample_posterior(state, rng);
    params.gamma = z.gamma;
    const double fb = z.f(static_cast<Eigen::Index>(incumbent_index));
    predictors_.emplace_back(dataset.unique_points(), std::move(z.f), lengthscales(params),
                             params.sigma, default_jitter(params.sigma));
    f_best_.push_back(fb);
  }
}

double IntegratedEI::operator()(std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t s = 0; s < predictors_.size(); ++s) {
    const Prediction p = predictors_[s].predict(x);
    total += expected_improvement(p.mean, p.sd, f_best_[s]);
  }
  return total / static_cast<double>(predictors_.size());
}

double IntegratedEI::mean_variance(std::span<const double> x) const {
  double total = 0.0;
  for (const auto& predictor : predictors_) {
    const Prediction p = predictor.predict(x);
    total += p.sd * p.sd;
  }
  return total / static_cast<double>(predictors_.size());
}

double integrated_ei(std::span<const double> x, const PreferenceDataset& dataset,
                     const VariationalState& state, const KernelHyperParams& kernel_bounds,
                     std::size_t incumbent_index, const AcquisitionConfig& config,
                     RandomStream& rng) {
  IntegratedEI acquisition(dataset, state, kernel_bounds, incumbent_index,
                           config.posterior_samples, rng);
  return acquisition(x);
}

namespace {

struct Scored {
  Point unit;  // coordinates in [0,1]^D
  double value;
};

double unit_distance(const Point& a, const Point& b) {
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) sum += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(sum);
}

}  // namespace

AcquisitionResult maximize_acquisition(const Domain& domain, const PreferenceDataset& dataset,
                                       const VariationalState& state,
                                       const KernelHyperParams& kernel_bounds,
                                       std::size_t incumbent_index,
                                       const AcquisitionConfig& config, RandomStream& rng) {
  config.validate();
  const std::size_t dims = domain.dims();
  RandomStream posterior_rng = rng.fork("posterior");
  RandomStream candidate_rng = rng.fork("candidates");
  const IntegratedEI acquisition(dataset, state, kernel_bounds, incumbent_index,
                                 config.posterior_samples, posterior_rng);
  const Point incumbent_unit = domain.to_unit(dataset.unique_points()[incumbent_index]);

  AcquisitionResult result;
  auto score = [&](const Point& unit) {
    ++result.evaluations;
    return acquisition(domain.from_unit(unit));
  };

  std::vector<Scored> candidates;
  candidates.reserve(config.candidate_count + 2 * dims + 1);
  for (std::size_t i = 0; i < config.candidate_count; ++i) {
    Point u(dims);
    for (auto& v : u) v = candidate_rng.uniform();
    candidates.push_back({std::move(u), 0.0});
  }
  if (config.design_skeleton) {
    const Domain unit_box = Domain::cube(dims, 0.0, 1.0);
    for (auto& u : latin_hypercube(unit_box, initial_design_size(dims), candidate_rng)) {
      candidates.push_back({std::move(u), 0.0});
    }
  }
  for (auto& c : candidates) c.value = score(c.unit);

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].value > candidates[b].value;
  });

  auto eligible = [&](const Point& unit) {
    return unit_distance(unit, incumbent_unit) >= config.incumbent_exclusion;
  };

  std::vector<Scored> refined;
  std::size_t started = 0;
  for (std::size_t rank = 0; rank < order.size() && started < config.refine_top_k; ++rank) {
    Scored current = candidates[order[rank]];
    if (!(current.value > 0.0)) break;
    ++started;
    double step = config.refine_initial_step;
    for (std::size_t it = 0; it < config.refine_steps; ++it) {
      Scored best_move = current;
      for (std::size_t d = 0; d < dims; ++d) {
        for (double sign : {1.0, -1.0}) {
          Point trial = current.unit;
          trial[d] = std::clamp(trial[d] + sign * step, 0.0, 1.0);
          if (trial[d] == current.unit[d]) continue;
          const double v = score(trial);
          if (v > best_move.value && eligible(trial)) best_move = {std::move(trial), v};
        }
      }
      if (best_move.value > current.value) {
        current = std::move(best_move);
      } else {
        step *= 0.5;
      }
    }
    refined.push_back(std::move(current));
  }

  const Scored* best = nullptr;
  auto consider = [&](const Scored& s) {
    if (!eligible(s.unit)) return;
    if (best == nullptr || s.value > best->value) best = &s;
  };
  for (std::size_t idx : order) consider(candidates[idx]);
  for (const auto& s : refined) consider(s);

  if (best != nullptr && best->value > 0.0) {
    result.x = domain.from_unit(best->unit);
    result.value = best->value;
    return result;
  }

  // Every score is zero: explore where the model is least certain.
  double best_var = -1.0;
  const Scored* pick = nullptr;
  for (const auto& c : candidates) {
    if (!eligible(c.unit)) continue;
    const double var = acquisition.mean_variance(domain.from_unit(c.unit));
    if (var > best_var) {
      best_var = var;
      pick = &c;
    }
  }
  if (pick == nullptr) pick = &candidates.front();
  result.x = domain.from_unit(pick->unit);
  result.value = pick->value;
  result.fell_back_to_variance = true;
  return result;
}

}  // namespace prefopt
