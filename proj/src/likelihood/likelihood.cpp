#include "prefopt/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace prefopt {

namespace {

const double kLogFloor = std::log(kProbabilityFloor);
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

}  // namespace

void TieModelParams::validate() const {
  if (!(beta >= 1.0)) throw std::invalid_argument("tie parameter beta must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
}

double CategoryProbs::of(PreferenceOutcome outcome) const {
  switch (outcome) {
    case PreferenceOutcome::FirstLess:
      return less;
    case PreferenceOutcome::Equivalent:
      return tie;
    case PreferenceOutcome::FirstGreater:
      return greater;
  }
  return 0.0;
}

CategoryProbs categorical_probs(double f1, double f2, const TieModelParams& params) {
  const double t = (f1 - f2) / std::sqrt(2.0 * params.sigma * params.sigma);
  // Both logistic values are evaluated directly, so swapping f1 and f2
  // swaps them bit for bit.
  const double xi1 = sigmoid(t);
  const double xi2 = sigmoid(-t);
  const double beta = params.beta;
  const double denom_less = xi2 + beta * xi1;
  const double denom_greater = xi1 + beta * xi2;
  CategoryProbs p;
  p.less = xi2 / denom_less;
  p.greater = xi1 / denom_greater;
  p.tie = (beta * beta - 1.0) * (xi1 * xi2) / (denom_greater * denom_less);
  p.less = std::clamp(p.less, 0.0, 1.0);
  p.greater = std::clamp(p.greater, 0.0, 1.0);
  p.tie = std::clamp(p.tie, 0.0, 1.0);
  return p;
}

double log_outcome_probability(double f1, double f2, PreferenceOutcome outcome,
                               const TieModelParams& params, double* d_f1) {
  const double scale = std::sqrt(2.0 * params.sigma * params.sigma);
  const double t = (f1 - f2) / scale;
  const double xi1 = sigmoid(t);
  const double xi2 = sigmoid(-t);
  const double beta = params.beta;
  const double denom_less = xi2 + beta * xi1;     // in [1, beta]
  const double denom_greater = xi1 + beta * xi2;  // in [1, beta]
  const double cross = (beta - 1.0) * xi1 * xi2;

  double value = 0.0;
  double d_t = 0.0;
  switch (outcome) {
    case PreferenceOutcome::FirstLess:
      value = log_sigmoid(-t) - std::log(denom_less);
      d_t = -xi1 - cross / denom_less;
      break;
    case PreferenceOutcome::FirstGreater:
      value = log_sigmoid(t) - std::log(denom_greater);
      d_t = xi2 + cross / denom_greater;
      break;
    case PreferenceOutcome::Equivalent:
      if (beta > 1.0) {
        value = std::log(beta * beta - 1.0) + log_sigmoid(t) + log_sigmoid(-t) -
                std::log(denom_greater) - std::log(denom_less);
        d_t = xi2 - xi1 + cross / denom_greater - cross / denom_less;
      } else {
        value = kLogFloor;
      }
      break;
  }
  if (value < kLogFloor) {
    value = kLogFloor;
    d_t = 0.0;
  }
  if (d_f1 != nullptr) *d_f1 = d_t / scale;
  return value;
}

double log_likelihood(const PreferenceDataset& dataset, const LatentAssignment& assignment,
                      const TieModelParams& params) {
  double total = 0.0;
  const auto& pairs = dataset.index_pairs();
  const auto& records = dataset.records();
  for (std::size_t m = 0; m < records.size(); ++m) {
    const auto [a, b] = pairs[m];
    if (a >= static_cast<std::size_t>(assignment.f.size()) ||
        b >= static_cast<std::size_t>(assignment.f.size())) {
      throw std::invalid_argument("latent vector shorter than the dataset's point set");
    }
    total += log_outcome_probability(assignment.f(static_cast<Eigen::Index>(a)),
                                     assignment.f(static_cast<Eigen::Index>(b)),
                                     records[m].outcome, params);
  }
  return total;
}

double log_joint(const PreferenceDataset& dataset, const LatentAssignment& assignment,
                 const KernelHyperParams& kernel_bounds, const TieModelParams& tie_params) {
  PreferenceModel model(dataset, kernel_bounds, tie_params);
  std::vector<double> z(model.dimension());
  for (std::size_t i = 0; i < model.num_points(); ++i) {
    z[i] = assignment.f(static_cast<Eigen::Index>(i));
  }
  for (std::size_t d = 0; d < model.dims(); ++d) z[model.num_points() + d] = assignment.gamma[d];
  return model.log_density(z, {});
}

PreferenceModel::PreferenceModel(const PreferenceDataset& dataset, KernelHyperParams kernel_bounds,
                                 TieModelParams tie_params)
    : num_points_(dataset.num_points()),
      dims_(kernel_bounds.alpha_lower.size()),
      kernel_(std::move(kernel_bounds)),
      tie_(tie_params),
      diffs_(dataset.unique_points()) {
  if (kernel_.gamma.size() != dims_) kernel_.gamma.assign(dims_, 0.0);
  kernel_.validate();
  tie_.validate();
  if (num_points_ > 0 && dataset.dims() != dims_) {
    throw std::invalid_argument("dataset and kernel disagree on dimension");
  }
  const auto& pairs = dataset.index_pairs();
  comparisons_.reserve(pairs.size());
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    comparisons_.push_back({static_cast<Eigen::Index>(pairs[m].first),
                            static_cast<Eigen::Index>(pairs[m].second),
                            dataset.records()[m].outcome});
  }
}

double PreferenceModel::log_density(std::span<const double> z, std::span<double> grad) const {
  return evaluate(z, {}, {}, grad, {}, {});
}

double PreferenceModel::integrated_log_density(std::span<const double> z,
                                               std::span<const double> f_mean,
                                               std::span<const double> f_scale,
                                               std::span<double> grad_z,
                                               std::span<double> grad_mean,
                                               std::span<double> grad_scale) const {
  if (f_mean.size() != num_points_ || f_scale.size() != num_points_) {
    throw std::invalid_argument("PreferenceModel: wrong latent mean or scale length");
  }
  if (!grad_z.empty() && (grad_mean.size() != num_points_ || grad_scale.size() != num_points_)) {
    throw std::invalid_argument("PreferenceModel: wrong gradient buffer length");
  }
  return evaluate(z, f_mean, f_scale, grad_z, grad_mean, grad_scale);
}

double PreferenceModel::evaluate(std::span<const double> z, std::span<const double> f_mean,
                                 std::span<const double> f_scale, std::span<double> grad,
                                 std::span<double> grad_mean, std::span<double> grad_scale) const {
  if (z.size() != dimension() || (!grad.empty() && grad.size() != dimension())) {
    throw std::invalid_argument("PreferenceModel: wrong parameter vector length");
  }
  const auto n = static_cast<Eigen::Index>(num_points_);
  const bool want_grad = !grad.empty();
  const bool averaged = !f_mean.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  // Lengthscale prior.
  double lp = -0.5 * static_cast<double>(dims_) * kLogTwoPi;
  std::vector<double> theta(dims_);
  std::vector<double> dtheta_dgamma(dims_);
  for (std::size_t d = 0; d < dims_; ++d) {
    const double g = z[num_points_ + d];
    lp -= 0.5 * g * g;
    const double s = sigmoid(g);
    const double span = kernel_.alpha_upper[d] - kernel_.alpha_lower[d];
    theta[d] = s * span + kernel_.alpha_lower[d];
    dtheta_dgamma[d] = s * (1.0 - s) * span;
    if (want_grad) grad[num_points_ + d] = -g;
  }
  if (n == 0) return lp;

  // GP prior on f, either at f or averaged over f ~ N(m, diag(s^2)):
  // E[-f^T K^{-1} f / 2] = -m^T K^{-1} m / 2 - sum_i (K^{-1})_ii s_i^2 / 2.
  const Eigen::Map<const Eigen::VectorXd> f(z.data(), n);
  const Eigen::VectorXd centre =
      averaged ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(f_mean.data(), n))
               : Eigen::VectorXd(f);
  const double sigma = kernel_.sigma;
  const Eigen::MatrixXd k_plain = kernel_matrix(diffs_, theta, sigma);
  const CovarianceMatrix cov =
      factorize_with_jitter(k_plain, sigma * sigma, default_jitter(sigma));
  const Eigen::VectorXd alpha = cov.solve(centre);
  lp += -0.5 * centre.dot(alpha) - 0.5 * cov.log_determinant() -
        0.5 * static_cast<double>(n) * kLogTwoPi;

  Eigen::MatrixXd k_inv;
  if (want_grad || averaged) k_inv = cov.inverse();
  if (averaged) {
    for (Eigen::Index i = 0; i < n; ++i) lp -= 0.5 * k_inv(i, i) * f_scale[i] * f_scale[i];
  }

  Eigen::Map<Eigen::VectorXd> grad_f(grad.data(), want_grad ? n : 0);
  if (want_grad) {
    // With A = m m^T + diag(s^2) (just f f^T when not averaged),
    // d/dtheta_d = 1/2 tr((K^{-1} A K^{-1} - K^{-1}) dK/dtheta_d),
    // dK_ij/dtheta_d = K_ij (x_i,d - x_j,d)^2 / theta_d^3.
    // Diagonal differences vanish, so only the strict lower triangle counts (twice).
    Eigen::MatrixXd spread;
    if (averaged) {
      for (Eigen::Index i = 0; i < n; ++i) {
        grad_mean[i] = -alpha(i);
        grad_scale[i] = -k_inv(i, i) * f_scale[i];
      }
      const Eigen::MatrixXd scaled =
          k_inv * Eigen::Map<const Eigen::VectorXd>(f_scale.data(), n).asDiagonal();
      spread = Eigen::MatrixXd::Zero(n, n);
      spread.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    } else {
      grad_f = -alpha;
    }
    std::vector<double> trace_terms(dims_, 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double a = alpha(i) * alpha(j) - k_inv(i, j);
        if (averaged) a += spread(i, j);
        const double w = a * k_plain(i, j);
        for (std::size_t d = 0; d < dims_; ++d) trace_terms[d] += w * diffs_.axis(d)(i, j);
      }
    }
    for (std::size_t d = 0; d < dims_; ++d) {
      const double t3 = theta[d] * theta[d] * theta[d];
      grad[num_points_ + d] += trace_terms[d] / t3 * dtheta_dgamma[d];
    }
  }

  // Comparisons.
  for (const auto& c : comparisons_) {
    double d_first = 0.0;
    lp += log_outcome_probability(f(c.first), f(c.second), c.outcome, tie_,
                                  want_grad ? &d_first : nullptr);
    if (want_grad) {
      grad_f(c.first) += d_first;
      grad_f(c.second) -= d_first;
    }
  }
  return lp;
}

}  // namespace prefopt
