#include "prefopt/kernel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace prefopt {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

KernelHyperParams KernelHyperParams::for_domain(const Domain& domain, double sigma) {
  KernelHyperParams params;
  params.gamma.assign(domain.dims(), 0.0);
  params.alpha_lower.resize(domain.dims());
  params.alpha_upper.resize(domain.dims());
  for (std::size_t d = 0; d < domain.dims(); ++d) {
    params.alpha_lower[d] = 0.01 * domain.range(d);
    params.alpha_upper[d] = 5.0 * domain.range(d);
  }
  params.sigma = sigma;
  return params;
}

void KernelHyperParams::validate() const {
  if (alpha_lower.size() != gamma.size() || alpha_upper.size() != gamma.size()) {
    throw std::invalid_argument("kernel hyperparameter vectors differ in length");
  }
  for (std::size_t d = 0; d < gamma.size(); ++d) {
    if (!(alpha_lower[d] > 0.0 && alpha_lower[d] < alpha_upper[d])) {
      throw std::invalid_argument("lengthscale bounds must satisfy 0 < lower < upper");
    }
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("signal scale must be positive");
}

double lengthscale(double gamma, double alpha_lower, double alpha_upper) {
  return sigmoid(gamma) * (alpha_upper - alpha_lower) + alpha_lower;
}

std::vector<double> lengthscales(const KernelHyperParams& params) {
  std::vector<double> theta(params.dims());
  for (std::size_t d = 0; d < theta.size(); ++d) {
    theta[d] = lengthscale(params.gamma[d], params.alpha_lower[d], params.alpha_upper[d]);
  }
  return theta;
}

double rbf(std::span<const double> x, std::span<const double> y, std::span<const double> theta,
           double sigma) {
  if (x.size() != y.size() || x.size() != theta.size()) {
    throw std::invalid_argument("rbf: dimension mismatch");
  }
  double r2 = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = (x[d] - y[d]) / theta[d];
    r2 += diff * diff;
  }
  return sigma * sigma * std::exp(-0.5 * r2);
}

double rbf(std::span<const double> x, std::span<const double> y, const KernelHyperParams& params) {
  return rbf(x, y, lengthscales(params), params.sigma);
}

PairwiseSquaredDiffs::PairwiseSquaredDiffs(std::span<const Point> points)
    : n_(points.size()), dims_(points.empty() ? 0 : points.front().size()) {
  const auto n = static_cast<Eigen::Index>(n_);
  diffs_.assign(dims_, Eigen::MatrixXd::Zero(n, n));
  for (std::size_t d = 0; d < dims_; ++d) {
    auto& m = diffs_[d];
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const double diff = points[i][d] - points[j][d];
        m(i, j) = m(j, i) = diff * diff;
      }
    }
  }
}

Eigen::MatrixXd kernel_matrix(const PairwiseSquaredDiffs& diffs, std::span<const double> theta,
                              double sigma) {
  const auto n = static_cast<Eigen::Index>(diffs.size());
  Eigen::MatrixXd exponent = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t d = 0; d < diffs.dims(); ++d) {
    exponent.noalias() += diffs.axis(d) * (-0.5 / (theta[d] * theta[d]));
  }
  const double s2 = sigma * sigma;
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = s2;
    const Eigen::Index rest = n - j - 1;
    if (rest == 0) continue;
    k.col(j).tail(rest) = s2 * exponent.col(j).tail(rest).array().exp();
    k.row(j).tail(rest) = k.col(j).tail(rest).transpose();
  }
  return k;
}

Eigen::VectorXd CovarianceMatrix::solve_lower(const Eigen::VectorXd& b) const {
  return llt_.matrixL().solve(b);
}

double CovarianceMatrix::log_determinant() const {
  const auto& l = llt_.matrixLLT();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) sum += std::log(l(i, i));
  return 2.0 * sum;
}

Eigen::MatrixXd CovarianceMatrix::inverse() const {
  // X = L^{-1} column by column, then K^{-1} = X^T X from column tails.
  const Eigen::MatrixXd& l = llt_.matrixLLT();
  const Eigen::Index n = size();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    x(j, j) = 1.0;
    for (Eigen::Index k = j; k < n; ++k) {
      const double xk = x(k, j) / l(k, k);
      x(k, j) = xk;
      const Eigen::Index rest = n - k - 1;
      if (rest > 0) x.col(j).segment(k + 1, rest).noalias() -= xk * l.col(k).segment(k + 1, rest);
    }
  }
  Eigen::MatrixXd inv(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = x.col(i).segment(i, n - i).dot(x.col(j).segment(i, n - i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  }
  return inv;
}

CovarianceMatrix factorize_with_jitter(Eigen::MatrixXd base, double signal_variance,
                                       double initial_jitter) {
  const double max_jitter = 1e-2 * signal_variance;
  double jitter = initial_jitter;
  const auto n = base.rows();
  CovarianceMatrix cov;
  while (true) {
    cov.entries_ = base;
    cov.entries_.diagonal().array() += jitter;
    cov.llt_.compute(cov.entries_);
    if (cov.llt_.info() == Eigen::Success) {
      cov.jitter_ = jitter;
      return cov;
    }
    if (jitter >= max_jitter) break;
    jitter = jitter > 0.0 ? std::min(jitter * 10.0, max_jitter) : 1e-6 * signal_variance;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(base, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << "covariance of size " << n << " not positive definite with jitter " << jitter;
  if (eig.info() == Eigen::Success && n > 0) {
    msg << "; eigenvalue range [" << eig.eigenvalues().minCoeff() << ", "
        << eig.eigenvalues().maxCoeff() << "]";
  }
  throw NumericalError(msg.str());
}

CovarianceMatrix build_covariance(std::span<const Point> points, const KernelHyperParams& params,
                                  double jitter) {
  if (points.empty()) throw std::invalid_argument("build_covariance needs at least one point");
  params.validate();
  const auto theta = lengthscales(params);
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = params.sigma * params.sigma;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = rbf(points[i], points[j], theta, params.sigma);
    }
  }
  return factorize_with_jitter(std::move(k), params.sigma * params.sigma, jitter);
}

CovarianceMatrix build_covariance(std::span<const Point> points, const KernelHyperParams& params) {
  return build_covariance(points, params, default_jitter(params.sigma));
}

Prediction gp_predict(std::span<const double> x, std::span<const Point> points,
                      const Eigen::VectorXd& f, const CovarianceMatrix& cov,
                      const KernelHyperParams& params) {
  const auto theta = lengthscales(params);
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k(i) = rbf(x, points[i], theta, params.sigma);
  Prediction out;
  out.mean = k.dot(cov.solve(f));
  const Eigen::VectorXd v = cov.solve_lower(k);
  const double var = params.sigma * params.sigma - v.squaredNorm();
  out.sd = var > 0.0 ? std::sqrt(var) : 0.0;
  return out;
}

GpPredictor::GpPredictor(std::span<const Point> points, Eigen::VectorXd f,
                         std::vector<double> theta, double sigma, double jitter)
    : points_(points.begin(), points.end()),
      f_(std::move(f)),
      theta_(std::move(theta)),
      sigma_(sigma) {
  inv_theta_sq_.resize(theta_.size());
  for (std::size_t d = 0; d < theta_.size(); ++d) inv_theta_sq_[d] = 1.0 / (theta_[d] * theta_[d]);
  PairwiseSquaredDiffs diffs(points_);
  cov_ = factorize_with_jitter(kernel_matrix(diffs, theta_, sigma_), sigma_ * sigma_, jitter);
  weights_ = cov_.solve(f_);
}

Prediction GpPredictor::predict(std::span<const double> x) const {
  const auto n = static_cast<Eigen::Index>(points_.size());
  const double s2 = sigma_ * sigma_;
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point& p = points_[i];
    double r2 = 0.0;
    for (std::size_t d = 0; d < p.size(); ++d) {
      const double diff = x[d] - p[d];
      r2 += diff * diff * inv_theta_sq_[d];
    }
    k(i) = s2 * std::exp(-0.5 * r2);
  }
  Prediction out;
  out.mean = k.dot(weights_);
  cov_.factor().matrixL().solveInPlace(k);
  const double var = s2 - k.squaredNorm();
  out.sd = var > 0.0 ? std::sqrt(var) : 0.0;
  return out;
}

}  // namespace prefopt
