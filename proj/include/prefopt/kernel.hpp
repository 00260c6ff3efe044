#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <span>
#include <vector>

#include "prefopt/core.hpp"

namespace prefopt {

/// Logistic function, evaluated without overflow for large |x|.
double sigmoid(double x);
/// log(sigmoid(x)), accurate in both tails.
double log_sigmoid(double x);

/// ARD squared-exponential hyperparameters. Lengthscales are not stored
/// directly: each is a sigmoid-squashed gamma mapped into its bounds.
struct KernelHyperParams {
  std::vector<double> gamma;
  std::vector<double> alpha_lower;
  std::vector<double> alpha_upper;
  double sigma = 0.1;

  /// Lengthscale bounds 0.01 r_d and 5 r_d for axis range r_d, gamma = 0.
  static KernelHyperParams for_domain(const Domain& domain, double sigma = 0.1);

  std::size_t dims() const { return gamma.size(); }
  void validate() const;
};

/// theta_d = S(gamma_d) (alpha_upper_d - alpha_lower_d) + alpha_lower_d.
std::vector<double> lengthscales(const KernelHyperParams& params);
double lengthscale(double gamma, double alpha_lower, double alpha_upper);

/// sigma^2 exp(-1/2 sum_d (x_d - y_d)^2 / theta_d^2).
double rbf(std::span<const double> x, std::span<const double> y, const KernelHyperParams& params);
double rbf(std::span<const double> x, std::span<const double> y, std::span<const double> theta,
           double sigma);

/// Per-axis squared coordinate differences between every pair of points,
/// cached so covariance matrices can be rebuilt cheaply for new lengthscales.
class PairwiseSquaredDiffs {
 public:
  explicit PairwiseSquaredDiffs(std::span<const Point> points);

  std::size_t size() const { return n_; }
  std::size_t dims() const { return dims_; }
  /// (x_i,d - x_j,d)^2 as an n x n matrix.
  const Eigen::MatrixXd& axis(std::size_t d) const { return diffs_[d]; }

 private:
  std::size_t n_ = 0;
  std::size_t dims_ = 0;
  std::vector<Eigen::MatrixXd> diffs_;
};

/// K + jitter I with its Cholesky factor. Immutable once built.
class CovarianceMatrix {
 public:
  const Eigen::MatrixXd& entries() const { return entries_; }
  double jitter() const { return jitter_; }
  Eigen::Index size() const { return entries_.rows(); }
  const Eigen::LLT<Eigen::MatrixXd>& factor() const { return llt_; }
  Eigen::MatrixXd lower() const { return llt_.matrixL(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }
  /// L^{-1} b.
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& b) const;
  double log_determinant() const;
  Eigen::MatrixXd inverse() const;

 private:
  friend CovarianceMatrix factorize_with_jitter(Eigen::MatrixXd, double, double);
  Eigen::MatrixXd entries_;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Jitter schedule: start at the requested value (or 1e-6 sigma^2 when zero
/// fails), multiply by 10 after each failed factorization, give up past
/// 1e-2 sigma^2 with a NumericalError that carries a condition estimate.
CovarianceMatrix factorize_with_jitter(Eigen::MatrixXd base, double signal_variance,
                                       double initial_jitter);

/// Default starting jitter, 1e-6 sigma^2.
inline double default_jitter(double sigma) { return 1e-6 * sigma * sigma; }

CovarianceMatrix build_covariance(std::span<const Point> points, const KernelHyperParams& params,
                                  double jitter);
CovarianceMatrix build_covariance(std::span<const Point> points, const KernelHyperParams& params);

/// Noise-free kernel matrix from cached differences (no jitter).
Eigen::MatrixXd kernel_matrix(const PairwiseSquaredDiffs& diffs, std::span<const double> theta,
                              double sigma);

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;
};

/// GP posterior at x given latent values f at the training points.
Prediction gp_predict(std::span<const double> x, std::span<const Point> points,
                      const Eigen::VectorXd& f, const CovarianceMatrix& cov,
                      const KernelHyperParams& params);

/// Predictor with K^{-1} f cached, for scoring many locations against one
/// latent draw. Safe to share across threads.
class GpPredictor {
 public:
  GpPredictor(std::span<const Point> points, Eigen::VectorXd f, std::vector<double> theta,
              double sigma, double jitter);

  Prediction predict(std::span<const double> x) const;
  std::span<const double> theta() const { return theta_; }
  const Eigen::VectorXd& latent() const { return f_; }
  const CovarianceMatrix& covariance() const { return cov_; }

 private:
  std::vector<Point> points_;
  Eigen::VectorXd f_;
  std::vector<double> theta_;
  std::vector<double> inv_theta_sq_;
  double sigma_;
  CovarianceMatrix cov_;
  Eigen::VectorXd weights_;
};

}  // namespace prefopt
