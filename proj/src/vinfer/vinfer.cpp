#include "prefopt/vinfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace prefopt {

namespace {

const double kHalfLogTwoPiE = 0.5 * (1.0 + std::log(2.0 * std::numbers::pi));

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

VariationalState VariationalState::initial(std::size_t num_points, std::size_t dims) {
  VariationalState s;
  s.f_means = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_points));
  s.f_logscales = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_points));
  s.gamma_means = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims));
  s.gamma_logscales = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims));
  return s;
}

VariationalState VariationalState::extended(std::size_t num_points) const {
  if (num_points < this->num_points()) {
    throw std::invalid_argument("variational state cannot shrink");
  }
  VariationalState s = *this;
  const auto old_n = f_means.size();
  const auto n = static_cast<Eigen::Index>(num_points);
  s.f_means.conservativeResize(n);
  s.f_logscales.conservativeResize(n);
  s.f_means.tail(n - old_n).setZero();
  s.f_logscales.tail(n - old_n).setZero();
  return s;
}

Eigen::VectorXd VariationalState::means() const {
  Eigen::VectorXd out(f_means.size() + gamma_means.size());
  out << f_means, gamma_means;
  return out;
}

Eigen::VectorXd VariationalState::logscales() const {
  Eigen::VectorXd out(f_logscales.size() + gamma_logscales.size());
  out << f_logscales, gamma_logscales;
  return out;
}

void VariationalState::assign(const Eigen::VectorXd& means, const Eigen::VectorXd& logscales) {
  const auto n = f_means.size();
  const auto d = gamma_means.size();
  f_means = means.head(n);
  gamma_means = means.tail(d);
  f_logscales = logscales.head(n);
  gamma_logscales = logscales.tail(d);
}

void FitConfig::validate() const {
  if (samples_per_step == 0) throw std::invalid_argument("samples_per_step must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("moment decay rates must lie in [0, 1)");
  }
  if (!(decay_start >= 0.0 && decay_start <= 1.0)) {
    throw std::invalid_argument("decay_start must lie in [0, 1]");
  }
  if (!(final_lr_scale > 0.0 && final_lr_scale <= 1.0)) {
    throw std::invalid_argument("final_lr_scale must lie in (0, 1]");
  }
}

LatentAssignment sample_posterior(const VariationalState& state, RandomStream& rng) {
  LatentAssignment z;
  z.f.resize(state.f_means.size());
  for (Eigen::Index i = 0; i < state.f_means.size(); ++i) {
    z.f(i) = state.f_means(i) + std::exp(state.f_logscales(i)) * rng.normal();
  }
  z.gamma.resize(state.dims());
  for (Eigen::Index d = 0; d < state.gamma_means.size(); ++d) {
    z.gamma[d] = state.gamma_means(d) + std::exp(state.gamma_logscales(d)) * rng.normal();
  }
  return z;
}

double entropy(const VariationalState& state) {
  return state.f_logscales.sum() + state.gamma_logscales.sum() +
         static_cast<double>(state.f_means.size() + state.gamma_means.size()) * kHalfLogTwoPiE;
}

double fixed_noise_objective(const VariationalState& state, const DifferentiableLogDensity& density,
                             const Eigen::MatrixXd& noise, Eigen::VectorXd* grad_means,
                             Eigen::VectorXd* grad_logscales) {
  const Eigen::VectorXd mu = state.means();
  const Eigen::VectorXd rho = state.logscales();
  const Eigen::VectorXd scale = rho.array().exp();
  const auto dim = mu.size();
  if (static_cast<std::size_t>(dim) != density.dimension() || noise.cols() != dim) {
    throw std::invalid_argument("variational state does not match the model dimension");
  }
  const bool want_grad = grad_means != nullptr || grad_logscales != nullptr;
  // Leading coordinates whose Gaussian prior term is averaged in closed form.
  const auto block = static_cast<Eigen::Index>(density.gaussian_block());
  const auto span_of = [](Eigen::VectorXd& v, Eigen::Index len) {
    return std::span<double>(v.data(), static_cast<std::size_t>(len));
  };
  const Eigen::VectorXd head_mean = mu.head(block);
  const Eigen::VectorXd head_scale = scale.head(block);
  Eigen::VectorXd g_mu = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd g_rho = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd z(dim);
  Eigen::VectorXd g(dim);
  Eigen::VectorXd g_head_mean(block);
  Eigen::VectorXd g_head_scale(block);
  double total = 0.0;
  const auto samples = noise.rows();
  for (Eigen::Index s = 0; s < samples; ++s) {
    z = mu + scale.cwiseProduct(noise.row(s).transpose());
    const std::span<const double> z_span(z.data(), static_cast<std::size_t>(dim));
    const std::span<double> g_span = want_grad ? span_of(g, dim) : std::span<double>();
    double lp = 0.0;
    if (block > 0) {
      lp = density.integrated_log_density(
          z_span, std::span<const double>(head_mean.data(), static_cast<std::size_t>(block)),
          std::span<const double>(head_scale.data(), static_cast<std::size_t>(block)), g_span,
          want_grad ? span_of(g_head_mean, block) : std::span<double>(),
          want_grad ? span_of(g_head_scale, block) : std::span<double>());
    } else {
      lp = density.log_density(z_span, g_span);
    }
    total += lp;
    if (want_grad) {
      g_mu += g;
      g_rho += g.cwiseProduct(noise.row(s).transpose()).cwiseProduct(scale);
      if (block > 0) {
        g_mu.head(block) += g_head_mean;
        g_rho.head(block) += g_head_scale.cwiseProduct(head_scale);
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(samples);
  if (grad_means != nullptr) *grad_means = g_mu * inv;
  if (grad_logscales != nullptr) {
    *grad_logscales = g_rho * inv;
    grad_logscales->array() += 1.0;  // entropy term
  }
  return total * inv + entropy(state);
}

namespace {

Eigen::MatrixXd draw_noise(std::size_t samples, Eigen::Index dim, RandomStream& rng) {
  Eigen::MatrixXd noise(static_cast<Eigen::Index>(samples), dim);
  for (Eigen::Index s = 0; s < noise.rows(); ++s) {
    for (Eigen::Index j = 0; j < dim; ++j) noise(s, j) = rng.normal();
  }
  return noise;
}

double step_scale(const FitConfig& config, std::size_t step) {
  const double start = config.decay_start * static_cast<double>(config.steps);
  const double s = static_cast<double>(step);
  if (s < start) return 1.0;
  const double progress = (s - start) / (static_cast<double>(config.steps) - start);
  return 1.0 - (1.0 - config.final_lr_scale) * progress;
}

}  // namespace

double elbo_estimate(const VariationalState& state, const DifferentiableLogDensity& density,
                     std::size_t n_samples, RandomStream& rng) {
  if (n_samples == 0) throw std::invalid_argument("elbo_estimate needs at least one sample");
  const auto dim = static_cast<Eigen::Index>(state.num_points() + state.dims());
  return fixed_noise_objective(state, density, draw_noise(n_samples, dim, rng));
}

VariationalState fit(const DifferentiableLogDensity& density, const VariationalState& init,
                     const FitConfig& config, std::vector<double>* trace) {
  config.validate();
  VariationalState state = init;
  const auto dim = static_cast<Eigen::Index>(state.num_points() + state.dims());
  if (static_cast<std::size_t>(dim) != density.dimension()) {
    throw std::invalid_argument("variational state does not match the model dimension");
  }
  if (trace != nullptr) trace->reserve(trace->size() + config.steps);

  RandomStream rng(config.seed);
  Eigen::VectorXd mu = state.means();
  Eigen::VectorXd rho = state.logscales();
  Eigen::VectorXd m_mu = Eigen::VectorXd::Zero(dim), v_mu = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd m_rho = Eigen::VectorXd::Zero(dim), v_rho = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd g_mu, g_rho;
  double b1_pow = 1.0, b2_pow = 1.0;

  for (std::size_t step = 0; step < config.steps; ++step) {
    const Eigen::MatrixXd noise = draw_noise(config.samples_per_step, dim, rng);
    state.assign(mu, rho);
    const double value = fixed_noise_objective(state, density, noise, &g_mu, &g_rho);
    if (!std::isfinite(value) || !all_finite(g_mu) || !all_finite(g_rho)) {
      std::ostringstream msg;
      msg << "variational fit diverged at step " << step << " (ELBO estimate " << value
          << ", max |mean| " << mu.cwiseAbs().maxCoeff() << ")";
      throw DivergenceError(msg.str());
    }
    if (trace != nullptr) trace->push_back(value);

    b1_pow *= config.beta1;
    b2_pow *= config.beta2;
    const double lr = config.learning_rate * step_scale(config, step) *
                      std::sqrt(1.0 - b2_pow) / (1.0 - b1_pow);
    m_mu = config.beta1 * m_mu + (1.0 - config.beta1) * g_mu;
    v_mu = config.beta2 * v_mu + (1.0 - config.beta2) * g_mu.cwiseAbs2();
    m_rho = config.beta1 * m_rho + (1.0 - config.beta1) * g_rho;
    v_rho = config.beta2 * v_rho + (1.0 - config.beta2) * g_rho.cwiseAbs2();
    mu.array() += lr * m_mu.array() / (v_mu.array().sqrt() + config.epsilon);
    rho.array() += lr * m_rho.array() / (v_rho.array().sqrt() + config.epsilon);
    rho = rho.cwiseMax(config.min_logscale).cwiseMin(config.max_logscale);
  }
  state.assign(mu, rho);
  state.step_count += config.steps;
  return state;
}

VariationalState fit(const PreferenceDataset& dataset, const KernelHyperParams& kernel_bounds,
                     const TieModelParams& tie_params, const FitConfig& config,
                     std::vector<double>* trace) {
  PreferenceModel model(dataset, kernel_bounds, tie_params);
  return fit(model, VariationalState::initial(model.num_points(), model.dims()), config, trace);
}

GradientCheckReport gradient_check(const VariationalState& state,
                                   const DifferentiableLogDensity& density, std::size_t n_samples,
                                   std::uint64_t seed, double step) {
  RandomStream rng(seed);
  const auto dim = static_cast<Eigen::Index>(state.num_points() + state.dims());
  const Eigen::MatrixXd noise = draw_noise(n_samples, dim, rng);

  Eigen::VectorXd g_mu, g_rho;
  fixed_noise_objective(state, density, noise, &g_mu, &g_rho);
  GradientCheckReport report;
  report.analytic.resize(2 * dim);
  report.analytic << g_mu, g_rho;
  report.numeric.resize(2 * dim);

  const Eigen::VectorXd mu = state.means();
  const Eigen::VectorXd rho = state.logscales();
  VariationalState probe = state;
  for (Eigen::Index k = 0; k < 2 * dim; ++k) {
    Eigen::VectorXd mu_p = mu, rho_p = rho, mu_m = mu, rho_m = rho;
    if (k < dim) {
      mu_p(k) += step;
      mu_m(k) -= step;
    } else {
      rho_p(k - dim) += step;
      rho_m(k - dim) -= step;
    }
    probe.assign(mu_p, rho_p);
    const double up = fixed_noise_objective(probe, density, noise);
    probe.assign(mu_m, rho_m);
    const double down = fixed_noise_objective(probe, density, noise);
    report.numeric(k) = (up - down) / (2.0 * step);
  }
  for (Eigen::Index k = 0; k < 2 * dim; ++k) {
    const double a = report.analytic(k);
    const double b = report.numeric(k);
    const double denom = std::max({std::abs(a), std::abs(b), 1e-4});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(a - b) / denom);
  }
  return report;
}

void write_elbo_trace(const std::filesystem::path& path, std::span<const double> trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,elbo_estimate\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, trace[i]);
    out << buf;
  }
}

}  // namespace prefopt
