#include "fedsched/gp.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsched {

double matern_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                     double lengthscale, double signal_var) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("kernel inputs differ in length");
  }
  if (lengthscale <= 0.0 || signal_var <= 0.0) {
    throw std::invalid_argument("kernel hyperparameters must be > 0");
  }
  const double d = (u - v).norm();
  const double s = std::sqrt(5.0) * d / lengthscale;
  return signal_var * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

GaussianProcess::GaussianProcess(Eigen::MatrixXd x, Eigen::VectorXd y,
                                 double lengthscale, double signal_var,
                                 double noise)
    : x_(std::move(x)),
      lengthscale_(lengthscale),
      signal_var_(signal_var),
      noise_(noise) {
  const Eigen::Index n = x_.rows();
  if (n < 1 || y.size() != n) {
    throw std::invalid_argument("gp fit needs >= 1 observation with matching costs");
  }
  if (noise_ <= 0.0) throw std::invalid_argument("gp noise must be > 0");

  prior_mean_ = y.mean();

  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      gram(i, j) = matern_kernel(x_.row(i), x_.row(j), lengthscale_, signal_var_);
      gram(j, i) = gram(i, j);
    }
  }

  for (int attempt = 0;; ++attempt) {
    chol_.compute(gram + noise_ * Eigen::MatrixXd::Identity(n, n));
    if (chol_.info() == Eigen::Success) break;
    if (attempt == 3) {
      throw std::runtime_error("gp fit: Cholesky failed after jitter retries");
    }
    noise_ *= 10.0;
  }
  weights_ = chol_.solve((y.array() - prior_mean_).matrix());
}

GpPosterior GaussianProcess::predict(const Eigen::VectorXd& query) const {
  const Eigen::Index n = x_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i) = matern_kernel(x_.row(i), query, lengthscale_, signal_var_);
  }
  GpPosterior out;
  out.mean = prior_mean_ + k.dot(weights_);
  const double reduction = k.dot(chol_.solve(k));
  out.variance = std::max(0.0, signal_var_ - reduction);
  return out;
}

double expected_improvement(const GpPosterior& posterior, double best) {
  const double s = std::sqrt(std::max(0.0, posterior.variance));
  const double gap = best - posterior.mean;
  if (s <= 0.0) return std::max(0.0, gap);
  const double z = gap / s;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return gap * cdf + s * pdf;
}

}  // namespace fedsched
