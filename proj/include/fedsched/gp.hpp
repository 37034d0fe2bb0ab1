#pragma once

#include <Eigen/Dense>

namespace fedsched {

struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;  // clamped at 0 against round-off
};

/// Matern-5/2 on the Euclidean distance between plan indicator vectors
/// (sqrt of the Hamming distance for binary inputs).
double matern_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                     double lengthscale, double signal_var);

/// GP surrogate over plan indicator vectors with a constant prior mean set
/// to the sample mean of the observed costs.
class GaussianProcess {
 public:
  /// Rows of x are observation inputs. Cholesky failures retry with the
  /// jitter scaled by 10, three times, before giving up.
  GaussianProcess(Eigen::MatrixXd x, Eigen::VectorXd y, double lengthscale,
                  double signal_var, double noise);

  GpPosterior predict(const Eigen::VectorXd& query) const;

  double prior_mean() const { return prior_mean_; }
  double noise() const { return noise_; }

 private:
  Eigen::MatrixXd x_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;  // (K + noise I)^-1 (y - mean)
  double lengthscale_;
  double signal_var_;
  double noise_;
  double prior_mean_;
};

/// Expected improvement below the incumbent best for a minimization
/// problem; the s = 0 limit is max(0, best - mean).
double expected_improvement(const GpPosterior& posterior, double best);

}  // namespace fedsched
