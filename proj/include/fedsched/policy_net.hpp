#pragma once

#include "fedsched/rng.hpp"

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

namespace fedsched {

/// Gated recurrent cell plus a per-step logistic output head. The cell is
/// run over a length-K device sequence and emits one selection probability
/// per device. Forward and backward passes are hand-written.
struct PolicyParams {
  int hidden = 0;
  int features = 0;

  Eigen::MatrixXd wz, wr, wc;  // input weights, hidden x features
  Eigen::MatrixXd uz, ur, uc;  // recurrent weights, hidden x hidden
  Eigen::VectorXd bz, br, bc;  // gate biases
  Eigen::VectorXd wo;          // output head weights
  double bo = 0.0;             // output head bias

  static PolicyParams zeros(int hidden, int features);
  /// Uniform +-0.1 initialization.
  static PolicyParams init(int hidden, int features, Rng& rng);

  int count() const;
  Eigen::VectorXd flatten() const;
  static PolicyParams unflatten(int hidden, int features,
                                const Eigen::VectorXd& flat);

  void add_scaled(const PolicyParams& g, double scale);
  double squared_norm() const;
  bool all_finite() const;
};

/// Per-step activations kept for backpropagation.
struct PolicyTrace {
  Eigen::MatrixXd z, r, c, h;  // hidden x steps
  Eigen::VectorXd probs;       // one per step
};

/// Per-device selection probabilities for a K x features input sequence.
Eigen::VectorXd policy_forward(const PolicyParams& params,
                               const Eigen::MatrixXd& features);

Eigen::VectorXd policy_forward(const PolicyParams& params,
                               const Eigen::MatrixXd& features,
                               PolicyTrace& trace);

/// Bernoulli log-likelihood of the selection pattern: log p over selected
/// steps plus log(1 - p) over the rest.
double log_prob_sum(const PolicyParams& params,
                    const Eigen::MatrixXd& features,
                    const std::vector<int>& selected);

/// Gradient of log_prob_sum with respect to every parameter.
PolicyParams grad_log_prob(const PolicyParams& params,
                           const Eigen::MatrixXd& features,
                           const std::vector<int>& selected);

/// Versioned flat-array serialization: hidden width, device count, feature
/// count, then the flattened parameters.
void save_policy(std::ostream& out, const PolicyParams& params,
                 int num_devices);
PolicyParams load_policy(std::istream& in, int* num_devices = nullptr);

}  // namespace fedsched
