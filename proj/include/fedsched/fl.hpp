#pragma once

#include "fedsched/rng.hpp"
#include "fedsched/types.hpp"

#include <Eigen/Dense>

namespace fedsched {

struct Dataset {
  Eigen::MatrixXd inputs;   // samples x features
  Eigen::VectorXi labels;   // class ids
  int classes = 0;

  Eigen::Index size() const { return inputs.rows(); }
};

/// Gaussian blobs: class centers drawn as separation * N(0, I), unit-noise
/// samples around them, classes balanced up to remainder.
Dataset make_blobs(int samples, int features, int classes, double separation,
                   Rng& rng);

struct LocalDataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXi labels;

  Eigen::Index size() const { return inputs.rows(); }
};

/// IID: equal-size uniform split. Non-IID: each class is cut into
/// shards_per_class shards and every device takes one shard from each of
/// two randomly chosen classes.
std::vector<LocalDataset> partition(const Dataset& data, int num_devices,
                                    PartitionMode mode, Rng& rng,
                                    int shards_per_class = 20);

/// Flat-parameter classifier: multinomial logistic regression or a
/// one-hidden-layer tanh network, softmax cross-entropy loss.
struct Model {
  ModelKind kind = ModelKind::Logistic;
  int features = 0;
  int classes = 0;
  int hidden = 0;  // MLP only

  int param_count() const;
  Eigen::VectorXd init_params(Rng& rng) const;

  double loss(const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
              const Eigen::VectorXi& y) const;
  /// Mean cross-entropy over the batch and its gradient.
  double loss_grad(const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
                   const Eigen::VectorXi& y, Eigen::VectorXd& grad) const;
  double accuracy(const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
                  const Eigen::VectorXi& y) const;
};

/// tau epochs of mini-batch SGD at the given learning rate.
Eigen::VectorXd local_update(const Model& model, Eigen::VectorXd params,
                             const LocalDataset& data, int epochs,
                             int batch_size, double lr, Rng& rng);

/// Dataset-size-weighted parameter average.
Eigen::VectorXd fedavg_aggregate(
    const std::vector<std::pair<Eigen::VectorXd, double>>& locals);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Data-size-weighted average of per-device loss (equals the pooled loss)
/// plus pooled accuracy.
EvalResult global_loss(const Model& model, const Eigen::VectorXd& params,
                       const std::vector<LocalDataset>& datasets);

/// Squared norm of the full-data gradient, pooled over all devices.
double global_grad_norm_sq(const Model& model, const Eigen::VectorXd& params,
                           const std::vector<LocalDataset>& datasets);

/// Running average of per-round squared gradient norms, reported at each
/// requested checkpoint (partial tail included when the trace is shorter).
struct GradDecayReport {
  std::vector<std::pair<int, double>> checkpoint_averages;
  /// averages.back() / averages.front(); 1.0 when fewer than 2 checkpoints.
  double ratio = 1.0;
};

GradDecayReport grad_norm_metric(const std::vector<double>& norm_sq_by_round,
                                 const std::vector<int>& checkpoints);

}  // namespace fedsched
