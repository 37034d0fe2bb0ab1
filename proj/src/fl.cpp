#include "fedsched/fl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedsched {

Dataset make_blobs(int samples, int features, int classes, double separation,
                   Rng& rng) {
  if (samples < classes || classes < 2 || features < 1) {
    throw std::invalid_argument("degenerate blob dataset request");
  }
  Eigen::MatrixXd centers(classes, features);
  for (int c = 0; c < classes; ++c) {
    for (int f = 0; f < features; ++f) centers(c, f) = separation * rng.normal();
  }
  Dataset out;
  out.classes = classes;
  out.inputs.resize(samples, features);
  out.labels.resize(samples);
  for (int i = 0; i < samples; ++i) {
    const int c = i % classes;  // balanced labels
    out.labels(i) = c;
    for (int f = 0; f < features; ++f) {
      out.inputs(i, f) = centers(c, f) + rng.normal();
    }
  }
  return out;
}

namespace {

LocalDataset gather(const Dataset& data, const std::vector<int>& idx) {
  LocalDataset out;
  out.inputs.resize(Eigen::Index(idx.size()), data.inputs.cols());
  out.labels.resize(Eigen::Index(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) {
    out.inputs.row(Eigen::Index(i)) = data.inputs.row(idx[i]);
    out.labels(Eigen::Index(i)) = data.labels(idx[i]);
  }
  return out;
}

}  // namespace

std::vector<LocalDataset> partition(const Dataset& data, int num_devices,
                                    PartitionMode mode, Rng& rng,
                                    int shards_per_class) {
  if (num_devices < 1) throw std::invalid_argument("need >= 1 device");
  std::vector<LocalDataset> out;
  out.reserve(size_t(num_devices));

  if (mode == PartitionMode::Iid) {
    std::vector<int> order = rng.permutation(int(data.size()));
    const int per = int(data.size()) / num_devices;
    for (int k = 0; k < num_devices; ++k) {
      std::vector<int> idx(order.begin() + k * per,
                           order.begin() + (k + 1) * per);
      std::sort(idx.begin(), idx.end());
      out.push_back(gather(data, idx));
    }
    return out;
  }

  if (data.classes < 2) {
    throw std::invalid_argument("non-IID partition needs >= 2 classes");
  }
  // Cut each class into shards, two shards of distinct classes per device.
  std::vector<std::vector<std::vector<int>>> shards(size_t(data.classes));
  for (int c = 0; c < data.classes; ++c) {
    std::vector<int> members;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      if (data.labels(i) == c) members.push_back(int(i));
    }
    if (int(members.size()) < shards_per_class) {
      throw std::invalid_argument("class " + std::to_string(c) +
                                  " too small to cut into " +
                                  std::to_string(shards_per_class) +
                                  " shards");
    }
    rng.shuffle(members);
    const int per = int(members.size()) / shards_per_class;
    auto& pool = shards[size_t(c)];
    for (int s = 0; s < shards_per_class; ++s) {
      pool.emplace_back(members.begin() + s * per,
                        members.begin() + (s + 1) * per);
    }
  }

  for (int k = 0; k < num_devices; ++k) {
    std::vector<int> available;
    for (int c = 0; c < data.classes; ++c) {
      if (!shards[size_t(c)].empty()) available.push_back(c);
    }
    if (available.empty()) {
      throw std::invalid_argument("ran out of class shards at device " +
                                  std::to_string(k));
    }
    std::vector<int> chosen;
    if (int(available.size()) >= 2) {
      chosen = rng.sample_without_replacement(available, 2);
    } else {
      chosen = {available[0], available[0]};
      if (shards[size_t(available[0])].size() < 2) {
        throw std::invalid_argument("ran out of class shards at device " +
                                    std::to_string(k));
      }
    }
    std::vector<int> idx;
    for (int c : chosen) {
      auto& pool = shards[size_t(c)];
      const int pick = rng.uniform_int(int(pool.size()));
      idx.insert(idx.end(), pool[size_t(pick)].begin(), pool[size_t(pick)].end());
      pool.erase(pool.begin() + pick);
    }
    std::sort(idx.begin(), idx.end());
    out.push_back(gather(data, idx));
  }
  return out;
}

int Model::param_count() const {
  switch (kind) {
    case ModelKind::Logistic:
      return classes * features + classes;
    case ModelKind::Mlp:
      return hidden * features + hidden + classes * hidden + classes;
  }
  throw std::logic_error("unknown model kind");
}

Eigen::VectorXd Model::init_params(Rng& rng) const {
  Eigen::VectorXd p(param_count());
  const double scale = 0.5 / std::sqrt(double(features));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.uniform(-scale, scale);
  return p;
}

namespace {

/// Row-wise softmax of logits, in place.
void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
}

double cross_entropy(const Eigen::MatrixXd& probs, const Eigen::VectorXi& y) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    sum -= std::log(std::max(probs(i, y(i)), 1e-300));
  }
  return sum / double(probs.rows());
}

struct LogisticView {
  Eigen::Map<const Eigen::MatrixXd> w;  // classes x features
  Eigen::Map<const Eigen::VectorXd> b;  // classes
};

LogisticView logistic_view(const Model& m, const Eigen::VectorXd& p) {
  return {{p.data(), m.classes, m.features},
          {p.data() + m.classes * m.features, m.classes}};
}

struct MlpView {
  Eigen::Map<const Eigen::MatrixXd> w1;  // hidden x features
  Eigen::Map<const Eigen::VectorXd> b1;  // hidden
  Eigen::Map<const Eigen::MatrixXd> w2;  // classes x hidden
  Eigen::Map<const Eigen::VectorXd> b2;  // classes
};

MlpView mlp_view(const Model& m, const Eigen::VectorXd& p) {
  const double* at = p.data();
  Eigen::Map<const Eigen::MatrixXd> w1(at, m.hidden, m.features);
  at += m.hidden * m.features;
  Eigen::Map<const Eigen::VectorXd> b1(at, m.hidden);
  at += m.hidden;
  Eigen::Map<const Eigen::MatrixXd> w2(at, m.classes, m.hidden);
  at += m.classes * m.hidden;
  Eigen::Map<const Eigen::VectorXd> b2(at, m.classes);
  return {w1, b1, w2, b2};
}

Eigen::MatrixXd forward_probs(const Model& m, const Eigen::VectorXd& p,
                              const Eigen::MatrixXd& x,
                              Eigen::MatrixXd* hidden_out = nullptr) {
  Eigen::MatrixXd logits;
  if (m.kind == ModelKind::Logistic) {
    const auto v = logistic_view(m, p);
    logits = (x * v.w.transpose()).rowwise() + v.b.transpose();
  } else {
    const auto v = mlp_view(m, p);
    Eigen::MatrixXd h =
        ((x * v.w1.transpose()).rowwise() + v.b1.transpose()).array().tanh();
    logits = (h * v.w2.transpose()).rowwise() + v.b2.transpose();
    if (hidden_out) *hidden_out = std::move(h);
  }
  softmax_rows(logits);
  return logits;
}

}  // namespace

double Model::loss(const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
                   const Eigen::VectorXi& y) const {
  if (x.rows() == 0) throw std::invalid_argument("loss of an empty batch");
  return cross_entropy(forward_probs(*this, params, x), y);
}

double Model::loss_grad(const Eigen::VectorXd& params,
                        const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                        Eigen::VectorXd& grad) const {
  if (x.rows() == 0) throw std::invalid_argument("gradient of an empty batch");
  const Eigen::Index n = x.rows();
  grad.setZero(param_count());

  Eigen::MatrixXd h;
  Eigen::MatrixXd probs = forward_probs(*this, params, x, &h);
  const double loss_value = cross_entropy(probs, y);

  // d(mean CE)/d(logits) = (probs - onehot) / n.
  for (Eigen::Index i = 0; i < n; ++i) probs(i, y(i)) -= 1.0;
  probs /= double(n);

  if (kind == ModelKind::Logistic) {
    double* at = grad.data();
    Eigen::Map<Eigen::MatrixXd>(at, classes, features) = probs.transpose() * x;
    Eigen::Map<Eigen::VectorXd>(at + classes * features, classes) =
        probs.colwise().sum();
  } else {
    const auto v = mlp_view(*this, params);
    const Eigen::MatrixXd gh = probs * v.w2;  // n x hidden
    const Eigen::MatrixXd ga1 =
        gh.array() * (1.0 - h.array().square());  // tanh'
    double* at = grad.data();
    Eigen::Map<Eigen::MatrixXd>(at, hidden, features) = ga1.transpose() * x;
    at += hidden * features;
    Eigen::Map<Eigen::VectorXd>(at, hidden) = ga1.colwise().sum();
    at += hidden;
    Eigen::Map<Eigen::MatrixXd>(at, classes, hidden) = probs.transpose() * h;
    at += classes * hidden;
    Eigen::Map<Eigen::VectorXd>(at, classes) = probs.colwise().sum();
  }
  return loss_value;
}

double Model::accuracy(const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
                       const Eigen::VectorXi& y) const {
  const Eigen::MatrixXd probs = forward_probs(*this, params, x);
  int hits = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best;
    probs.row(i).maxCoeff(&best);
    if (int(best) == y(i)) ++hits;
  }
  return double(hits) / double(x.rows());
}

Eigen::VectorXd local_update(const Model& model, Eigen::VectorXd params,
                             const LocalDataset& data, int epochs,
                             int batch_size, double lr, Rng& rng) {
  if (data.size() == 0) throw std::invalid_argument("empty local dataset");
  const int n = int(data.size());
  Eigen::VectorXd grad;
  for (int e = 0; e < epochs; ++e) {
    const std::vector<int> order = rng.permutation(n);
    for (int start = 0; start < n; start += batch_size) {
      const int len = std::min(batch_size, n - start);
      Eigen::MatrixXd bx(len, data.inputs.cols());
      Eigen::VectorXi by(len);
      for (int i = 0; i < len; ++i) {
        bx.row(i) = data.inputs.row(order[size_t(start + i)]);
        by(i) = data.labels(order[size_t(start + i)]);
      }
      const double value = model.loss_grad(params, bx, by, grad);
      if (!std::isfinite(value)) {
        throw std::runtime_error("non-finite local loss during SGD");
      }
      params -= lr * grad;
    }
  }
  return params;
}

Eigen::VectorXd fedavg_aggregate(
    const std::vector<std::pair<Eigen::VectorXd, double>>& locals) {
  if (locals.empty()) throw std::invalid_argument("nothing to aggregate");
  double total = 0.0;
  for (const auto& [params, weight] : locals) {
    if (params.size() != locals.front().first.size()) {
      throw std::invalid_argument("aggregation dimension mismatch");
    }
    total += weight;
  }
  if (total <= 0.0) throw std::invalid_argument("zero total aggregation weight");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(locals.front().first.size());
  for (const auto& [params, weight] : locals) out += (weight / total) * params;
  return out;
}

EvalResult global_loss(const Model& model, const Eigen::VectorXd& params,
                       const std::vector<LocalDataset>& datasets) {
  double total = 0.0;
  double loss = 0.0;
  double hits = 0.0;
  for (const auto& ds : datasets) {
    if (ds.size() == 0) continue;
    total += double(ds.size());
  }
  if (total <= 0.0) throw std::invalid_argument("no data to evaluate");
  for (const auto& ds : datasets) {
    if (ds.size() == 0) continue;
    const double w = double(ds.size()) / total;
    loss += w * model.loss(params, ds.inputs, ds.labels);
    hits += w * model.accuracy(params, ds.inputs, ds.labels);
  }
  return {loss, hits};
}

double global_grad_norm_sq(const Model& model, const Eigen::VectorXd& params,
                           const std::vector<LocalDataset>& datasets) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(model.param_count());
  Eigen::VectorXd grad;
  double weight = 0.0;
  for (const auto& ds : datasets) weight += double(ds.size());
  for (const auto& ds : datasets) {
    if (ds.size() == 0) continue;
    model.loss_grad(params, ds.inputs, ds.labels, grad);
    total += (double(ds.size()) / weight) * grad;
  }
  return total.squaredNorm();
}

GradDecayReport grad_norm_metric(const std::vector<double>& norm_sq_by_round,
                                 const std::vector<int>& checkpoints) {
  if (norm_sq_by_round.size() < 2) {
    throw std::invalid_argument("need >= 2 gradient-norm measurements");
  }
  GradDecayReport report;
  double running = 0.0;
  size_t consumed = 0;
  for (int cp : checkpoints) {
    const size_t upto = std::min(size_t(cp), norm_sq_by_round.size());
    while (consumed < upto) running += norm_sq_by_round[consumed++];
    if (consumed == 0) continue;
    report.checkpoint_averages.emplace_back(int(consumed),
                                            running / double(consumed));
  }
  if (report.checkpoint_averages.size() >= 2) {
    report.ratio = report.checkpoint_averages.back().second /
                   report.checkpoint_averages.front().second;
  }
  return report;
}

}  // namespace fedsched
