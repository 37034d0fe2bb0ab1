#include "fedsched/bods.hpp"

#include <cmath>

namespace fedsched {

Eigen::VectorXd BodsScheduler::encode(const SchedulingPlan& plan) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_devices_);
  for (int k : plan.devices) v(k) = 1.0;
  return v;
}

Eigen::VectorXd BodsScheduler::embed(const Eigen::VectorXd& plan_vector) const {
  if (device_weights_.size() != plan_vector.size()) return plan_vector;
  return plan_vector.cwiseProduct(device_weights_);
}

void BodsScheduler::record(const SchedulingPlan& plan, double cost) {
  observations_.push_back({encode(plan), cost});
  while (int(observations_.size()) > params_.window) observations_.pop_front();
}

std::optional<SchedulingPlan> BodsScheduler::schedule(
    const SchedulerContext& ctx) {
  if (!ctx.feasible()) return std::nullopt;
  const int size = ctx.plan_size();

  if (device_weights_.size() != num_devices_) {
    device_weights_ = Eigen::VectorXd::Ones(num_devices_);
    double sum = 0.0;
    int eligible = 0;
    for (const auto& dev : *ctx.devices) {
      if (dev.data_sizes.at(size_t(ctx.job->id)) <= 0.0) continue;
      device_weights_(dev.id) = expected_device_time(dev, *ctx.job);
      sum += device_weights_(dev.id);
      ++eligible;
    }
    if (eligible > 0) device_weights_ *= double(eligible) / sum;
  }

  if (int(observations_.size()) < params_.n_init) {
    return make_plan(ctx, ctx.rng->sample_without_replacement(ctx.free, size));
  }

  const int n = int(observations_.size());
  Eigen::MatrixXd x(n, num_devices_);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x.row(i) = embed(observations_[size_t(i)].plan_vector);
    y(i) = observations_[size_t(i)].cost;
  }

  const double mean = y.mean();
  double signal_var = (y.array() - mean).square().sum() / double(n);
  if (signal_var <= 0.0) signal_var = 1.0;  // all costs identical so far
  const double lengthscale = std::sqrt(double(size));
  GaussianProcess gp(std::move(x), std::move(y), lengthscale, signal_var,
                     params_.jitter_ratio * signal_var);

  double incumbent = observations_.front().cost;
  for (const auto& obs : observations_) incumbent = std::min(incumbent, obs.cost);

  SchedulingPlan chosen;
  double best_ei = -1.0;
  for (int c = 0; c < params_.n_candidates; ++c) {
    SchedulingPlan candidate =
        make_plan(ctx, ctx.rng->sample_without_replacement(ctx.free, size));
    const double ei = expected_improvement(
        gp.predict(embed(encode(candidate))), incumbent);
    if (ei > best_ei) {
      best_ei = ei;
      chosen = std::move(candidate);
    }
  }
  return chosen;
}

}  // namespace fedsched
