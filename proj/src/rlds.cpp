#include "fedsched/rlds.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>
#include <iostream>

namespace fedsched {

namespace {

/// (x - min) / (max - min), or zeros when the range collapses.
Eigen::VectorXd min_max(const Eigen::VectorXd& x) {
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  if (hi <= lo) return Eigen::VectorXd::Zero(x.size());
  return (x.array() - lo) / (hi - lo);
}

}  // namespace

Eigen::MatrixXd encode_state(const SchedulerContext& ctx) {
  const int k = int(ctx.devices->size());
  Eigen::VectorXd times(k);
  for (int i = 0; i < k; ++i) {
    times(i) = expected_device_time((*ctx.devices)[size_t(i)], *ctx.job);
  }
  Eigen::VectorXd avail = Eigen::VectorXd::Zero(k);
  for (int i : ctx.free) avail(i) = 1.0;
  const Eigen::VectorXd own = ctx.freqs->cast<double>();
  const Eigen::VectorXd fleet =
      ctx.fleet_freqs ? ctx.fleet_freqs->cast<double>().eval() : own;

  Eigen::MatrixXd features(k, kPolicyFeatureCount);
  features.col(0) = min_max(times);
  features.col(1) = avail;
  features.col(2) = min_max(own);
  features.col(3) = min_max(fleet);
  return features;
}

std::optional<SchedulingPlan> convert_probs(const Eigen::VectorXd& probs,
                                            const SchedulerContext& ctx,
                                            double epsilon) {
  if (!ctx.feasible()) return std::nullopt;
  const int size = ctx.plan_size();
  if (ctx.rng->uniform() < epsilon) {
    return make_plan(ctx, ctx.rng->sample_without_replacement(ctx.free, size));
  }
  std::vector<int> order = ctx.free;
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    if (probs(lhs) != probs(rhs)) return probs(lhs) > probs(rhs);
    return lhs < rhs;
  });
  order.resize(size_t(size));
  return make_plan(ctx, std::move(order));
}

RldsScheduler::RldsScheduler(RldsParams params, std::uint64_t init_seed)
    : cfg_(params), epsilon_(params.eps_start) {
  Rng rng(init_seed);
  theta_ = PolicyParams::init(cfg_.hidden, kPolicyFeatureCount, rng);
}

RldsScheduler::RldsScheduler(RldsParams params, PolicyParams pretrained)
    : cfg_(params), theta_(std::move(pretrained)), epsilon_(params.eps_start) {
  if (theta_.features != kPolicyFeatureCount) {
    throw std::invalid_argument("loaded policy has the wrong feature count");
  }
}

std::optional<SchedulingPlan> RldsScheduler::schedule(
    const SchedulerContext& ctx) {
  if (!ctx.feasible()) return std::nullopt;
  const Eigen::MatrixXd features = encode_state(ctx);
  const Eigen::VectorXd probs = policy_forward(theta_, features);
  auto plan = convert_probs(probs, ctx, epsilon_);
  epsilon_ = std::max(cfg_.eps_min, epsilon_ * cfg_.eps_decay);
  if (plan) {
    last_features_ = features;
    last_selected_ = plan->devices;
    pending_ = true;
  }
  return plan;
}

void RldsScheduler::observe(const RoundFeedback& fb) {
  if (!pending_) return;
  pending_ = false;
  reinforce_update(
      {ReinforceSample{last_selected_, last_features_, -fb.realized_cost}});
}

void RldsScheduler::reinforce_update(const std::vector<ReinforceSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty reinforce batch");
  const double n = double(batch.size());

  double reward_sum = 0.0;
  for (const auto& sample : batch) reward_sum += sample.reward;
  // Batched updates center the advantage on the batch mean, which sums to
  // zero and keeps the output bias from drifting when the cost level
  // itself trends; single-sample updates fall back to the running
  // baseline.
  const double center = batch.size() > 1 ? reward_sum / n : baseline_;

  PolicyParams step = PolicyParams::zeros(theta_.hidden, theta_.features);
  for (const auto& sample : batch) {
    const double advantage = sample.reward - center;
    if (advantage != 0.0) {
      step.add_scaled(grad_log_prob(theta_, sample.features, sample.selected),
                      advantage / n);
    }
  }

  const double norm = std::sqrt(step.squared_norm());
  if (!std::isfinite(norm)) {
    std::cerr << "rlds: non-finite policy gradient, update skipped\n";
  } else {
    const double scale =
        norm > cfg_.clip_norm ? cfg_.clip_norm / norm : 1.0;
    theta_.add_scaled(step, cfg_.eta * scale);
  }
  baseline_ = (1.0 - cfg_.baseline_gamma) * baseline_ +
              cfg_.baseline_gamma * (reward_sum / n);
}

void RldsScheduler::pretrain(const std::vector<DeviceProfile>& devices,
                             const JobSpec& job, double time_scale, Rng& rng) {
  const double online_eta = cfg_.eta;
  if (cfg_.pretrain_eta > 0.0) cfg_.eta = cfg_.pretrain_eta;
  const int k = int(devices.size());
  FrequencyVector counts = FrequencyVector::Zero(k);
  std::vector<int> all(static_cast<size_t>(k));
  std::iota(all.begin(), all.end(), 0);

  baseline_ = 0.0;
  for (int round = 1; round <= cfg_.pretrain_rounds; ++round) {
    SchedulerContext ctx;
    ctx.job = &job;
    ctx.round = round;
    ctx.devices = &devices;
    ctx.free = all;
    ctx.freqs = &counts;
    ctx.time_scale = time_scale;
    ctx.rng = &rng;

    const Eigen::MatrixXd features = encode_state(ctx);
    const Eigen::VectorXd probs = policy_forward(theta_, features);

    std::vector<ReinforceSample> batch;
    batch.reserve(size_t(cfg_.pretrain_batch));
    const SchedulingPlan* best = nullptr;
    double best_cost = 0.0;
    std::vector<SchedulingPlan> plans;
    plans.reserve(size_t(cfg_.pretrain_batch));
    for (int i = 0; i < cfg_.pretrain_batch; ++i) {
      auto plan = convert_probs(probs, ctx, epsilon_);
      const double cost = candidate_cost(ctx, *plan);
      plans.push_back(std::move(*plan));
      batch.push_back({plans.back().devices, features, -cost});
      if (!best || cost < best_cost) {
        best = &plans.back();
        best_cost = cost;
      }
    }
    epsilon_ = std::max(cfg_.eps_min, epsilon_ * cfg_.eps_decay);
    reinforce_update(batch);
    counts = update_frequency(counts, *best);
  }
  cfg_.eta = online_eta;
  baseline_ = 0.0;  // fresh baseline for the online phase
}

}  // namespace fedsched
