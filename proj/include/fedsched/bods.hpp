#pragma once

#include "fedsched/gp.hpp"
#include "fedsched/schedulers.hpp"

#include <deque>

namespace fedsched {

struct BodsParams {
  int n_init = 8;         // bootstrap observations before the GP kicks in
  int n_candidates = 64;  // random feasible plans scored per round
  int window = 256;       // most recent observations kept for the fit
  double jitter_ratio = 1e-6;  // jitter = ratio * signal variance
};

struct Observation {
  Eigen::VectorXd plan_vector;  // length-K binary indicator
  double cost = 0.0;
};

/// Bayesian-optimization scheduling: random bootstrap plans first, then a
/// Matern GP over plan indicators with expected-improvement selection
/// among randomly drawn feasible candidates.
class BodsScheduler : public Scheduler {
 public:
  explicit BodsScheduler(int num_devices, BodsParams params = {})
      : num_devices_(num_devices), params_(params) {}

  std::string_view name() const override { return "bods"; }
  std::optional<SchedulingPlan> schedule(const SchedulerContext& ctx) override;
  void observe(const RoundFeedback& fb) override { record(fb.plan, fb.realized_cost); }

  /// Add one (plan, realized cost) pair; under Meta-Greedy this also runs
  /// for plans other methods produced.
  void record(const SchedulingPlan& plan, double cost);

  const std::deque<Observation>& observations() const { return observations_; }

  Eigen::VectorXd encode(const SchedulingPlan& plan) const;

 private:
  /// Kernel embedding of an indicator vector. Coordinates are scaled by
  /// each device's mean-normalized expected time, so plans that differ in
  /// slow devices sit far apart: raw Hamming distance is almost constant
  /// across random subset pairs of a large fleet and carries no cost
  /// structure.
  Eigen::VectorXd embed(const Eigen::VectorXd& plan_vector) const;

  int num_devices_;
  BodsParams params_;
  std::deque<Observation> observations_;
  Eigen::VectorXd device_weights_;  // set from the first context seen
};

}  // namespace fedsched
