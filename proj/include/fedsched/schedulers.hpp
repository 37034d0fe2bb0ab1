#pragma once

#include "fedsched/cost.hpp"

#include <memory>
#include <optional>
#include <string_view>

namespace fedsched {

/// Everything a scheduling method sees when asked for a plan. `free` is
/// K \ V_o, sorted ascending. `cross_cost` is the (candidate-independent)
/// sum of the other jobs' in-use round costs, so candidate evaluations
/// reproduce the Eq.-8 total.
struct SchedulerContext {
  const JobSpec* job = nullptr;
  int round = 1;
  const std::vector<DeviceProfile>* devices = nullptr;
  std::vector<int> free;
  const FrequencyVector* freqs = nullptr;
  const FrequencyVector* fleet_freqs = nullptr;  // Sum over jobs; may be null.
  double time_scale = 1.0;
  double cross_cost = 0.0;
  Rng* rng = nullptr;

  int plan_size() const { return job->plan_size(int(devices->size())); }
  bool feasible() const { return int(free.size()) >= plan_size(); }
};

/// Realized outcome of an executed round, fed back to learning methods.
struct RoundFeedback {
  SchedulingPlan plan;
  double realized_cost = 0.0;  // Eq.-8 total with the sampled wall time
};

/// Static (Eq. 2) candidate cost: this job's round cost plus the fixed
/// cross-job term.
double candidate_cost(const SchedulerContext& ctx, const SchedulingPlan& plan);

SchedulingPlan make_plan(const SchedulerContext& ctx, std::vector<int> devices);

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string_view name() const = 0;
  /// nullopt means "wait": not enough free devices right now.
  virtual std::optional<SchedulingPlan> schedule(const SchedulerContext& ctx) = 0;
  virtual void observe(const RoundFeedback&) {}
};

/// Uniform sample without replacement from the free set.
class RandomScheduler : public Scheduler {
 public:
  std::string_view name() const override { return "random"; }
  std::optional<SchedulingPlan> schedule(const SchedulerContext& ctx) override;
};

/// The plan-size fastest free devices by expected time, ties to lower id.
class GreedyScheduler : public Scheduler {
 public:
  std::string_view name() const override { return "greedy"; }
  std::optional<SchedulingPlan> schedule(const SchedulerContext& ctx) override;
};

/// Deadline-filtered random selection: shuffled free devices under the
/// deadline first, fastest remaining as filler.
class FedCsScheduler : public Scheduler {
 public:
  /// deadline = fleet median expected time * deadline_factor; an explicit
  /// deadline > 0 overrides the derived one.
  explicit FedCsScheduler(double deadline_factor = 1.5,
                          double explicit_deadline = 0.0)
      : deadline_factor_(deadline_factor),
        explicit_deadline_(explicit_deadline) {}

  std::string_view name() const override { return "fedcs"; }
  std::optional<SchedulingPlan> schedule(const SchedulerContext& ctx) override;

  double deadline_for(const SchedulerContext& ctx) const;

 private:
  double deadline_factor_;
  double explicit_deadline_;
};

struct GaParams {
  int population = 30;
  int generations = 30;
  double mutation_prob = 0.1;
  int tournament = 2;
};

/// Fixed-size-subset genetic search over plans, fitness = -candidate_cost.
class GeneticScheduler : public Scheduler {
 public:
  explicit GeneticScheduler(GaParams params = {}) : params_(params) {}

  std::string_view name() const override { return "genetic"; }
  std::optional<SchedulingPlan> schedule(const SchedulerContext& ctx) override;

 private:
  GaParams params_;
};

}  // namespace fedsched
