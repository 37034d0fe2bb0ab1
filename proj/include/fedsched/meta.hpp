#pragma once

#include "fedsched/bods.hpp"
#include "fedsched/rlds.hpp"

#include <memory>

namespace fedsched {

/// Dynamic per-job cost (Eq.-13 shape): alpha * time + beta * Omega(r) * fairness.
double recost(const SchedulingPlan& plan, const JobSpec& job,
              const std::vector<DeviceProfile>& devices,
              const FrequencyVector& counts, int round, Omega omega,
              double time_scale);

struct MetaCandidate {
  std::string method;
  SchedulingPlan plan;
  double recost = 0.0;
};

struct MetaParams {
  // Constituents in tie-break priority order.
  std::vector<std::string> methods = {"bods", "rlds", "genetic",
                                      "greedy", "fedcs", "random"};
  Omega omega = Omega::Sqrt;
};

/// Runs every enabled constituent on the same context each round and
/// executes the candidate with the smallest dynamic cost. Only the winning
/// method receives reward feedback; BODS records every executed
/// (plan, cost) pair regardless of who produced it.
class MetaGreedyScheduler : public Scheduler {
 public:
  MetaGreedyScheduler(MetaParams params,
                      std::vector<std::unique_ptr<Scheduler>> constituents);

  std::string_view name() const override { return "meta-greedy"; }
  std::optional<SchedulingPlan> schedule(const SchedulerContext& ctx) override;
  void observe(const RoundFeedback& fb) override;

  const std::vector<MetaCandidate>& last_candidates() const {
    return last_candidates_;
  }
  const std::string& last_selected_method() const { return last_method_; }
  double last_selected_recost() const { return last_recost_; }

  Scheduler* constituent(std::string_view method);

 private:
  MetaParams cfg_;
  std::vector<std::unique_ptr<Scheduler>> constituents_;
  std::vector<MetaCandidate> last_candidates_;
  std::string last_method_;
  double last_recost_ = 0.0;
};

}  // namespace fedsched
