#include "fedsched/meta.hpp"

namespace fedsched {

double recost(const SchedulingPlan& plan, const JobSpec& job,
              const std::vector<DeviceProfile>& devices,
              const FrequencyVector& counts, int round, Omega omega,
              double time_scale) {
  return round_cost(plan, job, devices, counts, round, /*dynamic=*/true,
                    omega, time_scale)
      .weighted_total;
}

MetaGreedyScheduler::MetaGreedyScheduler(
    MetaParams params, std::vector<std::unique_ptr<Scheduler>> constituents)
    : cfg_(std::move(params)), constituents_(std::move(constituents)) {
  if (constituents_.empty()) {
    throw std::invalid_argument("meta-greedy needs at least one constituent");
  }
}

Scheduler* MetaGreedyScheduler::constituent(std::string_view method) {
  for (auto& c : constituents_) {
    if (c->name() == method) return c.get();
  }
  return nullptr;
}

std::optional<SchedulingPlan> MetaGreedyScheduler::schedule(
    const SchedulerContext& ctx) {
  last_candidates_.clear();
  last_method_.clear();

  for (auto& constituent : constituents_) {
    auto plan = constituent->schedule(ctx);
    if (!plan) continue;
    const double cost = recost(*plan, *ctx.job, *ctx.devices, *ctx.freqs,
                               ctx.round, cfg_.omega, ctx.time_scale);
    last_candidates_.push_back(
        {std::string(constituent->name()), std::move(*plan), cost});
  }
  if (last_candidates_.empty()) return std::nullopt;

  // Constituents ran in priority order, so strict less keeps the
  // higher-priority method on ties.
  const MetaCandidate* winner = &last_candidates_.front();
  for (const auto& candidate : last_candidates_) {
    if (candidate.recost < winner->recost) winner = &candidate;
  }
  last_method_ = winner->method;
  last_recost_ = winner->recost;
  return winner->plan;
}

void MetaGreedyScheduler::observe(const RoundFeedback& fb) {
  for (auto& constituent : constituents_) {
    if (auto* bods = dynamic_cast<BodsScheduler*>(constituent.get())) {
      // The GP only needs (plan, cost) pairs, so every executed round is
      // an observation for it, whoever produced the plan.
      bods->record(fb.plan, fb.realized_cost);
    } else if (constituent->name() == last_method_) {
      constituent->observe(fb);
    }
  }
}

}  // namespace fedsched
