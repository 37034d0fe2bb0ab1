#include "fedsched/schedulers.hpp"

#include <algorithm>
#include <cmath>

namespace fedsched {

double candidate_cost(const SchedulerContext& ctx, const SchedulingPlan& plan) {
  return round_cost(plan, *ctx.job, *ctx.devices, *ctx.freqs, ctx.round,
                    /*dynamic=*/false, Omega::Sqrt, ctx.time_scale)
             .weighted_total +
         ctx.cross_cost;
}

SchedulingPlan make_plan(const SchedulerContext& ctx,
                         std::vector<int> devices) {
  std::sort(devices.begin(), devices.end());
  return SchedulingPlan{ctx.job->id, ctx.round, std::move(devices)};
}

std::optional<SchedulingPlan> RandomScheduler::schedule(
    const SchedulerContext& ctx) {
  if (!ctx.feasible()) return std::nullopt;
  return make_plan(ctx,
                   ctx.rng->sample_without_replacement(ctx.free,
                                                       ctx.plan_size()));
}

namespace {

/// Free device ids ordered by expected time ascending, id as tiebreak.
std::vector<int> by_expected_time(const SchedulerContext& ctx) {
  std::vector<int> order = ctx.free;
  std::vector<double> t(ctx.devices->size(), 0.0);
  for (int k : order) {
    t[size_t(k)] = expected_device_time((*ctx.devices)[size_t(k)], *ctx.job);
  }
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    if (t[size_t(lhs)] != t[size_t(rhs)]) return t[size_t(lhs)] < t[size_t(rhs)];
    return lhs < rhs;
  });
  return order;
}

}  // namespace

std::optional<SchedulingPlan> GreedyScheduler::schedule(
    const SchedulerContext& ctx) {
  if (!ctx.feasible()) return std::nullopt;
  std::vector<int> order = by_expected_time(ctx);
  order.resize(size_t(ctx.plan_size()));
  return make_plan(ctx, std::move(order));
}

double FedCsScheduler::deadline_for(const SchedulerContext& ctx) const {
  if (explicit_deadline_ > 0.0) return explicit_deadline_;
  std::vector<double> t;
  t.reserve(ctx.devices->size());
  for (const auto& dev : *ctx.devices) {
    t.push_back(expected_device_time(dev, *ctx.job));
  }
  std::sort(t.begin(), t.end());
  const size_t n = t.size();
  const double median =
      n % 2 == 1 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
  return median * deadline_factor_;
}

std::optional<SchedulingPlan> FedCsScheduler::schedule(
    const SchedulerContext& ctx) {
  if (!ctx.feasible()) return std::nullopt;
  const int size = ctx.plan_size();
  const double deadline = deadline_for(ctx);

  std::vector<int> shuffled = ctx.free;
  ctx.rng->shuffle(shuffled);

  std::vector<int> chosen;
  std::vector<int> over;
  chosen.reserve(size_t(size));
  for (int k : shuffled) {
    if (int(chosen.size()) == size) break;
    if (expected_device_time((*ctx.devices)[size_t(k)], *ctx.job) <= deadline) {
      chosen.push_back(k);
    } else {
      over.push_back(k);
    }
  }
  if (int(chosen.size()) < size) {
    // Not enough under the deadline; fill with the fastest of the rest.
    for (int k : shuffled) {
      if (int(chosen.size()) >= size) break;
      if (std::find(chosen.begin(), chosen.end(), k) == chosen.end() &&
          std::find(over.begin(), over.end(), k) == over.end()) {
        over.push_back(k);
      }
    }
    std::stable_sort(over.begin(), over.end(), [&](int lhs, int rhs) {
      const double tl = expected_device_time((*ctx.devices)[size_t(lhs)], *ctx.job);
      const double tr = expected_device_time((*ctx.devices)[size_t(rhs)], *ctx.job);
      if (tl != tr) return tl < tr;
      return lhs < rhs;
    });
    for (int k : over) {
      if (int(chosen.size()) == size) break;
      chosen.push_back(k);
    }
  }
  return make_plan(ctx, std::move(chosen));
}

namespace {

struct Individual {
  std::vector<int> devices;  // sorted
  double cost = 0.0;
};

Individual evaluate(const SchedulerContext& ctx, std::vector<int> devices) {
  std::sort(devices.begin(), devices.end());
  SchedulingPlan plan{ctx.job->id, ctx.round, devices};
  const double cost = candidate_cost(ctx, plan);
  return Individual{std::move(devices), cost};
}

std::vector<int> random_subset(const SchedulerContext& ctx, int size) {
  return ctx.rng->sample_without_replacement(ctx.free, size);
}

/// Keep the intersection, fill the remaining slots from the shuffled
/// symmetric difference.
std::vector<int> crossover(const Individual& a, const Individual& b, int size,
                           Rng& rng) {
  std::vector<int> common;
  std::vector<int> rest;
  std::set_intersection(a.devices.begin(), a.devices.end(),
                        b.devices.begin(), b.devices.end(),
                        std::back_inserter(common));
  std::set_symmetric_difference(a.devices.begin(), a.devices.end(),
                                b.devices.begin(), b.devices.end(),
                                std::back_inserter(rest));
  rng.shuffle(rest);
  std::vector<int> child = common;
  for (int k : rest) {
    if (int(child.size()) == size) break;
    child.push_back(k);
  }
  return child;
}

void mutate(std::vector<int>& child, const SchedulerContext& ctx,
            double pmut) {
  for (size_t i = 0; i < child.size(); ++i) {
    if (ctx.rng->uniform() >= pmut) continue;
    // Swap this member for a uniformly chosen free non-member.
    std::vector<int> outside;
    outside.reserve(ctx.free.size());
    for (int k : ctx.free) {
      if (std::find(child.begin(), child.end(), k) == child.end()) {
        outside.push_back(k);
      }
    }
    if (outside.empty()) return;
    child[i] = outside[size_t(ctx.rng->uniform_int(int(outside.size())))];
  }
}

}  // namespace

std::optional<SchedulingPlan> GeneticScheduler::schedule(
    const SchedulerContext& ctx) {
  if (!ctx.feasible()) return std::nullopt;
  const int size = ctx.plan_size();

  std::vector<Individual> pop;
  pop.reserve(size_t(params_.population));
  for (int i = 0; i < params_.population; ++i) {
    pop.push_back(evaluate(ctx, random_subset(ctx, size)));
  }
  auto better = [](const Individual& lhs, const Individual& rhs) {
    return lhs.cost < rhs.cost;
  };
  Individual best = *std::min_element(pop.begin(), pop.end(), better);

  auto tournament = [&]() -> const Individual& {
    const Individual* winner =
        &pop[size_t(ctx.rng->uniform_int(int(pop.size())))];
    for (int i = 1; i < params_.tournament; ++i) {
      const Individual& contender =
          pop[size_t(ctx.rng->uniform_int(int(pop.size())))];
      if (contender.cost < winner->cost) winner = &contender;
    }
    return *winner;
  };

  for (int gen = 0; gen < params_.generations; ++gen) {
    std::vector<Individual> next;
    next.reserve(pop.size());
    next.push_back(best);  // elitism of 1
    while (int(next.size()) < params_.population) {
      const Individual& pa = tournament();
      const Individual& pb = tournament();
      std::vector<int> child = crossover(pa, pb, size, *ctx.rng);
      mutate(child, ctx, params_.mutation_prob);
      next.push_back(evaluate(ctx, std::move(child)));
    }
    pop = std::move(next);
    const Individual& gen_best =
        *std::min_element(pop.begin(), pop.end(), better);
    if (gen_best.cost < best.cost) best = gen_best;
  }
  return make_plan(ctx, best.devices);
}

}  // namespace fedsched
