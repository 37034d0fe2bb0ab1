#pragma once

#include "fedsched/rng.hpp"
#include "fedsched/types.hpp"

#include <span>
#include <string_view>

namespace fedsched {

/// Round-dependent scaling of the fairness weight in the dynamic cost.
enum class Omega { Sqrt, Linear, Log };

double omega_value(Omega omega, int round);
std::string_view omega_name(Omega omega);

struct CostBreakdown {
  double time_term = 0.0;       // slowest expected device time / time_scale
  double fairness_term = 0.0;   // population variance of the post-plan counts
  double beta_eff = 0.0;        // beta, or beta * Omega(r) when dynamic
  double weighted_total = 0.0;  // alpha * time_term + beta_eff * fairness_term
};

/// One sampled round duration for a device: the deterministic minimum
/// tau*a*D plus an exponential tail with rate mu/(tau*D).
double sample_device_time(const DeviceProfile& dev, const JobSpec& job,
                          Rng& rng);

/// Analytic mean of sample_device_time: tau*a*D + tau*D/mu.
double expected_device_time(const DeviceProfile& dev, const JobSpec& job);

/// Round duration: the slowest member of a nonempty plan.
double round_time(std::span<const double> member_times);

/// Population variance of the counts after hypothetically applying the
/// candidate plan. The input frequencies are not modified.
double fairness_cost(const FrequencyVector& counts,
                     const SchedulingPlan& candidate);

/// Eq.-2 style round cost for one job; dynamic=true applies the
/// Omega(round) fairness scaling. time_scale divides the time term so the
/// two terms live on comparable scales (1.0 = raw time units).
CostBreakdown round_cost(const SchedulingPlan& plan, const JobSpec& job,
                         const std::vector<DeviceProfile>& devices,
                         const FrequencyVector& counts, int round,
                         bool dynamic, Omega omega = Omega::Sqrt,
                         double time_scale = 1.0);

/// Sum of per-job round costs for one plan per job. Plans must be
/// pairwise disjoint over devices.
double total_cost(const std::vector<SchedulingPlan>& plans,
                  const std::vector<JobSpec>& jobs,
                  const std::vector<DeviceProfile>& devices,
                  const std::vector<FrequencyVector>& counts, int round,
                  bool dynamic, Omega omega = Omega::Sqrt,
                  std::span<const double> time_scales = {});

/// Parametric loss curve 1/(g0*r + g1) + g2.
double loss_estimate(double round, double gamma0, double gamma1,
                     double gamma2);

/// Smallest round count with loss_estimate <= target (at least 1).
int invert_loss_curve(const JobSpec& job);

/// Round cap: ceil(1.3 * invert_loss_curve), at least 1.
int estimate_round_cap(const JobSpec& job);

/// Fleet mean of expected_device_time for one job; the default time_scale.
double mean_expected_time(const std::vector<DeviceProfile>& devices,
                          const JobSpec& job);

}  // namespace fedsched
