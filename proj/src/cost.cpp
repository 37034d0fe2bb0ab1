#include "fedsched/cost.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fedsched {

double omega_value(Omega omega, int round) {
  if (round < 1) throw std::invalid_argument("round must be >= 1");
  switch (omega) {
    case Omega::Sqrt:
      return std::sqrt(double(round));
    case Omega::Linear:
      return double(round);
    case Omega::Log:
      return std::log(double(round));
  }
  throw std::logic_error("unknown omega");
}

std::string_view omega_name(Omega omega) {
  switch (omega) {
    case Omega::Sqrt:
      return "sqrt";
    case Omega::Linear:
      return "linear";
    case Omega::Log:
      return "log";
  }
  throw std::logic_error("unknown omega");
}

namespace {

double device_data(const DeviceProfile& dev, const JobSpec& job) {
  const double d = dev.data_sizes.at(size_t(job.id));
  if (d <= 0.0) {
    throw std::invalid_argument("device " + std::to_string(dev.id) +
                                " holds no data for job " +
                                std::to_string(job.id));
  }
  return d;
}

}  // namespace

double sample_device_time(const DeviceProfile& dev, const JobSpec& job,
                          Rng& rng) {
  const double d = device_data(dev, job);
  const double tau_d = double(job.local_epochs) * d;
  const double shift = tau_d * dev.a;
  return shift + rng.exponential(dev.mu / tau_d);
}

double expected_device_time(const DeviceProfile& dev, const JobSpec& job) {
  const double d = device_data(dev, job);
  const double tau_d = double(job.local_epochs) * d;
  return tau_d * dev.a + tau_d / dev.mu;
}

double round_time(std::span<const double> member_times) {
  if (member_times.empty()) {
    throw std::invalid_argument("round time of an empty plan");
  }
  return *std::max_element(member_times.begin(), member_times.end());
}

double fairness_cost(const FrequencyVector& counts,
                     const SchedulingPlan& candidate) {
  const FrequencyVector post = update_frequency(counts, candidate);
  const Eigen::ArrayXd c = post.cast<double>().array();
  const double mean = c.mean();
  return (c - mean).square().mean();
}

CostBreakdown round_cost(const SchedulingPlan& plan, const JobSpec& job,
                         const std::vector<DeviceProfile>& devices,
                         const FrequencyVector& counts, int round,
                         bool dynamic, Omega omega, double time_scale) {
  if (plan.devices.empty()) {
    throw std::invalid_argument("round cost of an empty plan");
  }
  double slowest = 0.0;
  for (int k : plan.devices) {
    slowest = std::max(slowest, expected_device_time(devices.at(size_t(k)), job));
  }
  CostBreakdown out;
  out.time_term = slowest / time_scale;
  out.fairness_term = fairness_cost(counts, plan);
  out.beta_eff = dynamic ? job.beta * omega_value(omega, round) : job.beta;
  out.weighted_total = job.alpha * out.time_term + out.beta_eff * out.fairness_term;
  return out;
}

double total_cost(const std::vector<SchedulingPlan>& plans,
                  const std::vector<JobSpec>& jobs,
                  const std::vector<DeviceProfile>& devices,
                  const std::vector<FrequencyVector>& counts, int round,
                  bool dynamic, Omega omega,
                  std::span<const double> time_scales) {
  std::set<int> seen;
  for (const auto& plan : plans) {
    for (int k : plan.devices) {
      if (!seen.insert(k).second) {
        throw std::invalid_argument("plans overlap on device " +
                                    std::to_string(k));
      }
    }
  }
  double sum = 0.0;
  for (size_t i = 0; i < plans.size(); ++i) {
    const int m = plans[i].job;
    const double scale = time_scales.empty() ? 1.0 : time_scales[size_t(m)];
    sum += round_cost(plans[i], jobs.at(size_t(m)), devices,
                      counts.at(size_t(m)), round, dynamic, omega, scale)
               .weighted_total;
  }
  return sum;
}

double loss_estimate(double round, double gamma0, double gamma1,
                     double gamma2) {
  const double denom = gamma0 * round + gamma1;
  if (denom <= 0.0) {
    throw std::invalid_argument("degenerate loss curve: gamma0*r + gamma1 <= 0");
  }
  return 1.0 / denom + gamma2;
}

int invert_loss_curve(const JobSpec& job) {
  if (job.target_loss <= job.gamma2) {
    throw std::invalid_argument("job " + std::to_string(job.id) +
                                ": target loss is at or below the curve "
                                "asymptote gamma2");
  }
  const double needed = 1.0 / (job.target_loss - job.gamma2) - job.gamma1;
  if (job.gamma0 <= 0.0) {
    if (needed > 0.0) {
      throw std::invalid_argument("job " + std::to_string(job.id) +
                                  ": gamma0 = 0 and the target loss is below "
                                  "the flat curve value");
    }
    return 1;
  }
  return std::max(1, int(std::ceil(needed / job.gamma0)));
}

int estimate_round_cap(const JobSpec& job) {
  const int base = invert_loss_curve(job);
  return std::max(1, int(std::ceil(1.3 * double(base))));
}

double mean_expected_time(const std::vector<DeviceProfile>& devices,
                          const JobSpec& job) {
  double sum = 0.0;
  for (const auto& dev : devices) sum += expected_device_time(dev, job);
  return sum / double(devices.size());
}

}  // namespace fedsched
