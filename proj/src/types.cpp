#include "fedsched/types.hpp"

#include <algorithm>

namespace fedsched {

void DeviceProfile::validate(int num_jobs) const {
  if (a <= 0.0) {
    throw std::invalid_argument("device " + std::to_string(id) +
                                ": capability coefficient a must be > 0");
  }
  if (mu <= 0.0) {
    throw std::invalid_argument("device " + std::to_string(id) +
                                ": fluctuation mu must be > 0");
  }
  if (int(data_sizes.size()) != num_jobs) {
    throw std::invalid_argument("device " + std::to_string(id) +
                                ": expected one data size per job");
  }
  for (double d : data_sizes) {
    if (d < 0.0) {
      throw std::invalid_argument("device " + std::to_string(id) +
                                  ": negative data size");
    }
  }
}

void JobSpec::validate(int num_devices, bool curve_mode) const {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw std::invalid_argument("job " + std::to_string(id) +
                                ": fraction must be in (0, 1]");
  }
  if (plan_size(num_devices) < 1) {
    throw std::invalid_argument("job " + std::to_string(id) +
                                ": round(fraction * K) must be >= 1");
  }
  if (local_epochs < 1) {
    throw std::invalid_argument("job " + std::to_string(id) +
                                ": local_epochs must be >= 1");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("job " + std::to_string(id) +
                                ": batch_size must be >= 1");
  }
  if (gamma0 < 0.0 || gamma1 < 0.0 || gamma2 < 0.0) {
    throw std::invalid_argument("job " + std::to_string(id) +
                                ": loss-curve coefficients must be >= 0");
  }
  if (alpha < 0.0 || beta < 0.0) {
    throw std::invalid_argument("job " + std::to_string(id) +
                                ": cost weights must be >= 0");
  }
  if (round_cap < 1) {
    throw std::invalid_argument("job " + std::to_string(id) +
                                ": round_cap must be >= 1");
  }
  if (curve_mode && target_loss <= gamma2) {
    throw std::invalid_argument("job " + std::to_string(id) +
                                ": target_loss must exceed gamma2 (the loss "
                                "curve asymptote)");
  }
}

bool SchedulingPlan::contains(int device) const {
  return std::binary_search(devices.begin(), devices.end(), device);
}

void OccupancySet::occupy(const SchedulingPlan& plan) {
  for (int k : plan.devices) {
    if (occupied(k)) {
      throw std::invalid_argument(
          "device " + std::to_string(k) + " already occupied by job " +
          std::to_string(owner(k)));
    }
  }
  for (int k : plan.devices) owner_[size_t(k)] = plan.job;
  occupied_count_ += int(plan.devices.size());
}

void OccupancySet::release(const SchedulingPlan& plan) {
  for (int k : plan.devices) {
    if (owner_.at(size_t(k)) != plan.job) {
      throw std::invalid_argument(
          "device " + std::to_string(k) + " is not held by job " +
          std::to_string(plan.job));
    }
  }
  for (int k : plan.devices) owner_[size_t(k)] = -1;
  occupied_count_ -= int(plan.devices.size());
}

std::vector<int> OccupancySet::free_devices() const {
  std::vector<int> free;
  free.reserve(owner_.size());
  for (int k = 0; k < int(owner_.size()); ++k) {
    if (owner_[size_t(k)] < 0) free.push_back(k);
  }
  return free;
}

FrequencyVector update_frequency(const FrequencyVector& counts,
                                 const SchedulingPlan& plan) {
  FrequencyVector next = counts;
  for (int k : plan.devices) {
    if (k < 0 || k >= counts.size()) {
      throw std::invalid_argument("plan device " + std::to_string(k) +
                                  " out of range");
    }
    next[k] += 1;
  }
  return next;
}

void validate_plan(const SchedulingPlan& plan, int num_devices,
                   int expected_size) {
  if (int(plan.devices.size()) != expected_size) {
    throw std::invalid_argument(
        "plan for job " + std::to_string(plan.job) + " has size " +
        std::to_string(plan.devices.size()) + ", expected " +
        std::to_string(expected_size));
  }
  for (size_t i = 0; i < plan.devices.size(); ++i) {
    const int k = plan.devices[i];
    if (k < 0 || k >= num_devices) {
      throw std::invalid_argument("plan device " + std::to_string(k) +
                                  " out of range");
    }
    if (i > 0 && plan.devices[i - 1] >= k) {
      throw std::invalid_argument("plan devices must be strictly ascending");
    }
  }
}

}  // namespace fedsched
