#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsched {

/// Per-device participation counts s_{k,m} for one job.
using FrequencyVector = Eigen::VectorXi;

/// One edge device: capability coefficients of the shift-exponential time
/// model plus its per-job local dataset sizes.
struct DeviceProfile {
  int id = 0;
  double a = 0.0;                   // time units per epoch per sample, > 0
  double mu = 0.0;                  // capability fluctuation, > 0
  std::vector<double> data_sizes;   // D_k^m, one entry per job

  void validate(int num_jobs) const;
};

enum class ModelKind { Logistic, Mlp };
enum class PartitionMode { Iid, NonIid };
enum class LrSchedule { Constant, InvSqrt };

/// Mini-FL training knobs for one job. Unused in curve mode.
struct FlJobConfig {
  ModelKind model = ModelKind::Logistic;
  int features = 20;
  int classes = 10;
  int hidden = 16;           // MLP only
  double separation = 3.0;   // class-center spread of the synthetic blobs
  int samples = 2000;        // total synthetic samples for the job
  PartitionMode partition = PartitionMode::Iid;
  int shards_per_class = 20; // non-IID sharding constant
  double lr = 0.1;
  LrSchedule lr_schedule = LrSchedule::Constant;
  double target_accuracy = 0.0;  // 0 disables the accuracy stop rule
};

struct JobSpec {
  int id = 0;
  double fraction = 0.1;     // C_m in (0, 1]
  int local_epochs = 1;      // tau_m
  int batch_size = 32;       // d_k^m, mini-FL mode
  double gamma0 = 1.0;       // loss-curve coefficients, all >= 0
  double gamma1 = 1.0;
  double gamma2 = 0.0;
  double target_loss = 0.1;  // l_m
  double alpha = 1.0;        // time-cost weight
  double beta = 1.0;         // fairness-cost weight
  int round_cap = 1;         // R_m
  FlJobConfig fl;

  /// round(C_m * K), half-up.
  int plan_size(int num_devices) const {
    return int(std::floor(fraction * num_devices + 0.5));
  }

  void validate(int num_devices, bool curve_mode) const;
};

/// The device subset V_m^r assigned to one job for one round. Devices are
/// kept sorted by id and contain no duplicates.
struct SchedulingPlan {
  int job = 0;
  int round = 1;
  std::vector<int> devices;

  bool contains(int device) const;
};

/// Tracks which device is held by which job. At any instant a device
/// belongs to at most one job.
class OccupancySet {
 public:
  explicit OccupancySet(int num_devices) : owner_(size_t(num_devices), -1) {}

  bool occupied(int device) const { return owner_.at(size_t(device)) >= 0; }
  int owner(int device) const { return owner_.at(size_t(device)); }
  int count() const { return occupied_count_; }
  int size() const { return int(owner_.size()); }

  void occupy(const SchedulingPlan& plan);
  void release(const SchedulingPlan& plan);

  /// Device ids not held by any job, ascending.
  std::vector<int> free_devices() const;

 private:
  std::vector<int> owner_;
  int occupied_count_ = 0;
};

/// Per-round record emitted by the simulator.
struct RoundTrace {
  int job = 0;
  int round = 0;
  SchedulingPlan plan;
  double wall_time = 0.0;      // max sampled device time in the plan
  double time_cost = 0.0;      // scheduler-side (expected, normalized) term
  double fairness_cost = 0.0;
  double beta_eff = 0.0;
  double total_cost = 0.0;     // alpha*time_cost + beta_eff*fairness_cost
  double loss = 0.0;
  double accuracy = std::nan("");  // nan in curve mode
  double clock = 0.0;          // absolute simulated time at completion
  std::string selected_method; // scheduler name; winning tag under meta
  // Meta-Greedy candidate audit data, empty for single-method runs.
  std::vector<std::pair<std::string, double>> meta_candidates;
  double selected_recost = 0.0;
  double grad_norm_sq = std::nan("");  // mini-FL mode only
};

/// counts[k] += 1 for every k in the plan.
FrequencyVector update_frequency(const FrequencyVector& counts,
                                 const SchedulingPlan& plan);

/// Throws if the plan has duplicates, out-of-range ids, or a wrong size.
void validate_plan(const SchedulingPlan& plan, int num_devices,
                   int expected_size);

}  // namespace fedsched
