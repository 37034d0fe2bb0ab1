#pragma once

#include "fedsched/policy_net.hpp"
#include "fedsched/schedulers.hpp"

namespace fedsched {

struct RldsParams {
  int hidden = 32;
  double eta = 1e-3;            // learning rate
  double baseline_gamma = 0.1;  // baseline smoothing
  double eps_start = 0.3;
  double eps_decay = 0.99;      // multiplicative, per round
  double eps_min = 0.01;
  double clip_norm = 5.0;       // L2 clip on the aggregated update
  int pretrain_rounds = 0;
  int pretrain_batch = 8;       // N during pretraining
  double pretrain_eta = 0.0;    // 0 = reuse eta
};

inline constexpr int kPolicyFeatureCount = 4;

/// One row per device: [normalized expected time, availability flag,
/// normalized own-job frequency, normalized fleet-wide frequency], with
/// min-max normalization over the fleet.
Eigen::MatrixXd encode_state(const SchedulerContext& ctx);

/// Epsilon-greedy policy converter: top plan-size free devices by
/// probability (ties to the lower id), or a uniform feasible plan with
/// probability epsilon.
std::optional<SchedulingPlan> convert_probs(const Eigen::VectorXd& probs,
                                            const SchedulerContext& ctx,
                                            double epsilon);

struct ReinforceSample {
  std::vector<int> selected;
  Eigen::MatrixXd features;
  double reward = 0.0;
};

/// REINFORCE scheduling: recurrent policy over device features, epsilon-
/// greedy conversion, baseline-centered policy-gradient updates on
/// realized rewards.
class RldsScheduler : public Scheduler {
 public:
  RldsScheduler(RldsParams params, std::uint64_t init_seed);
  RldsScheduler(RldsParams params, PolicyParams pretrained);

  std::string_view name() const override { return "rlds"; }
  std::optional<SchedulingPlan> schedule(const SchedulerContext& ctx) override;
  void observe(const RoundFeedback& fb) override;

  /// Batched policy update; the baseline is refreshed afterwards from the
  /// batch-mean reward. Non-finite gradients skip the update.
  void reinforce_update(const std::vector<ReinforceSample>& batch);

  /// Offline rollouts against the expected-time cost model (all devices
  /// free each round); commits the cheapest of the N sampled plans to the
  /// frequency state.
  void pretrain(const std::vector<DeviceProfile>& devices, const JobSpec& job,
                double time_scale, Rng& rng);

  const PolicyParams& params() const { return theta_; }
  double baseline() const { return baseline_; }
  double epsilon() const { return epsilon_; }
  void reset_baseline() { baseline_ = 0.0; }

 private:
  RldsParams cfg_;
  PolicyParams theta_;
  double baseline_ = 0.0;
  double epsilon_;
  // Round in flight, pending the realized reward.
  Eigen::MatrixXd last_features_;
  std::vector<int> last_selected_;
  bool pending_ = false;
};

}  // namespace fedsched
