#pragma once

#include "fedsched/bods.hpp"
#include "fedsched/fl.hpp"
#include "fedsched/meta.hpp"
#include "fedsched/rlds.hpp"
#include "fedsched/schedulers.hpp"

#include <memory>
#include <optional>

namespace fedsched {

enum class SimMode { Curve, MiniFl };

struct SimConfig {
  std::vector<DeviceProfile> devices;
  std::vector<JobSpec> jobs;
  std::string scheduler = "random";
  SimMode mode = SimMode::Curve;
  std::uint64_t seed = 1;

  // Curve-mode training signal.
  double kappa = 1.0;         // fairness -> convergence coupling
  double noise_spread = 0.3;  // target round-count spread
  Omega omega = Omega::Sqrt;  // dynamic fairness scaling
  bool normalize_time = true;

  GaParams ga;
  double fedcs_deadline_factor = 1.5;
  double fedcs_deadline = 0.0;  // explicit deadline; 0 derives from the fleet
  BodsParams bods;
  RldsParams rlds;
  std::vector<std::string> meta_methods = {"bods",   "rlds",  "genetic",
                                           "greedy", "fedcs", "random"};
  std::optional<PolicyParams> pretrained_policy;
};

struct JobSummary {
  int job = 0;
  int rounds = 0;
  bool reached = false;
  double time_to_target = 0.0;  // clock of the round that met the stop rule
  double wall_sum = 0.0;        // sum of round wall times
  double mean_wall = 0.0;
  double final_loss = 0.0;
  double final_accuracy = 0.0;  // nan in curve mode
  double final_fairness = 0.0;  // variance of the final frequency vector
  double cost_sum = 0.0;
};

struct SimResult {
  std::vector<std::vector<RoundTrace>> traces;  // one list per job
  std::vector<JobSummary> summaries;
  std::vector<double> time_scales;
};

/// All seven method names, in Meta-Greedy tie-break priority order.
const std::vector<std::string>& scheduler_names();
bool is_scheduler_name(const std::string& name);

std::unique_ptr<Scheduler> make_scheduler(const std::string& name,
                                          const SimConfig& config, int job_id);

/// Event-driven multi-job run. Throws on deadlock (event queue drained
/// with unfinished jobs) with fleet/plan-size diagnostics.
SimResult run(const SimConfig& config);

}  // namespace fedsched
