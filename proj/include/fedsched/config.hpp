#pragma once

#include "fedsched/sim.hpp"

#include <string>

namespace fedsched {

/// Configuration problems (bad keys, malformed numbers, invalid ranges).
/// The CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A device population template; expands to `count` profiles with a, mu
/// and per-job data sizes drawn uniformly from the declared ranges.
struct DeviceClass {
  int count = 0;
  double a_min = 0.0, a_max = 0.0;
  double mu_min = 0.0, mu_max = 0.0;
  double data_min = 0.0, data_max = 0.0;
};

enum class AblationAxis { None, BetaZero, AlphaZero, OmegaSweep };

AblationAxis parse_axis(const std::string& name);

struct ExperimentSpec {
  SimConfig base;  // jobs and knobs filled; devices expanded per seed
  std::vector<DeviceClass> device_classes;
  std::vector<bool> round_cap_auto;  // per job: cap from the loss curve
  std::vector<std::string> schedulers = {"random"};
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "results";
  std::string policy_file;
  std::string config_text;  // raw file contents, hashed into the manifest

  int fleet_size() const;
  std::vector<DeviceProfile> build_devices(std::uint64_t seed) const;
  /// Fully resolved per-cell simulation config (fleet expanded, auto round
  /// caps computed, policy file loaded when set).
  SimConfig make_config(const std::string& scheduler, std::uint64_t seed) const;
};

ExperimentSpec parse_config(const std::string& path);
ExperimentSpec parse_config_text(const std::string& text,
                                 const std::string& origin = "<inline>");

/// FEDSCHED_SEED, FEDSCHED_SEEDS, FEDSCHED_SCHEDULERS, FEDSCHED_MODE,
/// FEDSCHED_OUT_DIR override the corresponding config values.
void apply_env_overrides(ExperimentSpec& spec);

}  // namespace fedsched
