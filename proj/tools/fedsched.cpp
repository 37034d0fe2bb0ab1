#include "fedsched/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct GlobalFlags {
  std::string config_path;
  std::int64_t seed = -1;
  std::string out_dir;
  std::string mode;
};

void add_common(CLI::App* cmd, GlobalFlags& flags) {
  cmd->add_option("config", flags.config_path, "experiment config file")
      ->required();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out-dir", flags.out_dir, "override the output directory");
  cmd->add_option("--mode", flags.mode, "override the mode (curve|minifl)")
      ->check(CLI::IsMember({"curve", "minifl"}));
}

fedsched::ExperimentSpec load_spec(const GlobalFlags& flags,
                                   bool single_seed) {
  fedsched::ExperimentSpec spec = fedsched::parse_config(flags.config_path);
  if (flags.seed >= 0) {
    spec.base.seed = std::uint64_t(flags.seed);
    spec.seeds = {spec.base.seed};
  } else if (single_seed) {
    spec.seeds = {spec.seeds.front()};
  }
  if (!flags.out_dir.empty()) spec.out_dir = flags.out_dir;
  if (flags.mode == "curve") spec.base.mode = fedsched::SimMode::Curve;
  if (flags.mode == "minifl") spec.base.mode = fedsched::SimMode::MiniFl;
  return spec;
}

void print_summaries(const std::vector<fedsched::CellResult>& cells) {
  for (const auto& cell : cells) {
    for (const auto& s : cell.result.summaries) {
      std::cout << cell.scheduler << " seed=" << cell.seed;
      if (cell.variant != "base") std::cout << " variant=" << cell.variant;
      std::cout << " job=" << s.job << " rounds=" << s.rounds
                << " time_to_target=";
      if (s.reached) {
        std::cout << s.time_to_target;
      } else {
        std::cout << "unreached";
      }
      std::cout << " final_loss=" << s.final_loss << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-job federated-learning scheduling simulator"};
  app.require_subcommand(1);

  GlobalFlags run_flags, sweep_flags, ablate_flags, pretrain_flags;
  std::string axis_name = "none";
  std::string policy_out;

  CLI::App* cmd_run =
      app.add_subcommand("run", "single-seed run of each scheduler");
  add_common(cmd_run, run_flags);

  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "full scheduler x seed battery");
  add_common(cmd_sweep, sweep_flags);

  CLI::App* cmd_ablate = app.add_subcommand("ablate", "cost-model ablations");
  add_common(cmd_ablate, ablate_flags);
  cmd_ablate
      ->add_option("--axis", axis_name,
                   "ablation axis: none, beta-zero, alpha-zero, omega")
      ->required();

  CLI::App* cmd_pretrain =
      app.add_subcommand("pretrain-rlds", "pretrain a policy and save it");
  add_common(cmd_pretrain, pretrain_flags);
  cmd_pretrain->add_option("--out", policy_out, "policy output file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      print_summaries(
          fedsched::run_experiments(load_spec(run_flags, true)));
    } else if (cmd_sweep->parsed()) {
      print_summaries(
          fedsched::run_experiments(load_spec(sweep_flags, false)));
    } else if (cmd_ablate->parsed()) {
      print_summaries(fedsched::run_experiments(
          load_spec(ablate_flags, false), fedsched::parse_axis(axis_name)));
    } else if (cmd_pretrain->parsed()) {
      fedsched::pretrain_policy_file(load_spec(pretrain_flags, true),
                                     policy_out);
      std::cout << "policy written to " << policy_out << '\n';
    }
  } catch (const fedsched::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
