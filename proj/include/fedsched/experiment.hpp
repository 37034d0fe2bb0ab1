#pragma once

#include "fedsched/config.hpp"

namespace fedsched {

struct CellResult {
  std::string scheduler;
  std::uint64_t seed = 0;
  std::string variant;  // "base" outside ablations
  SimResult result;
};

/// Runs every (scheduler, seed, variant) cell, writes trace CSVs, the
/// summary CSV, loss-vs-clock SVG charts, and a manifest under
/// spec.out_dir, and returns the in-memory results in the same order.
std::vector<CellResult> run_experiments(const ExperimentSpec& spec,
                                        AblationAxis axis = AblationAxis::None);

/// Pretrains a policy on job 0 of the spec and writes it to out_path.
void pretrain_policy_file(const ExperimentSpec& spec,
                          const std::string& out_path);

std::string trace_csv(const std::vector<std::vector<RoundTrace>>& traces);
std::string format_double(double v);

/// FNV-1a 64-bit, hex-encoded; used for the manifest config hash.
std::string fnv1a_hex(const std::string& text);

}  // namespace fedsched
