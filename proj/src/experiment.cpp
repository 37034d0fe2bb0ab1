#include "fedsched/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fedsched {

namespace {

namespace fs = std::filesystem;

struct Variant {
  std::string label;
  void (*tweak)(SimConfig&);
};

std::vector<Variant> variants_for(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::None:
      return {{"base", [](SimConfig&) {}}};
    case AblationAxis::BetaZero:
      return {{"base", [](SimConfig&) {}},
              {"beta0", [](SimConfig& c) {
                 for (auto& job : c.jobs) job.beta = 0.0;
               }}};
    case AblationAxis::AlphaZero:
      return {{"base", [](SimConfig&) {}},
              {"alpha0", [](SimConfig& c) {
                 for (auto& job : c.jobs) job.alpha = 0.0;
               }}};
    case AblationAxis::OmegaSweep:
      return {{"omega-sqrt", [](SimConfig& c) { c.omega = Omega::Sqrt; }},
              {"omega-linear", [](SimConfig& c) { c.omega = Omega::Linear; }},
              {"omega-log", [](SimConfig& c) { c.omega = Omega::Log; }}};
  }
  throw std::logic_error("unknown axis");
}

std::string plan_field(const SchedulingPlan& plan) {
  std::string out;
  for (size_t i = 0; i < plan.devices.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(plan.devices[i]);
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << content;
}

std::string summary_csv(const std::vector<CellResult>& cells) {
  std::string out =
      "scheduler,seed,variant,job,rounds,reached,time_to_target,"
      "wall_time_total,run_wall_total,final_loss,final_accuracy\n";
  for (const auto& cell : cells) {
    double run_wall = 0.0;
    for (const auto& s : cell.result.summaries) run_wall += s.wall_sum;
    for (const auto& s : cell.result.summaries) {
      out += cell.scheduler + ',' + std::to_string(cell.seed) + ',' +
             cell.variant + ',' + std::to_string(s.job) + ',' +
             std::to_string(s.rounds) + ',' + (s.reached ? "1" : "0") + ',' +
             (s.reached ? format_double(s.time_to_target)
                        : std::string("unreached")) +
             ',' + format_double(s.wall_sum) + ',' + format_double(run_wall) +
             ',' + format_double(s.final_loss) + ',' +
             format_double(s.final_accuracy) + '\n';
    }
  }
  return out;
}

constexpr std::string_view kPalette[] = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

/// Fixed 800x600 polyline chart: loss vs simulated clock, one line per
/// scheduler, linear axes labeled with the min/max values.
std::string loss_chart_svg(
    const std::vector<std::pair<std::string, const std::vector<RoundTrace>*>>&
        series,
    int job) {
  double x_max = 0.0, y_min = 1e300, y_max = -1e300;
  for (const auto& [name, trace] : series) {
    for (const auto& row : *trace) {
      x_max = std::max(x_max, row.clock);
      y_min = std::min(y_min, row.loss);
      y_max = std::max(y_max, row.loss);
    }
  }
  if (y_min > y_max) {
    y_min = 0.0;
    y_max = 1.0;
  }
  if (y_max <= y_min) y_max = y_min + 1.0;
  if (x_max <= 0.0) x_max = 1.0;

  const double px0 = 70.0, px1 = 780.0, py0 = 550.0, py1 = 30.0;
  auto sx = [&](double x) { return px0 + (px1 - px0) * (x / x_max); };
  auto sy = [&](double y) {
    return py0 + (py1 - py0) * ((y - y_min) / (y_max - y_min));
  };
  char buf[128];
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\">\n"
      "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n"
      "<line x1=\"70\" y1=\"550\" x2=\"780\" y2=\"550\" stroke=\"black\"/>\n"
      "<line x1=\"70\" y1=\"550\" x2=\"70\" y2=\"30\" stroke=\"black\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"70\" y=\"570\" font-size=\"12\">0</text>\n");
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"740\" y=\"570\" font-size=\"12\">%.4g</text>\n",
                x_max);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"8\" y=\"554\" font-size=\"12\">%.4g</text>\n",
                y_min);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"8\" y=\"34\" font-size=\"12\">%.4g</text>\n",
                y_max);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"380\" y=\"590\" font-size=\"13\">simulated time "
                "(job %d)</text>\n",
                job);
  svg += buf;
  svg += "<text x=\"14\" y=\"300\" font-size=\"13\" transform=\"rotate(-90 "
         "14 300)\">loss</text>\n";

  int idx = 0;
  for (const auto& [name, trace] : series) {
    const std::string_view color =
        kPalette[size_t(idx) % std::size(kPalette)];
    std::string points;
    for (const auto& row : *trace) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(row.clock),
                    sy(row.loss));
      points += buf;
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"640\" y=\"%d\" font-size=\"12\" "
                  "fill=\"%s\">%s</text>\n",
                  50 + 16 * idx, std::string(color).c_str(), name.c_str());
    svg += buf;
    ++idx;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)hash);
  return buf;
}

std::string trace_csv(const std::vector<std::vector<RoundTrace>>& traces) {
  std::string out =
      "round,job,clock,wall_time,time_cost,fairness_cost,total_cost,loss,"
      "accuracy,selected_method,plan\n";
  // Rows ordered by completion clock across jobs, job id breaking ties.
  std::vector<const RoundTrace*> rows;
  for (const auto& trace : traces) {
    for (const auto& row : trace) rows.push_back(&row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const RoundTrace* a, const RoundTrace* b) {
                     if (a->clock != b->clock) return a->clock < b->clock;
                     return a->job < b->job;
                   });
  for (const RoundTrace* row : rows) {
    out += std::to_string(row->round) + ',' + std::to_string(row->job) + ',' +
           format_double(row->clock) + ',' + format_double(row->wall_time) +
           ',' + format_double(row->time_cost) + ',' +
           format_double(row->fairness_cost) + ',' +
           format_double(row->total_cost) + ',' + format_double(row->loss) +
           ',' + format_double(row->accuracy) + ',' + row->selected_method +
           ',' + plan_field(row->plan) + '\n';
  }
  return out;
}

std::vector<CellResult> run_experiments(const ExperimentSpec& spec,
                                        AblationAxis axis) {
  const fs::path dir(spec.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + dir.string() +
                             ": " + ec.message());
  }

  std::vector<CellResult> cells;
  for (const auto& variant : variants_for(axis)) {
    for (const auto& scheduler : spec.schedulers) {
      for (const std::uint64_t seed : spec.seeds) {
        SimConfig config = spec.make_config(scheduler, seed);
        variant.tweak(config);
        CellResult cell{scheduler, seed, variant.label, run(config)};

        std::string name = "trace_" + scheduler + "_seed" +
                           std::to_string(seed);
        if (axis != AblationAxis::None) name += "_" + variant.label;
        write_file(dir / (name + ".csv"), trace_csv(cell.result.traces));
        cells.push_back(std::move(cell));
      }
    }
  }

  write_file(dir / "summary.csv", summary_csv(cells));

  // One chart per (job, variant): every scheduler's first-seed run.
  const int num_jobs = int(spec.base.jobs.size());
  for (const auto& variant : variants_for(axis)) {
    for (int j = 0; j < num_jobs; ++j) {
      std::vector<std::pair<std::string, const std::vector<RoundTrace>*>>
          series;
      for (const auto& cell : cells) {
        if (cell.variant != variant.label || cell.seed != spec.seeds.front()) {
          continue;
        }
        series.emplace_back(cell.scheduler, &cell.result.traces[size_t(j)]);
      }
      if (series.empty()) continue;
      std::string name = "chart_job" + std::to_string(j);
      if (axis != AblationAxis::None) name += "_" + variant.label;
      write_file(dir / (name + ".svg"), loss_chart_svg(series, j));
    }
  }

  std::string manifest;
  manifest += "version=0.1.0\n";
  manifest += "config_hash=" + fnv1a_hex(spec.config_text) + "\n";
  manifest += "mode=" + std::string(spec.base.mode == SimMode::Curve
                                        ? "curve"
                                        : "minifl") + "\n";
  manifest += "schedulers=";
  for (size_t i = 0; i < spec.schedulers.size(); ++i) {
    manifest += (i ? "," : "") + spec.schedulers[i];
  }
  manifest += "\nseeds=";
  for (size_t i = 0; i < spec.seeds.size(); ++i) {
    manifest += (i ? "," : "") + std::to_string(spec.seeds[i]);
  }
  manifest += "\naxis=";
  switch (axis) {
    case AblationAxis::None: manifest += "none"; break;
    case AblationAxis::BetaZero: manifest += "beta-zero"; break;
    case AblationAxis::AlphaZero: manifest += "alpha-zero"; break;
    case AblationAxis::OmegaSweep: manifest += "omega"; break;
  }
  manifest += "\n";
  write_file(dir / "manifest.txt", manifest);

  return cells;
}

void pretrain_policy_file(const ExperimentSpec& spec,
                          const std::string& out_path) {
  SimConfig config = spec.make_config("rlds", spec.seeds.front());
  if (config.rlds.pretrain_rounds <= 0) {
    throw ConfigError("pretraining requires rlds_pretrain_rounds > 0");
  }
  const JobSpec& job = config.jobs.front();
  const double scale =
      config.normalize_time ? mean_expected_time(config.devices, job) : 1.0;

  RldsScheduler rlds(config.rlds,
                     Rng::derive(config.seed, stream::kPolicyInit, 0));
  Rng rng(Rng::derive(config.seed, stream::kPretrain, 0));
  rlds.pretrain(config.devices, job, scale, rng);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write policy file " + out_path);
  save_policy(out, rlds.params(), int(config.devices.size()));
}

}  // namespace fedsched
