#include "fedsched/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fedsched {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, delim)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("malformed number for '" + key + "': " + value);
  }
}

int parse_int(const std::string& value, const std::string& key) {
  const double v = parse_double(value, key);
  if (v != std::floor(v)) {
    throw ConfigError("'" + key + "' must be an integer: " + value);
  }
  return int(v);
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("'" + key + "' must be a boolean: " + value);
}

std::pair<double, double> parse_range(const std::string& value,
                                      const std::string& key) {
  std::stringstream ss(value);
  double lo = 0.0, hi = 0.0;
  if (!(ss >> lo)) throw ConfigError("malformed range for '" + key + "'");
  if (!(ss >> hi)) hi = lo;  // a single number means a degenerate range
  std::string rest;
  if (ss >> rest) throw ConfigError("malformed range for '" + key + "'");
  if (hi < lo) throw ConfigError("range for '" + key + "' has max < min");
  return {lo, hi};
}

Omega parse_omega(const std::string& value) {
  if (value == "sqrt") return Omega::Sqrt;
  if (value == "linear" || value == "r") return Omega::Linear;
  if (value == "log") return Omega::Log;
  throw ConfigError("omega must be one of sqrt, linear, log: " + value);
}

struct JobDraft {
  JobSpec spec;
  bool cap_auto = true;
  bool saw_fraction = false;
};

void apply_sim_key(ExperimentSpec& spec, const std::string& key,
                   const std::string& value) {
  SimConfig& base = spec.base;
  if (key == "mode") {
    if (value == "curve") base.mode = SimMode::Curve;
    else if (value == "minifl") base.mode = SimMode::MiniFl;
    else throw ConfigError("mode must be curve or minifl: " + value);
  } else if (key == "seed") {
    base.seed = std::uint64_t(parse_int(value, key));
  } else if (key == "seeds") {
    spec.seeds.clear();
    for (const auto& tok : split(value, ',')) {
      spec.seeds.push_back(std::uint64_t(parse_int(tok, key)));
    }
    if (spec.seeds.empty()) throw ConfigError("seeds list is empty");
  } else if (key == "schedulers") {
    spec.schedulers = split(value, ',');
    if (spec.schedulers.empty()) throw ConfigError("schedulers list is empty");
    for (auto& name : spec.schedulers) {
      if (name == "meta") name = "meta-greedy";
      if (!is_scheduler_name(name)) {
        throw ConfigError("unknown scheduler '" + name + "'");
      }
    }
  } else if (key == "out_dir") {
    spec.out_dir = value;
  } else if (key == "policy_file") {
    spec.policy_file = value;
  } else if (key == "kappa") {
    base.kappa = parse_double(value, key);
  } else if (key == "noise_spread") {
    base.noise_spread = parse_double(value, key);
  } else if (key == "omega") {
    base.omega = parse_omega(value);
  } else if (key == "normalize_time") {
    base.normalize_time = parse_bool(value, key);
  } else if (key == "ga_population") {
    base.ga.population = parse_int(value, key);
  } else if (key == "ga_generations") {
    base.ga.generations = parse_int(value, key);
  } else if (key == "ga_mutation") {
    base.ga.mutation_prob = parse_double(value, key);
  } else if (key == "fedcs_deadline_factor") {
    base.fedcs_deadline_factor = parse_double(value, key);
  } else if (key == "fedcs_deadline") {
    base.fedcs_deadline = parse_double(value, key);
  } else if (key == "bods_init") {
    base.bods.n_init = parse_int(value, key);
  } else if (key == "bods_candidates") {
    base.bods.n_candidates = parse_int(value, key);
  } else if (key == "bods_window") {
    base.bods.window = parse_int(value, key);
  } else if (key == "rlds_hidden") {
    base.rlds.hidden = parse_int(value, key);
  } else if (key == "rlds_eta") {
    base.rlds.eta = parse_double(value, key);
  } else if (key == "rlds_baseline_gamma") {
    base.rlds.baseline_gamma = parse_double(value, key);
  } else if (key == "rlds_eps_start") {
    base.rlds.eps_start = parse_double(value, key);
  } else if (key == "rlds_eps_decay") {
    base.rlds.eps_decay = parse_double(value, key);
  } else if (key == "rlds_eps_min") {
    base.rlds.eps_min = parse_double(value, key);
  } else if (key == "rlds_clip") {
    base.rlds.clip_norm = parse_double(value, key);
  } else if (key == "rlds_pretrain_rounds") {
    base.rlds.pretrain_rounds = parse_int(value, key);
  } else if (key == "rlds_pretrain_batch") {
    base.rlds.pretrain_batch = parse_int(value, key);
  } else if (key == "rlds_pretrain_eta") {
    base.rlds.pretrain_eta = parse_double(value, key);
  } else if (key == "meta_methods") {
    base.meta_methods = split(value, ',');
    for (auto& name : base.meta_methods) {
      if (name == "meta" || name == "meta-greedy" || !is_scheduler_name(name)) {
        throw ConfigError("invalid meta constituent '" + name + "'");
      }
    }
    if (base.meta_methods.empty()) {
      throw ConfigError("meta_methods list is empty");
    }
  } else {
    throw ConfigError("unknown key '" + key + "' in [sim]");
  }
}

void apply_class_key(DeviceClass& cls, const std::string& key,
                     const std::string& value) {
  if (key == "count") {
    cls.count = parse_int(value, key);
    if (cls.count < 1) throw ConfigError("device-class count must be >= 1");
  } else if (key == "a") {
    std::tie(cls.a_min, cls.a_max) = parse_range(value, key);
    if (cls.a_min <= 0.0) throw ConfigError("device-class a must be > 0");
  } else if (key == "mu") {
    std::tie(cls.mu_min, cls.mu_max) = parse_range(value, key);
    if (cls.mu_min <= 0.0) throw ConfigError("device-class mu must be > 0");
  } else if (key == "data") {
    std::tie(cls.data_min, cls.data_max) = parse_range(value, key);
    if (cls.data_min < 0.0) throw ConfigError("device-class data must be >= 0");
  } else {
    throw ConfigError("unknown key '" + key + "' in [device-class]");
  }
}

void apply_job_key(JobDraft& job, const std::string& key,
                   const std::string& value) {
  JobSpec& spec = job.spec;
  if (key == "fraction") {
    spec.fraction = parse_double(value, key);
    job.saw_fraction = true;
    if (spec.fraction <= 0.0 || spec.fraction > 1.0) {
      throw ConfigError("job fraction must be in (0, 1]: " + value);
    }
  } else if (key == "local_epochs") {
    spec.local_epochs = parse_int(value, key);
  } else if (key == "batch_size") {
    spec.batch_size = parse_int(value, key);
  } else if (key == "gamma") {
    std::stringstream ss(value);
    if (!(ss >> spec.gamma0 >> spec.gamma1 >> spec.gamma2)) {
      throw ConfigError("gamma needs three numbers: " + value);
    }
  } else if (key == "target_loss") {
    spec.target_loss = parse_double(value, key);
  } else if (key == "alpha") {
    spec.alpha = parse_double(value, key);
  } else if (key == "beta") {
    spec.beta = parse_double(value, key);
  } else if (key == "round_cap") {
    if (value == "auto") {
      job.cap_auto = true;
    } else {
      job.cap_auto = false;
      spec.round_cap = parse_int(value, key);
    }
  } else if (key == "model") {
    if (value == "logistic") spec.fl.model = ModelKind::Logistic;
    else if (value == "mlp") spec.fl.model = ModelKind::Mlp;
    else throw ConfigError("model must be logistic or mlp: " + value);
  } else if (key == "features") {
    spec.fl.features = parse_int(value, key);
  } else if (key == "classes") {
    spec.fl.classes = parse_int(value, key);
  } else if (key == "hidden") {
    spec.fl.hidden = parse_int(value, key);
  } else if (key == "separation") {
    spec.fl.separation = parse_double(value, key);
  } else if (key == "samples") {
    spec.fl.samples = parse_int(value, key);
  } else if (key == "partition") {
    if (value == "iid") spec.fl.partition = PartitionMode::Iid;
    else if (value == "noniid" || value == "non-iid") {
      spec.fl.partition = PartitionMode::NonIid;
    } else {
      throw ConfigError("partition must be iid or noniid: " + value);
    }
  } else if (key == "shards_per_class") {
    spec.fl.shards_per_class = parse_int(value, key);
  } else if (key == "lr") {
    spec.fl.lr = parse_double(value, key);
  } else if (key == "lr_schedule") {
    if (value == "const") spec.fl.lr_schedule = LrSchedule::Constant;
    else if (value == "invsqrt") spec.fl.lr_schedule = LrSchedule::InvSqrt;
    else throw ConfigError("lr_schedule must be const or invsqrt: " + value);
  } else if (key == "target_accuracy") {
    spec.fl.target_accuracy = parse_double(value, key);
  } else {
    throw ConfigError("unknown key '" + key + "' in [job]");
  }
}

}  // namespace

AblationAxis parse_axis(const std::string& name) {
  if (name == "none") return AblationAxis::None;
  if (name == "beta-zero") return AblationAxis::BetaZero;
  if (name == "alpha-zero") return AblationAxis::AlphaZero;
  if (name == "omega") return AblationAxis::OmegaSweep;
  throw ConfigError("unknown ablation axis '" + name +
                    "' (expected none, beta-zero, alpha-zero, omega)");
}

ExperimentSpec parse_config_text(const std::string& text,
                                 const std::string& origin) {
  ExperimentSpec spec;
  spec.config_text = text;
  spec.seeds.clear();  // default to {seed} after parsing

  std::vector<JobDraft> jobs;
  enum class Section { None, Sim, DeviceClass, Job } section = Section::None;

  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": unterminated section header");
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name == "sim") section = Section::Sim;
      else if (name == "device-class") {
        section = Section::DeviceClass;
        spec.device_classes.emplace_back();
      } else if (name == "job") {
        section = Section::Job;
        jobs.emplace_back();
      } else {
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": unknown section [" + name + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": empty key or value");
    }
    try {
      switch (section) {
        case Section::Sim:
          apply_sim_key(spec, key, value);
          break;
        case Section::DeviceClass:
          apply_class_key(spec.device_classes.back(), key, value);
          break;
        case Section::Job:
          apply_job_key(jobs.back(), key, value);
          break;
        case Section::None:
          throw ConfigError("key '" + key + "' before any section header");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }

  if (spec.device_classes.empty()) {
    throw ConfigError(origin + ": missing required [device-class] section");
  }
  for (const auto& cls : spec.device_classes) {
    if (cls.count < 1) throw ConfigError(origin + ": device-class missing count");
    if (cls.a_min <= 0.0) throw ConfigError(origin + ": device-class missing a");
    if (cls.mu_min <= 0.0) throw ConfigError(origin + ": device-class missing mu");
    if (cls.data_max <= 0.0) {
      throw ConfigError(origin + ": device-class missing data");
    }
  }
  if (jobs.empty()) {
    throw ConfigError(origin + ": missing required [job] section");
  }
  spec.base.jobs.clear();
  spec.round_cap_auto.clear();
  for (size_t j = 0; j < jobs.size(); ++j) {
    if (!jobs[j].saw_fraction) {
      throw ConfigError(origin + ": job " + std::to_string(j) +
                        " missing required key 'fraction'");
    }
    jobs[j].spec.id = int(j);
    spec.base.jobs.push_back(jobs[j].spec);
    spec.round_cap_auto.push_back(jobs[j].cap_auto);
  }
  if (spec.seeds.empty()) spec.seeds = {spec.base.seed};
  apply_env_overrides(spec);
  return spec;
}

ExperimentSpec parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

void apply_env_overrides(ExperimentSpec& spec) {
  if (const char* v = std::getenv("FEDSCHED_SEED")) {
    spec.base.seed = std::uint64_t(parse_int(v, "FEDSCHED_SEED"));
    spec.seeds = {spec.base.seed};
  }
  if (const char* v = std::getenv("FEDSCHED_SEEDS")) {
    spec.seeds.clear();
    for (const auto& tok : split(v, ',')) {
      spec.seeds.push_back(std::uint64_t(parse_int(tok, "FEDSCHED_SEEDS")));
    }
    if (spec.seeds.empty()) throw ConfigError("FEDSCHED_SEEDS is empty");
  }
  if (const char* v = std::getenv("FEDSCHED_SCHEDULERS")) {
    spec.schedulers = split(v, ',');
    for (auto& name : spec.schedulers) {
      if (name == "meta") name = "meta-greedy";
      if (!is_scheduler_name(name)) {
        throw ConfigError("FEDSCHED_SCHEDULERS: unknown scheduler " + name);
      }
    }
  }
  if (const char* v = std::getenv("FEDSCHED_MODE")) {
    const std::string mode(v);
    if (mode == "curve") spec.base.mode = SimMode::Curve;
    else if (mode == "minifl") spec.base.mode = SimMode::MiniFl;
    else throw ConfigError("FEDSCHED_MODE must be curve or minifl");
  }
  if (const char* v = std::getenv("FEDSCHED_OUT_DIR")) spec.out_dir = v;
}

int ExperimentSpec::fleet_size() const {
  int total = 0;
  for (const auto& cls : device_classes) total += cls.count;
  return total;
}

std::vector<DeviceProfile> ExperimentSpec::build_devices(
    std::uint64_t seed) const {
  Rng rng(Rng::derive(seed, stream::kFleet));
  std::vector<DeviceProfile> out;
  out.reserve(size_t(fleet_size()));
  const int num_jobs = int(base.jobs.size());
  int id = 0;
  for (const auto& cls : device_classes) {
    for (int i = 0; i < cls.count; ++i) {
      DeviceProfile dev;
      dev.id = id++;
      dev.a = rng.uniform(cls.a_min, cls.a_max);
      dev.mu = rng.uniform(cls.mu_min, cls.mu_max);
      dev.data_sizes.resize(size_t(num_jobs));
      for (int j = 0; j < num_jobs; ++j) {
        dev.data_sizes[size_t(j)] =
            std::max(1.0, std::round(rng.uniform(cls.data_min, cls.data_max)));
      }
      out.push_back(std::move(dev));
    }
  }
  return out;
}

SimConfig ExperimentSpec::make_config(const std::string& scheduler,
                                      std::uint64_t seed) const {
  SimConfig config = base;
  config.scheduler = scheduler == "meta" ? "meta-greedy" : scheduler;
  config.seed = seed;
  config.devices = build_devices(seed);
  for (size_t j = 0; j < config.jobs.size(); ++j) {
    if (round_cap_auto[j]) {
      config.jobs[j].round_cap = estimate_round_cap(config.jobs[j]);
    }
  }
  if (!policy_file.empty()) {
    std::ifstream in(policy_file);
    if (!in) throw ConfigError("cannot open policy file: " + policy_file);
    config.pretrained_policy = load_policy(in);
  }
  return config;
}

}  // namespace fedsched
