#include "fedsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <queue>

namespace fedsched {

const std::vector<std::string>& scheduler_names() {
  static const std::vector<std::string> names = {
      "bods", "rlds", "genetic", "greedy", "fedcs", "random", "meta-greedy"};
  return names;
}

bool is_scheduler_name(const std::string& name) {
  const auto& all = scheduler_names();
  return std::find(all.begin(), all.end(), name) != all.end();
}

std::unique_ptr<Scheduler> make_scheduler(const std::string& name,
                                          const SimConfig& config,
                                          int job_id) {
  const int k = int(config.devices.size());
  if (name == "random") return std::make_unique<RandomScheduler>();
  if (name == "greedy") return std::make_unique<GreedyScheduler>();
  if (name == "fedcs") {
    return std::make_unique<FedCsScheduler>(config.fedcs_deadline_factor,
                                            config.fedcs_deadline);
  }
  if (name == "genetic") return std::make_unique<GeneticScheduler>(config.ga);
  if (name == "bods") return std::make_unique<BodsScheduler>(k, config.bods);
  if (name == "rlds") {
    if (config.pretrained_policy) {
      return std::make_unique<RldsScheduler>(config.rlds,
                                             *config.pretrained_policy);
    }
    return std::make_unique<RldsScheduler>(
        config.rlds,
        Rng::derive(config.seed, stream::kPolicyInit, std::uint64_t(job_id)));
  }
  if (name == "meta-greedy" || name == "meta") {
    std::vector<std::unique_ptr<Scheduler>> constituents;
    for (const auto& method : config.meta_methods) {
      constituents.push_back(make_scheduler(method, config, job_id));
    }
    return std::make_unique<MetaGreedyScheduler>(
        MetaParams{config.meta_methods, config.omega}, std::move(constituents));
  }
  throw std::invalid_argument("unknown scheduler '" + name + "'");
}

namespace {

bool device_eligible(const DeviceProfile& dev, int job_id) {
  return dev.data_sizes.at(size_t(job_id)) > 0.0;
}

struct PendingRound {
  SchedulingPlan plan;
  double wall = 0.0;
  CostBreakdown breakdown;     // decision-time cost terms, as logged
  double static_total = 0.0;   // Eq.-2 weighted total (beta without Omega)
  double cross_cost = 0.0;
  std::string method;
  std::vector<MetaCandidate> candidates;  // meta only
  double selected_recost = 0.0;
};

enum class Phase { Idle, Waiting, Running, Done };

struct SimEvent {
  double time = 0.0;
  int kind = 0;  // 0 = RoundComplete, 1 = JobWantsSchedule
  int job = 0;
};

struct EventLater {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.job > b.job;
  }
};

struct JobState {
  Phase phase = Phase::Idle;
  int rounds_done = 0;
  FrequencyVector counts;
  std::unique_ptr<Scheduler> scheduler;
  Rng sched_rng{0}, time_rng{0}, noise_rng{0}, fl_rng{0};
  PendingRound pending;

  // Curve-mode state.
  double r_eff = 0.0;
  double sigma_ln = 0.0;

  // Mini-FL state.
  Model model;
  Eigen::VectorXd weights;
  std::vector<LocalDataset> data;
  int lr_steps_per_round = 1;  // H for the 1/sqrt(rH) schedule

  double loss = 0.0;
  double accuracy = std::nan("");

  std::vector<RoundTrace> trace;
  bool reached = false;
  double time_to_target = std::nan("");
  double wall_sum = 0.0;
  double cost_sum = 0.0;
};

class Simulation {
 public:
  explicit Simulation(const SimConfig& config) : cfg_(config) { init(); }

  SimResult run() {
    for (int m = 0; m < int(jobs_.size()); ++m) {
      events_.push({0.0, 1, m});
    }
    while (!events_.empty()) {
      const SimEvent ev = events_.top();
      events_.pop();
      clock_ = ev.time;
      if (ev.kind == 0) {
        complete_round(ev.job);
      } else {
        request_schedule(ev.job);
      }
    }
    check_deadlock();
    return collect();
  }

 private:
  void init() {
    const int k = int(cfg_.devices.size());
    const int m = int(cfg_.jobs.size());
    if (k < 1 || m < 1) {
      throw std::invalid_argument("simulation needs devices and jobs");
    }
    devices_ = cfg_.devices;
    const bool curve = cfg_.mode == SimMode::Curve;

    if (cfg_.mode == SimMode::MiniFl) prepare_minifl();

    int plan_total = 0;
    for (int j = 0; j < m; ++j) {
      const JobSpec& job = cfg_.jobs[size_t(j)];
      if (job.id != j) throw std::invalid_argument("job ids must be dense 0..M-1");
      job.validate(k, curve);
      plan_total += job.plan_size(k);
    }
    for (const auto& dev : devices_) dev.validate(m);
    if (plan_total > k) {
      std::cerr << "warning: sum of plan sizes (" << plan_total
                << ") exceeds the fleet size (" << k
                << "); jobs will wait on occupancy\n";
    }

    time_scales_.assign(size_t(m), 1.0);
    jobs_.resize(size_t(m));
    fleet_counts_ = FrequencyVector::Zero(k);
    occupancy_ = std::make_unique<OccupancySet>(k);

    for (int j = 0; j < m; ++j) {
      const JobSpec& job = cfg_.jobs[size_t(j)];
      JobState& st = jobs_[size_t(j)];
      st.counts = FrequencyVector::Zero(k);
      st.sched_rng = Rng(Rng::derive(cfg_.seed, stream::kScheduler, std::uint64_t(j)));
      st.time_rng = Rng(Rng::derive(cfg_.seed, stream::kDeviceTime, std::uint64_t(j)));
      st.noise_rng = Rng(Rng::derive(cfg_.seed, stream::kCurveNoise, std::uint64_t(j)));
      st.fl_rng = Rng(Rng::derive(cfg_.seed, stream::kLocalSgd, std::uint64_t(j)));

      if (cfg_.normalize_time) {
        double sum = 0.0;
        int eligible = 0;
        for (const auto& dev : devices_) {
          if (!device_eligible(dev, j)) continue;
          sum += expected_device_time(dev, job);
          ++eligible;
        }
        if (eligible == 0) {
          throw std::invalid_argument("no device holds data for job " +
                                      std::to_string(j));
        }
        time_scales_[size_t(j)] = sum / double(eligible);
      }

      if (curve) {
        st.loss = loss_estimate(0.0, job.gamma0, job.gamma1, job.gamma2);
        const double cv =
            cfg_.noise_spread * std::sqrt(double(std::max(1, invert_loss_curve(job))));
        st.sigma_ln =
            cfg_.noise_spread <= 0.0
                ? 0.0
                : std::min(2.0, std::sqrt(std::log1p(cv * cv)));
      } else {
        const FlJobConfig& fl = job.fl;
        st.model = Model{fl.model, fl.features, fl.classes, fl.hidden};
        Rng init_rng(Rng::derive(cfg_.seed, stream::kModelInit, std::uint64_t(j)));
        st.weights = st.model.init_params(init_rng);
        double total_data = 0.0;
        int holders = 0;
        for (const auto& dev : devices_) {
          if (!device_eligible(dev, j)) continue;
          total_data += dev.data_sizes[size_t(j)];
          ++holders;
        }
        const double mean_local = holders > 0 ? total_data / holders : 1.0;
        st.lr_steps_per_round =
            job.local_epochs * std::max(1, int(std::ceil(mean_local / job.batch_size)));
        const EvalResult eval = global_loss(st.model, st.weights,
                                            minifl_data_[size_t(j)]);
        st.loss = eval.loss;
        st.accuracy = eval.accuracy;
      }

      st.scheduler = make_scheduler(cfg_.scheduler, cfg_, j);
      if (!cfg_.pretrained_policy && cfg_.rlds.pretrain_rounds > 0) {
        RldsScheduler* rlds = dynamic_cast<RldsScheduler*>(st.scheduler.get());
        if (auto* meta = dynamic_cast<MetaGreedyScheduler*>(st.scheduler.get())) {
          rlds = dynamic_cast<RldsScheduler*>(meta->constituent("rlds"));
        }
        if (rlds) {
          Rng rng(Rng::derive(cfg_.seed, stream::kPretrain, std::uint64_t(j)));
          rlds->pretrain(devices_, job, time_scales_[size_t(j)], rng);
        }
      }
    }
  }

  void prepare_minifl() {
    const int k = int(devices_.size());
    for (int j = 0; j < int(cfg_.jobs.size()); ++j) {
      const FlJobConfig& fl = cfg_.jobs[size_t(j)].fl;
      Rng data_rng(Rng::derive(cfg_.seed, stream::kData, std::uint64_t(j)));
      Dataset dataset = make_blobs(fl.samples, fl.features, fl.classes,
                                   fl.separation, data_rng);
      minifl_data_.push_back(
          partition(dataset, k, fl.partition, data_rng, fl.shards_per_class));
      for (int d = 0; d < k; ++d) {
        devices_[size_t(d)].data_sizes.at(size_t(j)) =
            double(minifl_data_.back()[size_t(d)].size());
      }
    }
  }

  SchedulerContext make_context(int j) {
    SchedulerContext ctx;
    ctx.job = &cfg_.jobs[size_t(j)];
    ctx.round = jobs_[size_t(j)].rounds_done + 1;
    ctx.devices = &devices_;
    for (int d : occupancy_->free_devices()) {
      if (device_eligible(devices_[size_t(d)], j)) ctx.free.push_back(d);
    }
    ctx.freqs = &jobs_[size_t(j)].counts;
    ctx.fleet_freqs = &fleet_counts_;
    ctx.time_scale = time_scales_[size_t(j)];
    ctx.cross_cost = cross_cost_excluding(j);
    ctx.rng = &jobs_[size_t(j)].sched_rng;
    return ctx;
  }

  double cross_cost_excluding(int j) {
    double sum = 0.0;
    for (int other = 0; other < int(jobs_.size()); ++other) {
      if (other == j || jobs_[size_t(other)].phase != Phase::Running) continue;
      sum += jobs_[size_t(other)].pending.static_total;
    }
    return sum;
  }

  void request_schedule(int j) {
    JobState& st = jobs_[size_t(j)];
    if (st.phase != Phase::Idle) return;
    if (!try_start(j)) {
      st.phase = Phase::Waiting;
      waiting_.push_back(j);
    }
  }

  bool try_start(int j) {
    JobState& st = jobs_[size_t(j)];
    const JobSpec& job = cfg_.jobs[size_t(j)];
    SchedulerContext ctx = make_context(j);
    auto plan = st.scheduler->schedule(ctx);
    if (!plan) return false;

    validate_plan(*plan, int(devices_.size()), ctx.plan_size());
    occupancy_->occupy(*plan);

    PendingRound pending;
    pending.plan = std::move(*plan);
    std::vector<double> times;
    times.reserve(pending.plan.devices.size());
    for (int d : pending.plan.devices) {
      times.push_back(sample_device_time(devices_[size_t(d)], job, st.time_rng));
    }
    pending.wall = round_time(times);
    pending.cross_cost = ctx.cross_cost;

    const bool meta = st.scheduler->name() == "meta-greedy";
    pending.breakdown =
        round_cost(pending.plan, job, devices_, st.counts, ctx.round,
                   /*dynamic=*/meta, cfg_.omega, ctx.time_scale);
    pending.static_total = job.alpha * pending.breakdown.time_term +
                           job.beta * pending.breakdown.fairness_term;
    if (meta) {
      auto* scheduler = static_cast<MetaGreedyScheduler*>(st.scheduler.get());
      pending.method = scheduler->last_selected_method();
      pending.candidates = scheduler->last_candidates();
      pending.selected_recost = scheduler->last_selected_recost();
    } else {
      pending.method = std::string(st.scheduler->name());
      pending.selected_recost = pending.breakdown.weighted_total;
    }

    st.pending = std::move(pending);
    st.phase = Phase::Running;
    events_.push({clock_ + st.pending.wall, 0, j});
    return true;
  }

  void complete_round(int j) {
    JobState& st = jobs_[size_t(j)];
    const JobSpec& job = cfg_.jobs[size_t(j)];
    const PendingRound& pending = st.pending;

    occupancy_->release(pending.plan);
    st.counts = update_frequency(st.counts, pending.plan);
    fleet_counts_ = update_frequency(fleet_counts_, pending.plan);
    st.rounds_done += 1;
    const int round = st.rounds_done;

    RoundTrace row;
    row.job = j;
    row.round = round;
    row.plan = pending.plan;
    row.wall_time = pending.wall;
    row.time_cost = pending.breakdown.time_term;
    row.fairness_cost = pending.breakdown.fairness_term;
    row.beta_eff = pending.breakdown.beta_eff;
    row.total_cost = pending.breakdown.weighted_total;
    row.clock = clock_;
    row.selected_method = pending.method;
    row.meta_candidates.reserve(pending.candidates.size());
    for (const auto& candidate : pending.candidates) {
      row.meta_candidates.emplace_back(candidate.method, candidate.recost);
    }
    row.selected_recost = pending.selected_recost;

    if (cfg_.mode == SimMode::Curve) {
      st.r_eff += curve_increment(j);
      st.loss = loss_estimate(st.r_eff, job.gamma0, job.gamma1, job.gamma2);
    } else {
      minifl_round(j);
      row.grad_norm_sq = global_grad_norm_sq(st.model, st.weights,
                                             minifl_data_[size_t(j)]);
    }
    row.loss = st.loss;
    row.accuracy = st.accuracy;

    // Realized Eq.-8 cost: the sampled wall time replaces the expected
    // time term; fairness and cross terms are the scheduling-time values.
    const double realized =
        job.alpha * (pending.wall / time_scales_[size_t(j)]) +
        job.beta * pending.breakdown.fairness_term + pending.cross_cost;
    st.scheduler->observe(RoundFeedback{pending.plan, realized});

    st.wall_sum += pending.wall;
    st.cost_sum += pending.breakdown.weighted_total;
    st.trace.push_back(std::move(row));

    bool stop = false;
    if (!st.reached && stop_rule_met(j)) {
      st.reached = true;
      st.time_to_target = clock_;
      stop = true;
    }
    if (round >= job.round_cap) stop = true;

    st.phase = stop ? Phase::Done : Phase::Idle;
    if (!stop) events_.push({clock_, 1, j});
    drain_waiting();
  }

  bool stop_rule_met(int j) {
    const JobState& st = jobs_[size_t(j)];
    const JobSpec& job = cfg_.jobs[size_t(j)];
    if (cfg_.mode == SimMode::MiniFl && job.fl.target_accuracy > 0.0) {
      return st.accuracy >= job.fl.target_accuracy;
    }
    return st.loss <= job.target_loss;
  }

  /// Fairness-scaled, noise-multiplied advance of the effective round
  /// counter. The variance of the post-round counts is normalized by the
  /// largest variance any full-size plan sequence can reach at this round
  /// count (repeating a single plan), so the scale factor stays in
  /// [1/(1+kappa), 1].
  double curve_increment(int j) {
    JobState& st = jobs_[size_t(j)];
    const JobSpec& job = cfg_.jobs[size_t(j)];
    const int k = int(devices_.size());
    const double p = double(job.plan_size(k)) / double(k);
    const double r = double(st.rounds_done);
    const Eigen::ArrayXd counts = st.counts.cast<double>().array();
    const double variance = (counts - counts.mean()).square().mean();
    const double max_variance = r * r * p * (1.0 - p);
    const double nf = max_variance > 0.0 ? variance / max_variance : 0.0;
    double increment = 1.0 / (1.0 + cfg_.kappa * nf);
    if (st.sigma_ln > 0.0) {
      increment *= st.noise_rng.lognormal(-0.5 * st.sigma_ln * st.sigma_ln,
                                          st.sigma_ln);
    }
    return increment;
  }

  void minifl_round(int j) {
    JobState& st = jobs_[size_t(j)];
    const JobSpec& job = cfg_.jobs[size_t(j)];
    const auto& data = minifl_data_[size_t(j)];

    double lr = job.fl.lr;
    if (job.fl.lr_schedule == LrSchedule::InvSqrt) {
      lr /= std::sqrt(double(st.rounds_done) * double(st.lr_steps_per_round));
    }

    std::vector<std::pair<Eigen::VectorXd, double>> locals;
    locals.reserve(st.pending.plan.devices.size());
    for (int d : st.pending.plan.devices) {
      locals.emplace_back(
          local_update(st.model, st.weights, data[size_t(d)], job.local_epochs,
                       job.batch_size, lr, st.fl_rng),
          double(data[size_t(d)].size()));
    }
    st.weights = fedavg_aggregate(locals);
    const EvalResult eval = global_loss(st.model, st.weights, data);
    st.loss = eval.loss;
    st.accuracy = eval.accuracy;
  }

  void drain_waiting() {
    for (auto it = waiting_.begin(); it != waiting_.end();) {
      if (try_start(*it)) {
        it = waiting_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void check_deadlock() {
    std::vector<int> stuck;
    for (int j = 0; j < int(jobs_.size()); ++j) {
      if (jobs_[size_t(j)].phase != Phase::Done) stuck.push_back(j);
    }
    if (stuck.empty()) return;
    std::string msg = "simulation deadlocked; fleet size " +
                      std::to_string(devices_.size()) + ", free " +
                      std::to_string(occupancy_->free_devices().size()) +
                      ", stuck jobs (plan sizes):";
    for (int j : stuck) {
      msg += " " + std::to_string(j) + " (" +
             std::to_string(cfg_.jobs[size_t(j)].plan_size(int(devices_.size()))) +
             ")";
    }
    throw std::runtime_error(msg);
  }

  SimResult collect() {
    SimResult out;
    out.time_scales = time_scales_;
    for (int j = 0; j < int(jobs_.size()); ++j) {
      JobState& st = jobs_[size_t(j)];
      JobSummary s;
      s.job = j;
      s.rounds = st.rounds_done;
      s.reached = st.reached;
      s.time_to_target = st.time_to_target;
      s.wall_sum = st.wall_sum;
      s.mean_wall = st.rounds_done > 0 ? st.wall_sum / st.rounds_done : 0.0;
      s.final_loss = st.loss;
      s.final_accuracy = st.accuracy;
      const Eigen::ArrayXd counts = st.counts.cast<double>().array();
      s.final_fairness = (counts - counts.mean()).square().mean();
      s.cost_sum = st.cost_sum;
      out.summaries.push_back(s);
      out.traces.push_back(std::move(st.trace));
    }
    return out;
  }

  SimConfig cfg_;
  std::vector<DeviceProfile> devices_;
  std::vector<JobState> jobs_;
  std::vector<double> time_scales_;
  std::vector<std::vector<LocalDataset>> minifl_data_;
  FrequencyVector fleet_counts_;
  std::unique_ptr<OccupancySet> occupancy_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, EventLater> events_;
  std::deque<int> waiting_;
  double clock_ = 0.0;
};

}  // namespace

SimResult run(const SimConfig& config) {
  Simulation sim(config);
  return sim.run();
}

}  // namespace fedsched
