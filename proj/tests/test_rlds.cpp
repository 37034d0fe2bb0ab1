#include "fedsched/rlds.hpp"

#include <doctest.h>

#include "test_util.hpp"

using namespace fedsched;
using testing::CtxFixture;

TEST_CASE("encoded features live in the unit interval") {
  CtxFixture f = CtxFixture::uniform(10, 0.3, 1);
  for (auto& dev : f.devices) {
    dev.a = f.rng.uniform(0.005, 0.05);
    dev.mu = f.rng.uniform(0.5, 3.0);
  }
  f.freqs.setRandom();
  f.freqs = f.freqs.cwiseAbs();
  f.fleet_freqs = f.freqs * 2;
  f.free = {0, 2, 4, 6, 8};
  const Eigen::MatrixXd features = encode_state(f.ctx());
  CHECK(features.rows() == 10);
  CHECK(features.cols() == kPolicyFeatureCount);
  CHECK(features.minCoeff() >= 0.0);
  CHECK(features.maxCoeff() <= 1.0);
  // Availability column mirrors the free list.
  for (int i = 0; i < 10; ++i) {
    CHECK(features(i, 1) == (i % 2 == 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("a homogeneous fleet with no history encodes identical steps") {
  CtxFixture f = CtxFixture::uniform(6, 0.5, 2);
  const Eigen::MatrixXd features = encode_state(f.ctx());
  for (int i = 1; i < 6; ++i) {
    CHECK((features.row(i) - features.row(0)).norm() == 0.0);
  }
}

TEST_CASE("permuting devices permutes the encoded steps") {
  CtxFixture f = CtxFixture::uniform(5, 0.4, 3);
  for (int i = 0; i < 5; ++i) {
    f.devices[size_t(i)].a = 0.01 * (i + 1);
    f.freqs(i) = i;
    f.fleet_freqs(i) = 2 * i;
  }
  const Eigen::MatrixXd base = encode_state(f.ctx());

  CtxFixture g = CtxFixture::uniform(5, 0.4, 3);
  for (int i = 0; i < 5; ++i) {
    const int src = 4 - i;  // reverse the fleet
    g.devices[size_t(i)].a = f.devices[size_t(src)].a;
    g.freqs(i) = f.freqs(src);
    g.fleet_freqs(i) = f.fleet_freqs(src);
  }
  const Eigen::MatrixXd flipped = encode_state(g.ctx());
  for (int i = 0; i < 5; ++i) {
    CHECK((flipped.row(i) - base.row(4 - i)).norm() == 0.0);
  }
}

TEST_CASE("converter exploits, explores, and respects occupancy") {
  CtxFixture f = CtxFixture::uniform(6, 0.5, 4);
  Eigen::VectorXd probs(6);
  probs << 0.9, 0.1, 0.8, 0.2, 0.7, 0.3;

  // Pure exploitation: top-k by probability.
  auto plan = convert_probs(probs, f.ctx(), 0.0);
  REQUIRE(plan.has_value());
  CHECK(plan->devices == std::vector<int>{0, 2, 4});

  // The best device is unavailable: never selected.
  f.free = {1, 2, 3, 4, 5};
  for (int i = 0; i < 50; ++i) {
    auto masked = convert_probs(probs, f.ctx(), 0.3);
    REQUIRE(masked.has_value());
    CHECK(!masked->contains(0));
  }

  // Pure exploration is uniform over the feasible plans.
  f.free = {0, 1, 2, 3, 4, 5};
  std::vector<int> hits(6, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    auto random_plan = convert_probs(probs, f.ctx(), 1.0);
    for (int d : random_plan->devices) hits[size_t(d)]++;
  }
  for (int h : hits) CHECK(double(h) / n == doctest::Approx(0.5).epsilon(0.05));

  // Ties break toward the lower id.
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(6, 0.4);
  auto tied = convert_probs(flat, f.ctx(), 0.0);
  CHECK(tied->devices == std::vector<int>{0, 1, 2});

  f.free = {1, 2};
  CHECK_FALSE(convert_probs(probs, f.ctx(), 0.0).has_value());
}

TEST_CASE("zero advantage or zero learning rate leave the policy fixed") {
  RldsParams cfg;
  cfg.eta = 0.05;
  RldsScheduler sched(cfg, 7);
  const Eigen::VectorXd before = sched.params().flatten();

  Rng rng(8);
  Eigen::MatrixXd features(4, kPolicyFeatureCount);
  for (int i = 0; i < features.size(); ++i) features.data()[i] = rng.uniform();

  // Rewards equal to the baseline mean no advantage.
  std::vector<ReinforceSample> batch = {
      {{0, 1}, features, sched.baseline()},
      {{2, 3}, features, sched.baseline()}};
  sched.reinforce_update(batch);
  CHECK((sched.params().flatten() - before).norm() == 0.0);

  RldsParams frozen;
  frozen.eta = 0.0;
  RldsScheduler still(frozen, 7);
  const Eigen::VectorXd init = still.params().flatten();
  std::vector<ReinforceSample> moving = {{{0, 1}, features, 5.0}};
  still.reinforce_update(moving);
  CHECK((still.params().flatten() - init).norm() == 0.0);
}

TEST_CASE("baseline stays between its old value and the batch mean") {
  RldsParams cfg;
  RldsScheduler sched(cfg, 9);
  Eigen::MatrixXd features = Eigen::MatrixXd::Constant(3, kPolicyFeatureCount, 0.5);
  double prev = sched.baseline();
  Rng rng(10);
  for (int i = 0; i < 40; ++i) {
    const double reward = rng.uniform(-4.0, 0.0);
    sched.reinforce_update({{{0}, features, reward}});
    const double lo = std::min(prev, reward);
    const double hi = std::max(prev, reward);
    CHECK(sched.baseline() >= lo);
    CHECK(sched.baseline() <= hi);
    prev = sched.baseline();
  }
}

TEST_CASE("bandit: rewards favoring device zero tilt the policy") {
  RldsParams cfg;
  cfg.eta = 1.0;
  cfg.hidden = 8;
  RldsScheduler sched(cfg, 11);

  CtxFixture f = CtxFixture::uniform(2, 0.5, 12);
  for (int step = 0; step < 300; ++step) {
    const Eigen::MatrixXd features = encode_state(f.ctx());
    // Explore both arms uniformly; reward only device 0.
    auto plan = convert_probs(policy_forward(sched.params(), features),
                              f.ctx(), 1.0);
    const double reward = plan->contains(0) ? 1.0 : 0.0;
    sched.reinforce_update({{plan->devices, features, reward}});
  }
  const Eigen::VectorXd probs =
      policy_forward(sched.params(), encode_state(f.ctx()));
  CHECK(probs(0) > 0.9);
  CHECK(probs(0) > probs(1));
}

TEST_CASE("epsilon decays but never leaves its bounds") {
  RldsParams cfg;
  cfg.eps_start = 0.3;
  cfg.eps_decay = 0.9;
  cfg.eps_min = 0.05;
  RldsScheduler sched(cfg, 13);
  CtxFixture f = CtxFixture::uniform(8, 0.25, 14);
  double prev = sched.epsilon();
  for (int round = 1; round <= 60; ++round) {
    sched.schedule(f.ctx(round));
    CHECK(sched.epsilon() <= prev);
    CHECK(sched.epsilon() >= cfg.eps_min);
    CHECK(sched.epsilon() <= cfg.eps_start);
    prev = sched.epsilon();
  }
  CHECK(sched.epsilon() == doctest::Approx(cfg.eps_min));
}

TEST_CASE("pretraining skews selection toward the fast subset") {
  std::vector<DeviceProfile> devices;
  for (int i = 0; i < 10; ++i) {
    devices.push_back(DeviceProfile{i, i < 3 ? 0.002 : 0.03, 1.0, {100.0}});
  }
  JobSpec job;
  job.fraction = 0.3;
  job.beta = 0.2;

  RldsParams cfg;
  cfg.eta = 0.05;
  cfg.pretrain_rounds = 150;
  cfg.pretrain_batch = 8;
  RldsScheduler sched(cfg, 15);
  Rng rng(16);
  sched.pretrain(devices, job, mean_expected_time(devices, job), rng);

  // Greedy conversion after pretraining should prefer the fast devices.
  CtxFixture f = CtxFixture::uniform(10, 0.3, 17);
  f.devices = devices;
  const Eigen::VectorXd probs =
      policy_forward(sched.params(), encode_state(f.ctx()));
  double fast = 0.0, slow = 0.0;
  for (int i = 0; i < 10; ++i) (i < 3 ? fast : slow) += probs(i);
  CHECK(fast / 3.0 > slow / 7.0);
}

TEST_CASE("online schedule with frozen exploitation is deterministic") {
  RldsParams cfg;
  cfg.eps_start = 0.0;
  cfg.eps_min = 0.0;
  RldsScheduler sched(cfg, 18);
  CtxFixture f = CtxFixture::uniform(10, 0.3, 19);
  const auto a = sched.schedule(f.ctx());
  const auto b = sched.schedule(f.ctx());
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->devices == b->devices);
  validate_plan(*a, 10, 3);
}

TEST_CASE("rlds beats random on the time-only synthetic environment") {
  double rlds_total = 0.0, random_total = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto make_fixture = [&](std::uint64_t s) {
      CtxFixture f = CtxFixture::uniform(12, 0.25, s);
      for (int i = 0; i < 12; ++i) f.devices[size_t(i)].a = i < 3 ? 0.002 : 0.02;
      f.job.beta = 0.0;
      return f;
    };
    CtxFixture fr = make_fixture(seed);
    RldsParams cfg;
    cfg.eta = 0.05;
    cfg.pretrain_rounds = 120;
    RldsScheduler rlds(cfg, 100 + seed);
    Rng pre_rng(200 + seed);
    rlds.pretrain(fr.devices, fr.job, mean_expected_time(fr.devices, fr.job),
                  pre_rng);
    for (int round = 1; round <= 30; ++round) {
      auto plan = rlds.schedule(fr.ctx(round));
      const double cost = candidate_cost(fr.ctx(round), *plan);
      rlds_total += cost;
      rlds.observe({*plan, cost});
    }
    CtxFixture fx = make_fixture(seed);
    RandomScheduler random;
    for (int round = 1; round <= 30; ++round) {
      auto plan = random.schedule(fx.ctx(round));
      random_total += candidate_cost(fx.ctx(round), *plan);
    }
  }
  CHECK(rlds_total < random_total);
}
