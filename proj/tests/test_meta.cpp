#include "fedsched/meta.hpp"

#include <doctest.h>

#include "test_util.hpp"

using namespace fedsched;
using testing::CtxFixture;

namespace {

std::unique_ptr<MetaGreedyScheduler> meta_of(
    std::vector<std::string> methods, int k,
    std::uint64_t policy_seed = 1) {
  std::vector<std::unique_ptr<Scheduler>> parts;
  for (const auto& m : methods) {
    if (m == "random") parts.push_back(std::make_unique<RandomScheduler>());
    if (m == "greedy") parts.push_back(std::make_unique<GreedyScheduler>());
    if (m == "fedcs") parts.push_back(std::make_unique<FedCsScheduler>());
    if (m == "genetic") {
      parts.push_back(std::make_unique<GeneticScheduler>(GaParams{10, 5, 0.1, 2}));
    }
    if (m == "bods") {
      parts.push_back(std::make_unique<BodsScheduler>(k, BodsParams{4, 16, 64, 1e-6}));
    }
    if (m == "rlds") {
      parts.push_back(std::make_unique<RldsScheduler>(RldsParams{}, policy_seed));
    }
  }
  return std::make_unique<MetaGreedyScheduler>(
      MetaParams{std::move(methods), Omega::Sqrt}, std::move(parts));
}

}  // namespace

TEST_CASE("recost reduces to the static cost at round one") {
  CtxFixture f = CtxFixture::uniform(8, 0.25, 1);
  f.job.beta = 0.7;
  const SchedulingPlan plan{0, 1, {0, 3}};
  const double dynamic =
      recost(plan, f.job, f.devices, f.freqs, 1, Omega::Sqrt, 1.0);
  const double stat =
      round_cost(plan, f.job, f.devices, f.freqs, 1, false).weighted_total;
  CHECK(dynamic == doctest::Approx(stat));
}

TEST_CASE("recost applies the omega-scaled fairness weight") {
  CtxFixture f = CtxFixture::uniform(8, 0.25, 2);
  f.job.alpha = 0.0;
  f.job.beta = 0.5;
  const SchedulingPlan plan{0, 4, {0, 3}};
  const double fair = fairness_cost(f.freqs, plan);
  CHECK(recost(plan, f.job, f.devices, f.freqs, 4, Omega::Sqrt, 1.0) ==
        doctest::Approx(1.0 * fair));  // beta * sqrt(4) = 1

  // The log variant zeroes the fairness influence at round one.
  f.job.alpha = 1.0;
  const double log_r1 =
      recost(plan, f.job, f.devices, f.freqs, 1, Omega::Log, 1.0);
  const double time_only =
      round_cost(plan, f.job, f.devices, f.freqs, 1, false).time_term;
  CHECK(log_r1 == doctest::Approx(time_only));

  CHECK_THROWS_AS(recost(plan, f.job, f.devices, f.freqs, 0, Omega::Sqrt, 1.0),
                  std::invalid_argument);
}

TEST_CASE("the selected candidate is the recost argmin") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CtxFixture f = CtxFixture::uniform(14, 0.3, seed);
    for (auto& dev : f.devices) {
      dev.a = f.rng.uniform(0.005, 0.05);
      dev.mu = f.rng.uniform(0.5, 3.0);
    }
    auto meta = meta_of({"greedy", "fedcs", "random"}, 14);
    auto plan = meta->schedule(f.ctx(3));
    REQUIRE(plan.has_value());
    REQUIRE(!meta->last_candidates().empty());
    for (const auto& candidate : meta->last_candidates()) {
      CHECK(meta->last_selected_recost() <= candidate.recost);
    }
    const double chosen =
        recost(*plan, f.job, f.devices, f.freqs, 3, Omega::Sqrt, 1.0);
    CHECK(chosen == doctest::Approx(meta->last_selected_recost()));
  }
}

TEST_CASE("with only random enabled, meta equals random plan for plan") {
  CtxFixture a = CtxFixture::uniform(12, 0.25, 77);
  CtxFixture b = CtxFixture::uniform(12, 0.25, 77);
  auto meta = meta_of({"random"}, 12);
  RandomScheduler random;
  for (int round = 1; round <= 20; ++round) {
    auto lhs = meta->schedule(a.ctx(round));
    auto rhs = random.schedule(b.ctx(round));
    REQUIRE(lhs.has_value());
    REQUIRE(rhs.has_value());
    CHECK(lhs->devices == rhs->devices);
    CHECK(meta->last_selected_method() == "random");
  }
}

TEST_CASE("identical plans from two methods keep the higher-priority tag") {
  // Greedy and FedCS with a tiny deadline produce the same plan; greedy is
  // listed first, so the tag must be greedy.
  CtxFixture f = CtxFixture::with_times({9.0, 2.0, 5.0, 1.0}, 0.5, 5);
  std::vector<std::unique_ptr<Scheduler>> parts;
  parts.push_back(std::make_unique<GreedyScheduler>());
  parts.push_back(std::make_unique<FedCsScheduler>(1.5, 1e-9));
  MetaGreedyScheduler meta(MetaParams{{"greedy", "fedcs"}, Omega::Sqrt},
                           std::move(parts));
  auto plan = meta.schedule(f.ctx());
  REQUIRE(plan.has_value());
  REQUIRE(meta.last_candidates().size() == 2);
  CHECK(meta.last_candidates()[0].plan.devices ==
        meta.last_candidates()[1].plan.devices);
  CHECK(meta.last_selected_method() == "greedy");
}

TEST_CASE("feedback reaches bods always, rlds only when it won") {
  const int k = 8;
  CtxFixture f = CtxFixture::uniform(k, 0.25, 6);
  std::vector<std::unique_ptr<Scheduler>> parts;
  auto bods_ptr = std::make_unique<BodsScheduler>(k, BodsParams{2, 8, 64, 1e-6});
  BodsScheduler* bods = bods_ptr.get();
  RldsParams rlds_cfg;
  rlds_cfg.eta = 0.5;
  auto rlds_ptr = std::make_unique<RldsScheduler>(rlds_cfg, 7);
  RldsScheduler* rlds = rlds_ptr.get();
  parts.push_back(std::move(bods_ptr));
  parts.push_back(std::make_unique<GreedyScheduler>());
  parts.push_back(std::move(rlds_ptr));
  MetaGreedyScheduler meta(MetaParams{{"bods", "greedy", "rlds"}, Omega::Sqrt},
                           std::move(parts));

  for (int round = 1; round <= 6; ++round) {
    auto plan = meta.schedule(f.ctx(round));
    REQUIRE(plan.has_value());
    const Eigen::VectorXd theta_before = rlds->params().flatten();
    meta.observe({*plan, 1.0 + round});
    CHECK(int(bods->observations().size()) == round);
    if (meta.last_selected_method() != "rlds") {
      // A non-winning RLDS receives no update (theta would move otherwise,
      // since the reward is far from the zero baseline).
      CHECK((rlds->params().flatten() - theta_before).norm() == 0.0);
    }
  }
}

TEST_CASE("meta needs at least one constituent") {
  CHECK_THROWS_AS(
      MetaGreedyScheduler(MetaParams{}, {}),
      std::invalid_argument);
}
