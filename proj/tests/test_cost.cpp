#include "fedsched/cost.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fedsched;

namespace {

DeviceProfile device(int id, double a, double mu, double d) {
  return DeviceProfile{id, a, mu, {d}};
}

JobSpec job_with(double tau, double alpha = 1.0, double beta = 1.0) {
  JobSpec job;
  job.local_epochs = int(tau);
  job.alpha = alpha;
  job.beta = beta;
  return job;
}

}  // namespace

TEST_CASE("sampled time never falls below the deterministic minimum") {
  const DeviceProfile dev = device(0, 0.01, 1.0, 100.0);
  const JobSpec job = job_with(5);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(sample_device_time(dev, job, rng) >= 5.0);
  }
}

TEST_CASE("sampled time mean matches shift + 1/rate") {
  const DeviceProfile dev = device(0, 0.01, 2.0, 100.0);
  const JobSpec job = job_with(5);
  Rng rng(2);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += sample_device_time(dev, job, rng);
  // shift 5*0.01*100 = 5, tail mean tau*D/mu = 250.
  CHECK(sum / n == doctest::Approx(255.0).epsilon(0.01));
}

TEST_CASE("empirical CDF tracks the closed form") {
  const DeviceProfile dev = device(0, 0.02, 1.5, 80.0);
  const JobSpec job = job_with(3);
  Rng rng(3);
  const int n = 100000;
  std::vector<double> draws(n);
  for (auto& t : draws) t = sample_device_time(dev, job, rng);
  std::sort(draws.begin(), draws.end());

  const double tau_d = 3.0 * 80.0;
  const double shift = tau_d * 0.02;
  const double rate = 1.5 / tau_d;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double model = 1.0 - std::exp(-rate * (draws[size_t(i)] - shift));
    const double lo = double(i) / n, hi = double(i + 1) / n;
    worst = std::max(worst, std::max(std::abs(model - lo), std::abs(model - hi)));
  }
  CHECK(worst <= 0.02);
}

TEST_CASE("zero dataset size is an error") {
  const DeviceProfile dev = device(0, 0.01, 1.0, 0.0);
  const JobSpec job = job_with(5);
  Rng rng(4);
  CHECK_THROWS_AS(sample_device_time(dev, job, rng), std::invalid_argument);
  CHECK_THROWS_AS(expected_device_time(dev, job), std::invalid_argument);
}

TEST_CASE("expected device time") {
  const JobSpec job = job_with(5);
  CHECK(expected_device_time(device(0, 0.01, 2.0, 100.0), job) ==
        doctest::Approx(255.0));
  // The fluctuation term vanishes as mu grows.
  CHECK(expected_device_time(device(0, 0.01, 1e12, 100.0), job) ==
        doctest::Approx(5.0).epsilon(1e-6));
  // Linear in the dataset size.
  const double t1 = expected_device_time(device(0, 0.01, 2.0, 100.0), job);
  const double t2 = expected_device_time(device(0, 0.01, 2.0, 200.0), job);
  CHECK(t2 == doctest::Approx(2.0 * t1));
}

TEST_CASE("round time is the max and rejects empty plans") {
  const std::vector<double> one = {5.0};
  CHECK(round_time(one) == 5.0);
  std::vector<double> several = {3.0, 7.5, 4.2};
  CHECK(round_time(several) == 7.5);
  std::sort(several.rbegin(), several.rend());
  CHECK(round_time(several) == 7.5);
  several.push_back(9.9);  // adding a device never decreases it
  CHECK(round_time(several) == 9.9);
  CHECK_THROWS_AS(round_time(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("fairness variance of the hypothetical post-plan counts") {
  FrequencyVector s(3);
  s << 1, 0, 1;
  // Post-plan counts [2, 0, 1], mean 1, population variance 2/3.
  CHECK(fairness_cost(s, {0, 1, {0}}) == doctest::Approx(2.0 / 3.0));
  CHECK(s(0) == 1);  // input untouched

  FrequencyVector equal(4);
  equal << 2, 2, 2, 2;
  CHECK(fairness_cost(equal, {0, 1, {}}) == doctest::Approx(0.0));

  FrequencyVector two(2);
  two << 0, 3;
  CHECK(fairness_cost(two, {0, 1, {1}}) == doctest::Approx(4.0));
}

TEST_CASE("fairness is invariant under device relabeling") {
  FrequencyVector s(4);
  s << 5, 1, 2, 0;
  const double base = fairness_cost(s, {0, 1, {1, 3}});
  FrequencyVector permuted(4);
  permuted << 0, 2, 1, 5;  // reversed labels
  const double flipped = fairness_cost(permuted, {0, 1, {0, 2}});
  CHECK(base == doctest::Approx(flipped));
}

TEST_CASE("round cost composition and the dynamic fairness weight") {
  const std::vector<DeviceProfile> devices = {
      device(0, 0.01, 1.0, 100.0), device(1, 0.02, 1.0, 100.0),
      device(2, 0.04, 1.0, 100.0)};
  FrequencyVector s = FrequencyVector::Zero(3);
  JobSpec job = job_with(1, 1.0, 0.0);
  const SchedulingPlan plan{0, 1, {0, 1}};

  const CostBreakdown time_only =
      round_cost(plan, job, devices, s, 1, false);
  CHECK(time_only.weighted_total == doctest::Approx(time_only.time_term));
  CHECK(time_only.time_term ==
        doctest::Approx(expected_device_time(devices[1], job)));

  job.alpha = 0.0;
  job.beta = 1.0;
  FrequencyVector balanced(3);
  balanced << 1, 1, 2;  // plan {0,1} equalizes the counts
  const CostBreakdown fair_only =
      round_cost(plan, job, devices, balanced, 1, false);
  CHECK(fair_only.weighted_total == doctest::Approx(0.0));

  job.beta = 0.5;
  const CostBreakdown dyn = round_cost(plan, job, devices, s, 4, true);
  CHECK(dyn.beta_eff == doctest::Approx(1.0));  // 0.5 * sqrt(4)

  const CostBreakdown dyn1 = round_cost(plan, job, devices, s, 1, true);
  const CostBreakdown stat1 = round_cost(plan, job, devices, s, 1, false);
  CHECK(dyn1.weighted_total == doctest::Approx(stat1.weighted_total));

  CHECK_THROWS_AS(round_cost({0, 1, {}}, job, devices, s, 1, false),
                  std::invalid_argument);
}

TEST_CASE("cost breakdown identity holds exactly") {
  const std::vector<DeviceProfile> devices = {
      device(0, 0.013, 0.7, 90.0), device(1, 0.021, 1.3, 110.0),
      device(2, 0.008, 2.1, 70.0)};
  FrequencyVector s(3);
  s << 4, 0, 2;
  JobSpec job = job_with(2, 0.8, 1.7);
  const CostBreakdown bd =
      round_cost({0, 1, {0, 2}}, job, devices, s, 9, true, Omega::Sqrt, 3.7);
  CHECK(bd.weighted_total ==
        job.alpha * bd.time_term + bd.beta_eff * bd.fairness_term);
}

TEST_CASE("total cost adds per-job terms and rejects overlap") {
  const std::vector<DeviceProfile> devices = {
      DeviceProfile{0, 0.01, 1.0, {100.0, 50.0}},
      DeviceProfile{1, 0.02, 1.0, {100.0, 50.0}},
      DeviceProfile{2, 0.04, 1.0, {100.0, 50.0}},
      DeviceProfile{3, 0.03, 2.0, {100.0, 50.0}}};
  std::vector<JobSpec> jobs(2);
  jobs[0] = job_with(1);
  jobs[0].id = 0;
  jobs[1] = job_with(2);
  jobs[1].id = 1;
  std::vector<FrequencyVector> counts(2, FrequencyVector::Zero(4));

  const SchedulingPlan p0{0, 1, {0, 1}};
  const SchedulingPlan p1{1, 1, {2, 3}};
  const double both = total_cost({p0, p1}, jobs, devices, counts, 1, false);
  const double first = total_cost({p0}, jobs, devices, counts, 1, false);
  const double second = total_cost({p1}, jobs, devices, counts, 1, false);
  CHECK(both == doctest::Approx(first + second));

  // Changing job 1's plan leaves job 0's term untouched.
  const SchedulingPlan p1b{1, 1, {2}};
  const double swapped = total_cost({p0, p1b}, jobs, devices, counts, 1, false);
  CHECK(swapped - first ==
        doctest::Approx(total_cost({p1b}, jobs, devices, counts, 1, false)));

  CHECK_THROWS_AS(
      total_cost({p0, SchedulingPlan{1, 1, {1, 2}}}, jobs, devices, counts, 1,
                 false),
      std::invalid_argument);
}

TEST_CASE("loss curve evaluation") {
  CHECK(loss_estimate(1, 1.0, 1.0, 0.0) == doctest::Approx(0.5));
  CHECK(loss_estimate(1e12, 1.0, 1.0, 0.25) == doctest::Approx(0.25));
  for (int r = 1; r < 50; ++r) {
    CHECK(loss_estimate(r + 1, 0.5, 1.0, 0.1) < loss_estimate(r, 0.5, 1.0, 0.1));
  }
  CHECK_THROWS_AS(loss_estimate(3, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("round cap estimation") {
  JobSpec job;
  job.gamma0 = 1.0;
  job.gamma1 = 1.0;
  job.gamma2 = 0.0;
  job.target_loss = 0.1;
  CHECK(invert_loss_curve(job) == 9);
  CHECK(estimate_round_cap(job) == 12);  // ceil(1.3 * 9)

  job.target_loss = loss_estimate(1, 1.0, 1.0, 0.0);
  CHECK(invert_loss_curve(job) == 1);
  CHECK(estimate_round_cap(job) == 2);
  // The curve can reach the cap's implied loss.
  CHECK(loss_estimate(invert_loss_curve(job), 1.0, 1.0, 0.0) <=
        job.target_loss);

  job.target_loss = 0.0;
  CHECK_THROWS_AS(estimate_round_cap(job), std::invalid_argument);

  job.gamma0 = 0.0;
  job.gamma1 = 2.0;
  job.target_loss = 0.1;  // flat curve at 0.5 never gets there
  CHECK_THROWS_AS(estimate_round_cap(job), std::invalid_argument);
}

TEST_CASE("omega variants") {
  CHECK(omega_value(Omega::Sqrt, 4) == doctest::Approx(2.0));
  CHECK(omega_value(Omega::Linear, 4) == doctest::Approx(4.0));
  CHECK(omega_value(Omega::Log, 1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(omega_value(Omega::Sqrt, 0), std::invalid_argument);
}
