#include <doctest.h>

#include "omab/csv.hpp"
#include "omab/error.hpp"
#include "omab/replication.hpp"

using namespace omab;

namespace {

InstanceSpec tabular(std::size_t arms, std::uint64_t seed, double departures = 0.3) {
  RandomTabularParams p;
  p.num_arms = arms;
  p.horizon = 150;
  p.initial_size = 5;
  p.departure_rate = departures;
  p.seed = seed;
  return gen_random_tabular(p);
}

}  // namespace

TEST_CASE("oracle pulls the optimal arm every round") {
  const auto r = simulate(tabular(3, 2), OraclePolicy{}, 9);
  for (const auto& rec : r.records) {
    if (rec.arm) CHECK(*rec.arm == *rec.optimal);
  }
  CHECK(r.totals.r_round == 0.0);
  CHECK(r.totals.rbar_agentsum == 0.0);
}

TEST_CASE("single arm: always arm 1 and zero regret") {
  const auto r = simulate(tabular(1, 3), CertifiedGlobalUcb{}, 4);
  for (const auto& rec : r.records) {
    if (rec.arm) CHECK(*rec.arm == 0);
  }
  CHECK(r.totals.r_agentsum == 0.0);
}

TEST_CASE("fixed schedule and seed give a byte-identical record stream") {
  PivotalParams p;
  p.horizon = 80;
  for (std::int64_t t = 2; t <= 80; t += 4) p.arrivals.entries.push_back({t, 1, 0});
  p.p_schedule = {0.2};
  const auto spec = gen_pivotal(p);
  const auto a = simulate(spec, CertifiedGlobalUcb{}, 5);
  const auto b = simulate(spec, CertifiedGlobalUcb{}, 5);
  CHECK(records_to_csv(a.records, 2) == records_to_csv(b.records, 2));
}

TEST_CASE("parallel update option matches the serial kernel") {
  SimOptions par;
  par.parallel_update = true;
  const auto spec = tabular(3, 6);
  CHECK(records_to_csv(simulate(spec, CertifiedGlobalUcb{}, 1).records, 3) ==
        records_to_csv(simulate(spec, CertifiedGlobalUcb{}, 1, par).records, 3));
}

TEST_CASE("commit after K noiseless round-robin rounds identifies the best arm") {
  auto spec = gen_stable_pair(StablePairParams{0.1, 50, 5, 1.0, 3}).first;
  spec.model.noise = GaussianNoise{1e-12};
  const auto r = simulate(spec, CommitAfterBurnin{2, std::nullopt}, 7);
  REQUIRE(r.committed_arm);
  CHECK(*r.committed_arm == r.records[1].optimal.value());
  CHECK(*r.commit_round == 2);
  CHECK(r.post_commit_rbar == 0.0);
  CHECK(*r.good_event);
}

TEST_CASE("commit at round 1 with two arms is undefined") {
  const auto spec = gen_stable_pair(StablePairParams{0.1, 50, 5, 1.0, 3}).first;
  CHECK_THROWS_AS(simulate(spec, CommitAfterBurnin{1, std::nullopt}, 7), UndefinedEstimate);
}

TEST_CASE("empty population rounds carry zero regret and no arm") {
  AgentPattern pattern;
  pattern.process = SchedulePattern{{{1, 0, 5}, {3, 1, 0}}};
  auto spec = tabular(2, 1);
  spec.pattern = pattern;
  spec.horizon = 4;
  const auto r = simulate(spec, CertifiedGlobalUcb{}, 1);
  CHECK(r.sizes == std::vector<std::size_t>{0, 0, 1, 1});
  CHECK_FALSE(r.records[0].arm.has_value());
  CHECK(r.records[0].regret.r_round == 0.0);
  CHECK(r.records[2].arm.has_value());
  CHECK(r.records[2].ea == 1.0);
}

TEST_CASE("a corrupted kernel is used when injected") {
  SimOptions opts;
  bool called = false;
  opts.update_kernel = [&](LocalStatsTable&, const std::vector<std::size_t>&, std::size_t,
                           const std::vector<double>&, std::int64_t, double, double) {
    called = true;
  };
  simulate(tabular(2, 2), CertifiedGlobalUcb{}, 3, opts);
  CHECK(called);
}

TEST_CASE("step past the horizon") {
  auto spec = tabular(2, 1);
  spec.horizon = 1;
  Simulation sim(spec, OraclePolicy{}, 1);
  sim.step();
  CHECK(sim.done());
  CHECK_THROWS_AS(sim.step(), InvalidParameter);
}

TEST_CASE("replications: serial and parallel agree, exceptions propagate") {
  const auto spec = tabular(2, 8);
  const auto a = run_replications(spec, UniformRandomPolicy{}, 4, 11, false);
  const auto b = run_replications(spec, UniformRandomPolicy{}, 4, 11, true);
  REQUIRE(a.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) CHECK(a[r].totals.r_round == b[r].totals.r_round);
  CHECK(a[0].totals.r_round != a[1].totals.r_round);
  CHECK_THROWS_AS(run_replications(3, 1, true,
                                   [](std::size_t r, std::uint64_t) -> RunResult {
                                     if (r == 1) throw InvalidParameter("boom");
                                     return {};
                                   }),
                  InvalidParameter);
}

TEST_CASE("certificates hold for pretrained arrivals with honest radii") {
  PivotalParams p;
  p.horizon = 60;
  for (std::int64_t t = 1; t <= 60; t += 2) p.arrivals.entries.push_back({t, 1, 0});
  p.p_schedule = {0.3};
  const auto r = simulate(gen_pivotal(p), CertifiedGlobalUcb{}, 2);
  CHECK(r.arrivals_total == 30);
  CHECK(r.certificate_violations == 0);
  CHECK(r.arrival_error_sum == doctest::Approx(30 * 0.3));
}
