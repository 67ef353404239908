#include <doctest.h>

#include <cmath>
#include <cstring>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "omab/error.hpp"
#include "omab/policy.hpp"

using namespace omab;
using Hp = boost::multiprecision::cpp_bin_float_50;

namespace {

struct Table {
  AgentRegistry registry;
  PopulationSnapshot snap;
  LocalStatsTable stats{2};

  AgentId continuing(std::vector<double> mu, std::vector<double> rho) {
    const AgentId id = add(1.0);
    const std::size_t s = registry.slot(id);
    stats.init_blank(s);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      stats.mu(s, i) = mu[i];
      stats.rho(s, i) = rho[i];
    }
    snap.continuing.push_back(id);
    return id;
  }
  AgentId arrival(double certificate) {
    const AgentId id = add(certificate);
    TransferOutcome z = zero_knowledge_init(2);
    z.certificate = certificate;
    stats.init_from(registry.slot(id), z);
    snap.arrivals.push_back(id);
    return id;
  }

 private:
  AgentId add(double certificate) {
    AgentProfile p;
    p.id = registry.next_id();
    p.mean_vector = {0.5, 0.5};
    p.certificate = certificate;
    const AgentId id = registry.add(p).id;
    snap.active.push_back(id);
    return id;
  }
};

}  // namespace

TEST_CASE("aggregate_global: single continuing agent") {
  Table t;
  t.continuing({0.4, 0.6}, {0.1, 0.1});
  const auto g = aggregate_global(t.stats, t.snap, t.registry, {});
  CHECK(g.estimate == std::vector<double>{0.4, 0.6});
  CHECK(g.stat_bonus == std::vector<double>{0.1, 0.1});
  CHECK(g.arrival_bonus == 0.0);
}

TEST_CASE("aggregate_global: arrivals feed E^A, not B^stat") {
  Table t;
  t.arrival(1.0);
  t.arrival(1.0);
  const auto g = aggregate_global(t.stats, t.snap, t.registry, {0.05, 0.0});
  CHECK(g.arrival_bonus == 2.0);
  CHECK(g.stat_bonus == std::vector<double>{0.05, 0.0});
  CHECK_THROWS_AS(aggregate_global(t.stats, t.snap, t.registry, {0.1}), InvalidParameter);
  CHECK_THROWS_AS(aggregate_global(t.stats, t.snap, t.registry, {-0.1, 0.0}), InvalidParameter);
}

TEST_CASE("aggregate_global: random 6-agent case matches a double loop") {
  Rng rng(6);
  Table t;
  double mu[6][2], rho[6][2];
  for (int m = 0; m < 6; ++m) {
    for (int i = 0; i < 2; ++i) {
      mu[m][i] = uniform01(rng);
      rho[m][i] = uniform01(rng);
    }
    t.continuing({mu[m][0], mu[m][1]}, {rho[m][0], rho[m][1]});
  }
  const auto g = aggregate_global(t.stats, t.snap, t.registry, {});
  for (int i = 0; i < 2; ++i) {
    double v = 0.0, b = 0.0;
    for (int m = 0; m < 6; ++m) {
      v += mu[m][i];
      b += rho[m][i];
    }
    CHECK(g.estimate[i] == v);
    CHECK(g.stat_bonus[i] == b);
  }
}

TEST_CASE("aggregate_global: agent without statistics") {
  Table t;
  AgentProfile p;
  p.id = t.registry.next_id();
  t.registry.add(p);
  t.snap.active.push_back(p.id);
  t.snap.continuing.push_back(p.id);
  CHECK_THROWS_AS(aggregate_global(t.stats, t.snap, t.registry, {}), InvariantViolation);
}

TEST_CASE("select_arm: examples and ties") {
  GlobalIndex g{{1.0, 0.9}, {0.05, 0.05}, 0.3};
  CHECK(select_arm(g) == 0);
  GlobalIndex tie{{0.5, 0.5, 0.5}, {0.0, 0.0, 0.0}, 0.0};
  CHECK(select_arm(tie) == 0);
  GlobalIndex later{{0.5, 0.7}, {0.0, 0.0}, 0.0};
  CHECK(select_arm(later) == 1);
}

TEST_CASE("select_arm: shift invariance on random indices") {
  Rng rng(17);
  for (int s = 0; s < 2000; ++s) {
    GlobalIndex g;
    for (int i = 0; i < 4; ++i) {
      g.estimate.push_back(std::floor(8.0 * uniform01(rng)) / 8.0);
      g.stat_bonus.push_back(std::floor(8.0 * uniform01(rng)) / 8.0);
    }
    g.arrival_bonus = std::floor(32.0 * uniform01(rng));
    CHECK(select_arm(g) == select_arm_without_arrival_bonus(g));
  }
}

TEST_CASE("update kernel: running mean") {
  LocalStatsTable s(2);
  s.init_blank(0);
  update_and_broadcast_serial(s, {0}, 1, {0.6}, 1, 2.0, 0.5);
  CHECK(s.n(0, 1) == 1);
  CHECK(s.mu(0, 1) == 0.6);
  CHECK(s.rho(0, 1) == 1.0);  // no radius update in round 1
  update_and_broadcast_serial(s, {0}, 1, {0.4}, 2, 2.0, 0.5);
  CHECK(s.n(0, 1) == 2);
  CHECK(s.mu(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.n(0, 0) == 0);
  CHECK(s.rho(0, 0) == 1.0);
}

TEST_CASE("update kernel: radius candidate against a 50-digit oracle") {
  LocalStatsTable s(1);
  s.init_blank(0);
  s.n(0, 0) = 7;
  update_and_broadcast_serial(s, {0}, 0, {0.5}, 8, 1.0, 0.5);
  const Hp oracle = sqrt(log(Hp(8)) / Hp(8));
  CHECK(std::fabs(s.rho(0, 0) - oracle.convert_to<double>()) <= 1e-15);
  CHECK(s.rho(0, 0) == doctest::Approx(0.5098).epsilon(1e-3));
}

TEST_CASE("update kernel: radius never grows") {
  LocalStatsTable s(1);
  s.init_blank(0);
  s.rho(0, 0) = 0.01;
  update_and_broadcast_serial(s, {0}, 0, {0.5}, 100, 2.0, 0.5);
  CHECK(s.rho(0, 0) == 0.01);
}

TEST_CASE("update kernel: argument errors") {
  LocalStatsTable s(1);
  s.init_blank(0);
  CHECK_THROWS_AS(update_and_broadcast(s, {0}, 0, {0.5}, 0, 2.0, 0.5), InvalidParameter);
  CHECK_THROWS_AS(update_and_broadcast(s, {0}, 0, {}, 1, 2.0, 0.5), InvalidParameter);
}

TEST_CASE("update kernel: OpenMP path is bit-identical to the serial reference") {
  const std::size_t agents = 20000;
  LocalStatsTable a(3), b(3);
  std::vector<std::size_t> slots(agents);
  for (std::size_t j = 0; j < agents; ++j) {
    slots[j] = j;
    a.init_blank(j);
    b.init_blank(j);
  }
  Rng rng(2);
  std::vector<double> rewards(agents);
  for (int t = 1; t <= 30; ++t) {
    for (auto& r : rewards) r = uniform01(rng);
    update_and_broadcast_serial(a, slots, t % 3, rewards, t, 2.0, 0.5);
    update_and_broadcast(b, slots, t % 3, rewards, t, 2.0, 0.5);
  }
  bool same = true;
  for (std::size_t j = 0; j < agents; ++j) {
    for (std::size_t i = 0; i < 3; ++i) {
      const double x = a.mu(j, i), y = b.mu(j, i), r = a.rho(j, i), q = b.rho(j, i);
      same = same && a.n(j, i) == b.n(j, i) && std::memcmp(&x, &y, sizeof x) == 0 &&
             std::memcmp(&r, &q, sizeof r) == 0;
    }
  }
  CHECK(same);
}

TEST_CASE("clustered_burnin_arm: round robin with wraparound") {
  CHECK(clustered_burnin_arm(1, 4) == 0);
  CHECK(clustered_burnin_arm(4, 4) == 3);
  CHECK(clustered_burnin_arm(5, 4) == 0);
  CHECK_THROWS_AS(clustered_burnin_arm(0, 4), InvalidParameter);
}

TEST_CASE("clustered_bonus") {
  const auto b = clustered_bonus({3.0}, {{10}}, 8, 1.0, 1.0, 1);
  CHECK(b[0] == doctest::Approx(3.0 * std::log(8.0) / 10.0).epsilon(1e-14));
  CHECK(b[0] == doctest::Approx(0.6238).epsilon(1e-3));
  CHECK(clustered_bonus({}, {}, 8, 1.0, 1.0, 2) == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(clustered_bonus({1.0}, {}, 8, 1.0, 1.0, 1), InvalidParameter);
}

TEST_CASE("validate_policy") {
  CHECK_THROWS_AS(validate_policy(ClusteredUcb{2.0, 0.0, 0}, 2, 10), InvalidParameter);
  CHECK_THROWS_AS(validate_policy(CertifiedGlobalUcb{0.0, 0.5, {}, 0.0}, 2, 10), InvalidParameter);
  CHECK_THROWS_AS(validate_policy(CertifiedGlobalUcb{2.0, 0.5, {0.1, 0.1, 0.1}, 0.0}, 2, 10),
                  InvalidParameter);
  CHECK_THROWS_AS(validate_policy(FixedArmPolicy{2}, 2, 10), InvalidParameter);
  CHECK_THROWS_AS(validate_policy(CommitAfterBurnin{11, std::nullopt}, 2, 10), InvalidParameter);
  CHECK_NOTHROW(validate_policy(CommitAfterBurnin{1, AdaptiveBurnin{}}, 2, 10));
  CHECK(policy_name(RoundRobinPolicy{}) == "round_robin");
}
