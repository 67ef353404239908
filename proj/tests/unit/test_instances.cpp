#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "omab/error.hpp"
#include "omab/metrics.hpp"
#include "omab/simulation.hpp"

using namespace omab;

namespace {

PivotalParams one_arrival(int sign) {
  PivotalParams p;
  p.horizon = 5;
  p.initial_size = 4;
  p.arrivals.entries = {{3, 1, 0}};
  p.p_schedule = {0.25};
  p.signs = std::vector<int>{sign};
  return p;
}

}  // namespace

TEST_CASE("gen_pivotal: arrival means and entry error") {
  for (int sign : {1, -1}) {
    const auto spec = gen_pivotal(one_arrival(sign));
    const auto& arrival = spec.factory.agents.back();
    CHECK(arrival.means == (sign > 0 ? std::vector<double>{0.75, 0.5}
                                     : std::vector<double>{0.5, 0.75}));
    REQUIRE(arrival.pretrained);
    CHECK(pretraining_error(arrival.pretrained->estimates, arrival.means).error == 0.25);
    CHECK(arrival.pretrained->radius == 0.25);
  }
  PivotalParams bad = one_arrival(1);
  bad.p_schedule = {0.6};
  CHECK_THROWS_AS(gen_pivotal(bad), InvalidParameter);
  bad = one_arrival(2);
  CHECK_THROWS_AS(gen_pivotal(bad), InvalidParameter);
}

TEST_CASE("gen_pivotal: a sign-blind choice loses P/2 on average") {
  for (const PolicyKind& policy :
       {PolicyKind{FixedArmPolicy{0}}, PolicyKind{FixedArmPolicy{1}},
        PolicyKind{CertifiedGlobalUcb{}}, PolicyKind{RoundRobinPolicy{}}}) {
    double total = 0.0;
    for (int sign : {1, -1}) {
      const auto r = simulate(gen_pivotal(one_arrival(sign)), policy, 7);
      total += r.records[2].regret.r_round;  // the arrival round
    }
    CHECK(total / 2.0 >= 0.5 * 0.25 - 1e-12);
  }
}

TEST_CASE("gen_zero_knowledge_blocks") {
  BlocksParams p;
  p.horizon = 2000;
  const auto spec = gen_zero_knowledge_blocks(p);
  CHECK(spec.latent.block_length == 2);
  CHECK(spec.latent.block_z.size() == 1000);
  CHECK(spec.transfer.mode == TransferMode::zero_knowledge);
  BlocksParams flat = p;
  flat.gap = 0.0;
  flat.horizon = 50;
  const auto degenerate = gen_zero_knowledge_blocks(flat);
  for (const auto& a : degenerate.factory.agents) CHECK(a.means[0] == a.means[1]);
}

TEST_CASE("gen_zero_knowledge_blocks: good-block frequency") {
  BlocksParams p;
  p.horizon = 20000;  // 10^4 blocks
  std::size_t good = 0, blocks = 0;
  const auto spec = gen_zero_knowledge_blocks(p);
  for (int g : spec.latent.block_good) {
    good += g;
    ++blocks;
  }
  REQUIRE(blocks == 10000);
  const double freq = static_cast<double>(good) / static_cast<double>(blocks);
  CHECK(std::fabs(freq - p_good_block(0.5, 2, 0.5)) <= 0.006);
}

TEST_CASE("gen_stable_pair") {
  const auto [nu, nu_prime] = gen_stable_pair(StablePairParams{0.1, 100, 5, 1.0, 1});
  CHECK(nu.factory.template_means[0] == doctest::Approx(0.6));
  CHECK(nu.factory.template_means[1] == doctest::Approx(0.5));
  CHECK(nu_prime.factory.template_means[1] == doctest::Approx(0.7));
  CHECK(argmax_lowest(nu.factory.template_means) == 0);
  CHECK(argmax_lowest(nu_prime.factory.template_means) == 1);
  CHECK(bernoulli_kl(0.5, 0.5 + 2.0 * 0.1) ==
        doctest::Approx(0.5 * std::log(0.5 / 0.7) + 0.5 * std::log(0.5 / 0.3)).epsilon(1e-14));
  CHECK_THROWS_AS(gen_stable_pair(StablePairParams{0.3, 100, 5, 1.0, 1}), InvalidParameter);
}

TEST_CASE("gen_clustered: one cluster is homogeneous, unseen clusters are zero-knowledge") {
  ClusteredParams one;
  one.theta = {{0.3, 0.6}};
  one.rates = {1.0};
  one.initial_composition = {4};
  one.horizon = 30;
  const auto r = simulate(gen_clustered(one), CertifiedGlobalUcb{}, 1);
  for (const auto& rec : r.records) {
    CHECK(rec.optimal.value() == 1);
    CHECK(rec.gap.value() == doctest::Approx(0.3));
  }

  ClusteredParams two;
  two.theta = {{0.3, 0.6}, {0.9, 0.1}};
  two.rates = {0.01, 1.0};
  two.initial_composition = {3, 0};
  two.horizon = 3;
  Simulation sim(gen_clustered(two), CertifiedGlobalUcb{}, 4);
  const auto& rec = sim.step();
  if (rec.arrivals > 0) CHECK(rec.arrival_certificate == static_cast<double>(rec.arrivals));
}

TEST_CASE("gen_clustered: continuous first-appearance bound") {
  ClusteredParams p;
  p.theta = {{0.2, 0.8}, {0.5, 0.5}, {0.8, 0.2}};
  p.rates = {0.5, 0.5, 0.5};
  p.initial_composition = {0, 0, 0};
  p.horizon = 200;
  const auto spec = gen_clustered(p);
  const double bound = 2.0 * std::log(60.0);
  CHECK(bound == doctest::Approx(8.188).epsilon(1e-3));
  std::size_t exceed = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto first = first_appearance_times(spec, replication_seed(99, seed), true);
    exceed += *std::max_element(first.begin(), first.end()) > bound;
  }
  CHECK(exceed <= 50);
}

TEST_CASE("gen_linear: d = 1 with x = 1 reduces to a table") {
  LinearParams p;
  p.dim = 1;
  p.num_arms = 2;
  p.theta = {{0.3}, {0.7}};
  p.horizon = 10;
  const auto spec = gen_linear(p);
  AgentProfile a;
  a.features = std::vector<double>{1.0};
  CHECK(mean_of(spec.model, a, 0) == 0.3);
  CHECK(mean_of(spec.model, a, 1) == 0.7);
}

TEST_CASE("serialization round-trip and rejection") {
  const auto spec = gen_stable_clustered(300, 5);
  const std::string text = serialize_instance(spec);
  const auto back = parse_instance(text);
  CHECK(serialize_instance(back) == text);
  CHECK(back.num_arms == 2);
  CHECK(back.latent.base_gap == doctest::Approx(0.6));
  CHECK_THROWS(parse_instance("{ not json"));
  CHECK_THROWS(parse_instance("{\"num_arms\": 0}"));

  const auto path = std::filesystem::temp_directory_path() / "omab_unit_instance.json";
  save_instance(spec, path.string());
  CHECK(serialize_instance(load_instance(path.string())) == text);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_instance("/nonexistent/instance.json"), IoError);
}

TEST_CASE("instance validation") {
  InstanceSpec s = gen_stable_clustered(100, 1);
  s.horizon = 0;
  CHECK_THROWS(s.validate());
  s = gen_stable_clustered(100, 1);
  s.model.num_arms = 3;
  CHECK_THROWS(s.validate());
}
