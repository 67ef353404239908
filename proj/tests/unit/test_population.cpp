#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "omab/error.hpp"
#include "omab/population.hpp"

using namespace omab;

namespace {

AgentFactory flat_factory(std::size_t arms = 2) {
  return [arms](const ArrivalContext&, Rng&) {
    AgentProfile p;
    p.mean_vector.assign(arms, 0.5);
    return p;
  };
}

AgentPattern schedule(std::vector<ScheduleEntry> entries) {
  AgentPattern p;
  p.process = SchedulePattern{std::move(entries)};
  return p;
}

}  // namespace

TEST_CASE("poisson_sample: rate 0 is degenerate and leaves the stream alone") {
  Rng a(3), b(3);
  CHECK(poisson_sample(0.0, a) == 0);
  CHECK(a() == b());
}

TEST_CASE("poisson_sample: negative rate rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(poisson_sample(-0.1, rng), InvalidParameter);
}

TEST_CASE("poisson_sample: moments at rate 3") {
  Rng rng(11);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(poisson_sample(3.0, rng));
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.05 / 3.0));
  CHECK(sq / n - mean * mean == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("poisson_sample: P(X = 0) at rate 0.5") {
  Rng rng(12);
  const int n = 100000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) zeros += poisson_sample(0.5, rng) == 0;
  CHECK(std::fabs(static_cast<double>(zeros) / n - std::exp(-0.5)) <= 0.01);
}

TEST_CASE("step_population: documented size arithmetic") {
  PopulationState state;
  StreamSet streams(1);
  SUBCASE("5 + 2 - 3 = 4") {
    const auto pattern = schedule({{1, 2, 3}});
    auto snap = initial_population(5, pattern, flat_factory(), state, streams);
    snap = step_population(snap, pattern, flat_factory(), state, streams);
    CHECK(snap.size() == 4);
    CHECK(snap.arrivals.size() == 2);
    CHECK(snap.departures.size() == 3);
    CHECK(snap.continuing.size() == 2);
  }
  SUBCASE("1 + 0 - 3 clamps to 0") {
    const auto pattern = schedule({{1, 0, 3}});
    auto snap = initial_population(1, pattern, flat_factory(), state, streams);
    snap = step_population(snap, pattern, flat_factory(), state, streams);
    CHECK(snap.size() == 0);
    CHECK(snap.departures.size() == 1);
  }
}

TEST_CASE("step_population: closed system keeps the initial set") {
  AgentPattern pattern;
  pattern.process = PoissonPattern{0.0, 0.0};
  PopulationState state;
  StreamSet streams(5);
  const auto first = initial_population(7, pattern, flat_factory(), state, streams);
  auto snap = first;
  for (int t = 0; t < 50; ++t) snap = step_population(snap, pattern, flat_factory(), state, streams);
  CHECK(snap.active == first.active);
  CHECK(snap.round == 50);
}

TEST_CASE("step_population: ids are fresh and partitions hold") {
  AgentPattern pattern;
  pattern.process = PoissonPattern{2.0, 1.5};
  PopulationState state;
  StreamSet streams(8);
  auto prev = initial_population(4, pattern, flat_factory(), state, streams);
  std::set<AgentId> ever(prev.active.begin(), prev.active.end());
  for (int t = 0; t < 300; ++t) {
    auto cur = step_population(prev, pattern, flat_factory(), state, streams);
    CHECK_NOTHROW(check_snapshot(prev, cur));
    for (AgentId id : cur.arrivals) CHECK(ever.insert(id).second);
    prev = std::move(cur);
  }
}

TEST_CASE("check_snapshot: detects a broken partition") {
  PopulationSnapshot prev, cur;
  prev.active = {0, 1};
  cur.round = 1;
  cur.active = {0, 1, 2};
  cur.continuing = {0, 1};
  CHECK_THROWS_AS(check_snapshot(prev, cur), InvariantViolation);
}

TEST_CASE("lifetimes: fixed length departs at arrival + L") {
  AgentPattern pattern = schedule({{1, 1, 0}});
  pattern.lifetime = LifetimeLaw{LifetimeLaw::Kind::fixed, 0.5, 3};
  PopulationState state;
  StreamSet streams(2);
  auto snap = initial_population(2, pattern, flat_factory(), state, streams);
  std::vector<std::size_t> sizes;
  for (int t = 1; t <= 6; ++t) {
    snap = step_population(snap, pattern, flat_factory(), state, streams);
    sizes.push_back(snap.size());
  }
  // Arrives at 1, active through round 3, gone from round 4.
  CHECK(sizes == std::vector<std::size_t>{3, 3, 3, 2, 2, 2});
}

TEST_CASE("lifetimes: geometric block survival P(L = 2) = (1 - q) q") {
  AgentPattern pattern;
  pattern.process = PoissonPattern{0.5, 0.0};
  pattern.lifetime = LifetimeLaw{LifetimeLaw::Kind::geometric, 0.5, 1};
  PopulationState state;
  StreamSet streams(21);
  auto snap = initial_population(0, pattern, flat_factory(), state, streams);
  while (state.registry.size() < 100000) {
    snap = step_population(snap, pattern, flat_factory(), state, streams);
  }
  std::size_t two = 0;
  for (const auto& p : state.registry.profiles()) two += p.lifetime && *p.lifetime == 2;
  CHECK(std::fabs(static_cast<double>(two) / state.registry.size() - 0.25) <= 0.01);
}

TEST_CASE("population_trajectory: all-zero schedule keeps size 3") {
  const auto pattern = schedule({{1, 0, 0}, {2, 0, 0}});
  const auto traj = population_trajectory(pattern, flat_factory(), 3, 20, 4);
  REQUIRE(traj.size() == 20);
  for (const auto& s : traj) CHECK(s.size() == 3);
}

TEST_CASE("population_sizes: Poisson growth over 10^4 rounds") {
  AgentPattern pattern;
  pattern.process = PoissonPattern{1.0, 0.0};
  StreamSet streams(replication_seed(1, 0));
  const auto sizes = population_sizes(pattern, 0, 10000, streams);
  CHECK(std::fabs(static_cast<double>(sizes.back()) - 1e4) <= 300.0);
}

TEST_CASE("population_sizes agrees with the id-level process") {
  AgentPattern pattern;
  pattern.process = PoissonPattern{1.2, 0.9};
  StreamSet counts(77);
  const auto sizes = population_sizes(pattern, 6, 400, counts);
  const auto traj = population_trajectory(pattern, flat_factory(), 6, 400, 77);
  REQUIRE(sizes.size() == traj.size());
  for (std::size_t t = 0; t < sizes.size(); ++t) CHECK(sizes[t] == traj[t].size());
}

TEST_CASE("trace: re-arrival and unknown departures rejected") {
  SUBCASE("re-arrival") {
    std::istringstream in("1,arrive,0\n2,depart,0\n3,arrive,0\n");
    AgentPattern pattern;
    pattern.process = parse_trace(in);
    CHECK_THROWS_AS(population_trajectory(pattern, flat_factory(), 0, 5, 1), MalformedTrace);
  }
  SUBCASE("departure of an inactive agent") {
    std::istringstream in("1,depart,4\n");
    AgentPattern pattern;
    pattern.process = parse_trace(in);
    CHECK_THROWS_AS(population_trajectory(pattern, flat_factory(), 0, 5, 1), MalformedTrace);
  }
}

TEST_CASE("trace: round-0 arrivals form the initial population") {
  std::istringstream in("t,event,agent\n# comment\n0,arrive,0\n0,arrive,1\n2,arrive,2\n3,depart,0\n");
  AgentPattern pattern;
  pattern.process = parse_trace(in);
  const auto traj = population_trajectory(pattern, flat_factory(), 0, 4, 1);
  CHECK(traj[0].size() == 2);
  CHECK(traj[1].size() == 3);
  CHECK(traj[2].size() == 2);
  CHECK(traj[2].departures == std::vector<AgentId>{0});
}

TEST_CASE("schedule parsing: malformed lines") {
  std::istringstream bad_field("1,2\n");
  CHECK_THROWS_AS(parse_schedule(bad_field), MalformedTrace);
  std::istringstream negative("1,-2,0\n");
  CHECK_THROWS_AS(parse_schedule(negative), MalformedTrace);
  std::istringstream twice("2,1,0\n2,0,1\n");
  CHECK_THROWS_AS(parse_schedule(twice), MalformedTrace);
  std::istringstream unsorted("3,1,0\n2,1,0\n");
  CHECK(parse_schedule(unsorted).entries.front().round == 2);
  std::istringstream kind("1,leave,0\n");
  CHECK_THROWS_AS(parse_trace(kind), MalformedTrace);
}

TEST_CASE("schedule and trace writers round-trip") {
  SchedulePattern s{{{1, 2, 0}, {4, 0, 3}}};
  std::stringstream buf;
  write_schedule(buf, s);
  const auto back = parse_schedule(buf);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[1].round == 4);
  CHECK(back.entries[1].departures == 3);

  TracePattern tr{{{0, TraceEventKind::arrive, 0}, {2, TraceEventKind::depart, 0}}};
  std::stringstream tbuf;
  write_trace(tbuf, tr);
  const auto tback = parse_trace(tbuf);
  REQUIRE(tback.events.size() == 2);
  CHECK(tback.events[1].kind == TraceEventKind::depart);
}

TEST_CASE("load_schedule: missing file is an I/O error") {
  CHECK_THROWS_AS(load_schedule("/nonexistent/schedule.csv"), IoError);
}

TEST_CASE("pattern validation") {
  AgentPattern p;
  p.process = PoissonPattern{-1.0, 0.0};
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  AgentPattern g;
  g.lifetime = LifetimeLaw{LifetimeLaw::Kind::geometric, 0.0, 1};
  CHECK_THROWS_AS(g.validate(), InvalidParameter);
}

TEST_CASE("validate_profile: means and features") {
  AgentProfile p;
  p.mean_vector = {0.2, 1.1};
  CHECK_THROWS_AS(validate_profile(p, 2), InvalidParameter);
  p.mean_vector = {0.2, 0.9};
  p.features = std::vector<double>{0.8, 0.8};
  CHECK_THROWS_AS(validate_profile(p, 2), InvalidParameter);
  p.features = std::vector<double>{0.6, 0.8};
  CHECK_NOTHROW(validate_profile(p, 2));
}

TEST_CASE("rng: streams are distinct and reproducible") {
  StreamSet a(9), b(9);
  CHECK(a.arrivals() == b.arrivals());
  StreamSet c(9);
  CHECK(c.arrivals() != c.departures());
  CHECK(replication_seed(1, 0) != replication_seed(1, 1));
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
}
