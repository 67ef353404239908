// Serial vs OpenMP timings for the local update kernel and the replication runner.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <vector>

#include <omp.h>

#include "omab/replication.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct KernelTiming {
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool identical = false;
};

KernelTiming time_kernel(std::size_t agents, std::size_t arms, int rounds) {
  omab::LocalStatsTable a(arms), b(arms);
  std::vector<std::size_t> slots(agents);
  std::iota(slots.begin(), slots.end(), 0);
  for (std::size_t s : slots) {
    a.init_blank(s);
    b.init_blank(s);
  }
  omab::Rng rng(1);
  std::vector<double> rewards(agents);
  KernelTiming out;
  for (int t = 1; t <= rounds; ++t) {
    for (auto& r : rewards) r = omab::uniform01(rng);
    const std::size_t arm = static_cast<std::size_t>(t) % arms;
    auto start = Clock::now();
    omab::update_and_broadcast_serial(a, slots, arm, rewards, t, 2.0, 0.5);
    out.serial_ms += ms_since(start);
    start = Clock::now();
    omab::update_and_broadcast(b, slots, arm, rewards, t, 2.0, 0.5);
    out.parallel_ms += ms_since(start);
  }
  out.identical = true;
  for (std::size_t s : slots) {
    for (std::size_t i = 0; i < arms; ++i) {
      const double m1 = a.mu(s, i), m2 = b.mu(s, i), r1 = a.rho(s, i), r2 = b.rho(s, i);
      out.identical = out.identical && a.n(s, i) == b.n(s, i) &&
                      std::memcmp(&m1, &m2, sizeof m1) == 0 && std::memcmp(&r1, &r2, sizeof r1) == 0;
    }
  }
  return out;
}

}  // namespace

int main() {
  std::printf("threads %d\n", omp_get_max_threads());
  std::printf("%-10s %-6s %12s %12s %8s %s\n", "agents", "arms", "serial_ms", "omp_ms", "speedup",
              "identical");
  for (std::size_t agents : {1000u, 10000u, 100000u}) {
    const auto k = time_kernel(agents, 4, 200);
    std::printf("%-10zu %-6d %12.2f %12.2f %8.2f %s\n", agents, 4, k.serial_ms, k.parallel_ms,
                k.serial_ms / k.parallel_ms, k.identical ? "yes" : "NO");
  }

  omab::RandomTabularParams p;
  p.num_arms = 3;
  p.horizon = 2000;
  p.initial_size = 20;
  p.arrival_rate = 1.0;
  p.departure_rate = 0.5;
  const auto spec = omab::gen_random_tabular(p);
  auto start = Clock::now();
  const auto serial = omab::run_replications(spec, omab::CertifiedGlobalUcb{}, 16, 7, false);
  const double serial_ms = ms_since(start);
  start = Clock::now();
  const auto parallel = omab::run_replications(spec, omab::CertifiedGlobalUcb{}, 16, 7, true);
  const double parallel_ms = ms_since(start);
  bool same = true;
  for (std::size_t r = 0; r < serial.size(); ++r) {
    same = same && serial[r].totals.r_round == parallel[r].totals.r_round;
  }
  std::printf("replications 16: serial %.1f ms, omp %.1f ms, speedup %.2f, identical %s\n",
              serial_ms, parallel_ms, serial_ms / parallel_ms, same ? "yes" : "NO");
  return same ? 0 : 1;
}
