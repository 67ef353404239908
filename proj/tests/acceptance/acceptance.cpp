// Acceptance battery. One PASS/FAIL line per criterion; exit status 1 if any fails.
// Golden paths come from argv: <golden config> <frozen csv>.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "omab/harness.hpp"
#include "omab/metrics.hpp"
#include "omab/policy.hpp"
#include "omab/population.hpp"
#include "omab/replication.hpp"
#include "omab/simulation.hpp"

using namespace omab;
using Hp = boost::multiprecision::cpp_bin_float_50;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kMaster = 314159;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Criteria 1 and 2 share the same runs.
struct LemmaRuns {
  std::size_t pert_checks = 0, pert_viol = 0, stab_checks = 0, stab_viol = 0;
  double seconds = 0.0;
};

LemmaRuns lemma_runs() {
  const auto start = std::chrono::steady_clock::now();
  SimOptions opt;
  opt.check_lemmas = false;
  opt.keep_records = false;
  const auto runs = run_replications(100, kMaster, true, [&](std::size_t, std::uint64_t seed) {
    RandomTabularParams p;
    p.num_arms = 3;
    p.horizon = 2000;
    p.arrival_rate = 1.0;
    p.departure_rate = 0.0;
    p.seed = seed;
    return simulate(gen_random_tabular(p), CertifiedGlobalUcb{}, seed, opt);
  });
  LemmaRuns out;
  for (const auto& r : runs) {
    out.pert_checks += r.perturbation_checks;
    out.pert_viol += r.perturbation_violations;
    out.stab_checks += r.stability_checks;
    out.stab_viol += r.stability_violations;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Verdict criterion3() {
  std::mt19937_64 gen(kMaster);
  std::size_t mismatches = 0;
  for (int draw = 0; draw < 10000; ++draw) {
    const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 10)(gen);
    const bool coarse = draw % 2 == 0;  // integer values produce exact ties
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto value = [&](double scale) {
      return coarse ? std::floor(u(gen) * 4.0) : u(gen) * scale;
    };
    GlobalIndex g;
    for (std::size_t i = 0; i < k; ++i) {
      g.estimate.push_back(value(100.0));
      g.stat_bonus.push_back(value(50.0));
    }
    g.arrival_bonus = value(1000.0);
    GlobalIndex zero = g;
    zero.arrival_bonus = 0.0;
    std::size_t brute = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (g.estimate[i] + g.stat_bonus[i] > g.estimate[brute] + g.stat_bonus[brute]) brute = i;
    }
    const std::size_t a = select_arm(g);
    mismatches += a != select_arm(zero) || a != brute;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 10000 draws"};
}

double rel(double got, const Hp& want) {
  if (want == 0) return got == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::fabs(((Hp(got) - want) / want).convert_to<double>());
}

Verdict criterion4() {
  std::mt19937_64 gen(kMaster + 4);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
  auto ui = [&](long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen); };
  double worst[6] = {0, 0, 0, 0, 0, 0};
  const char* names[6] = {"n_stab", "n_id", "delta_good_event", "model_identification_term",
                          "p_good", "kl"};
  for (int d = 0; d < 100; ++d) {
    {
      const double gap = u(0.01, 1.0), conf = u(1e-6, 0.5);
      const auto k = static_cast<std::size_t>(ui(1, 20));
      const auto t = static_cast<std::int64_t>(ui(1, 1000000));
      const Hp g(gap);
      const Hp want = Hp(8) / (g * g) * log(Hp(2) * Hp(k) * Hp(t) / Hp(conf));
      worst[0] = std::max(worst[0], rel(n_stab(gap, conf, k, t), want));
      const Hp want_id = Hp(8) / (g * g) * log(Hp(2) * Hp(k) / Hp(conf));
      worst[1] = std::max(worst[1], rel(n_id(gap, conf, k), want_id));
    }
    {
      const double base = u(0.2, 1.0), gap = u(0.01, base * 0.95);
      const auto k = static_cast<std::size_t>(ui(1, 10));
      const auto t = static_cast<std::int64_t>(ui(10, 100000));
      const auto tau = static_cast<std::int64_t>(ui(1, t));
      const double m_tau = u(0.0, 300.0) * 2.0 / ((base - gap) * (base - gap));
      const double n_min = u(0.0, 300.0) * 8.0 / (gap * gap);
      const auto got = delta_good_event(m_tau, base, gap, k, t, tau, n_min);
      const Hp gb(base), gg(gap), two_k = Hp(2) * Hp(k);
      const Hp stab = two_k * Hp(t - tau + 1) * exp(-Hp(m_tau) * (gb - gg) * (gb - gg) / 2);
      const Hp id = two_k * exp(-Hp(n_min) * gg * gg / 8);
      worst[2] = std::max({worst[2], rel(got.stability_term, stab), rel(got.identification_term, id),
                           rel(got.total(), stab + id)});
    }
    {
      IdentificationParams p;
      p.num_arms = static_cast<std::size_t>(ui(1, 10));
      p.gap = u(0.01, 1.0);
      p.dim = static_cast<std::size_t>(ui(1, 20));
      p.c_lin = u(0.1, 2.0);
      p.c_nl = u(0.1, 2.0);
      p.lipschitz_max = u(0.05, 1.0);
      p.clusters = static_cast<std::size_t>(ui(1, 10));
      const Hp k(p.num_arms), g(p.gap), dim(p.dim);
      for (int kind = 0; kind < 4; ++kind) {
        p.kind = static_cast<IdentificationModel>(kind);
        Hp scale;  // exponent per sample
        switch (p.kind) {
          case IdentificationModel::linear: scale = Hp(p.c_lin) * g * g / (16 * dim); break;
          case IdentificationModel::nonlinear:
            scale = Hp(p.c_nl) * g * g / (16 * Hp(p.lipschitz_max) * Hp(p.lipschitz_max) * dim);
            break;
          default: scale = g * g / 8; break;
        }
        p.samples = std::floor(u(0.0, 300.0) / scale.convert_to<double>());
        Hp want = 2 * k * exp(-Hp(p.samples) * scale);
        if (p.kind == IdentificationModel::cluster) want *= Hp(p.clusters);
        worst[3] = std::max(worst[3], rel(model_identification_term(p), want));
      }
    }
    {
      const double rate = u(0.01, 5.0), q = u(0.01, 0.99);
      const auto h = static_cast<std::int64_t>(ui(1, 10));
      const Hp r(rate), hq(q);
      const Hp want = r * exp(-r) * exp(-r * (h - 1)) * pow(1 - hq, h - 1) * hq;
      worst[4] = std::max(worst[4], rel(p_good_block(rate, h, q), want));
    }
    {
      const double p = u(0.0, 1.0), q = u(0.001, 0.999);
      const Hp hp(p), hq(q);
      Hp want = 0;
      if (hp > 0) want += hp * log(hp / hq);
      if (hp < 1) want += (1 - hp) * log((1 - hp) / (1 - hq));
      worst[5] = std::max(worst[5], rel(bernoulli_kl(p, q), want));
    }
  }
  bool ok = true;
  std::string detail = "max rel err:";
  for (int i = 0; i < 6; ++i) {
    ok = ok && worst[i] <= 1e-10;
    detail += std::string(" ") + names[i] + "=" + fmt("%.2e", worst[i]);
  }
  return {ok, detail};
}

Verdict criterion5(double& seconds) {
  const auto start = std::chrono::steady_clock::now();
  CommitAfterBurnin policy;
  policy.adaptive = AdaptiveBurnin{0.3, 0.05};
  SimOptions opt;
  opt.check_lemmas = false;
  opt.keep_records = false;
  const std::int64_t horizon = 5000;
  const auto runs = run_replications(200, kMaster + 5, true, [&](std::size_t, std::uint64_t seed) {
    return simulate(gen_stable_clustered(horizon, seed), policy, seed, opt);
  });
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double base_gap = gen_stable_clustered(horizon, 1).latent.base_gap;
  std::size_t committed = 0, good = 0, good_with_regret = 0;
  double delta_sum = 0.0;
  for (const auto& r : runs) {
    if (!r.commit_round) continue;
    ++committed;
    delta_sum += delta_good_event(r.commit_population, base_gap, 0.3, 2, horizon, *r.commit_round,
                                  r.commit_min_samples)
                     .clamped();
    if (r.good_event.value_or(false)) {
      ++good;
      good_with_regret += r.post_commit_rbar != 0.0;
    }
  }
  const double delta_g = committed ? delta_sum / static_cast<double>(committed) : 1.0;
  const double frac = static_cast<double>(good) / static_cast<double>(runs.size());
  const bool ok = committed == runs.size() && good_with_regret == 0 && frac >= 1.0 - delta_g &&
                  seconds <= 120.0;
  return {ok, std::to_string(good) + "/" + std::to_string(runs.size()) +
                  " good runs, mean delta_G " + fmt("%.3g", delta_g) + ", " +
                  std::to_string(good_with_regret) + " good runs with post-commit regret, " +
                  fmt("%.1f s", seconds)};
}

double mean_regret(const std::function<InstanceSpec(std::uint64_t)>& make, std::uint64_t master) {
  SimOptions opt;
  opt.check_lemmas = false;
  opt.keep_records = false;
  const auto runs = run_replications(200, master, true, [&](std::size_t, std::uint64_t seed) {
    return simulate(make(seed), CertifiedGlobalUcb{}, seed, opt);
  });
  double sum = 0.0;
  for (const auto& r : runs) sum += r.totals.r_round;
  return sum / static_cast<double>(runs.size());
}

Verdict criterion6() {
  const auto start = std::chrono::steady_clock::now();
  auto blocks = [](std::int64_t horizon) {
    return [horizon](std::uint64_t seed) {
      BlocksParams p;
      p.block_length = 2;
      p.informative_rate = 0.5;
      p.q = 0.5;
      p.gap = 0.25;
      p.horizon = horizon;
      p.seed = seed;
      return gen_zero_knowledge_blocks(p);
    };
  };
  auto stable = [](std::int64_t horizon) {
    return [horizon](std::uint64_t seed) { return gen_stable_clustered(horizon, seed); };
  };
  const double b2 = mean_regret(blocks(2000), kMaster + 61);
  const double b4 = mean_regret(blocks(4000), kMaster + 62);
  const double s2 = mean_regret(stable(2000), kMaster + 63);
  const double s4 = mean_regret(stable(4000), kMaster + 64);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double rb = b4 / b2, rs = s4 / s2;
  const bool ok = rb >= 1.7 && rb <= 2.3 && rs <= 1.4 && seconds <= 300.0;
  return {ok, "blocks " + fmt("%.4g", b2) + " -> " + fmt("%.4g", b4) + " (ratio " +
                  fmt("%.3f", rb) + "), stable clustered " + fmt("%.4g", s2) + " -> " +
                  fmt("%.4g", s4) + " (ratio " + fmt("%.3f", rs) + "), " + fmt("%.1f s", seconds)};
}

Verdict criterion7() {
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t horizon = 1000;
  double slopes[2] = {0.0, 0.0};
  const double gammas[2] = {2.0, 1.0};
  for (int g = 0; g < 2; ++g) {
    std::vector<double> cert(horizon + 1, 0.0), count(horizon + 1, 0.0);
    SimOptions opt;
    opt.check_lemmas = false;
    const auto runs =
        run_replications(50, kMaster + 70 + g, true, [&](std::size_t, std::uint64_t seed) {
          LinearParams p;
          p.gamma = gammas[g];
          p.horizon = horizon;
          p.seed = seed;
          return simulate(gen_linear(p), CertifiedGlobalUcb{}, seed, opt);
        });
    for (const auto& r : runs) {
      for (const auto& rec : r.records) {
        cert[rec.t] += rec.arrival_certificate;
        count[rec.t] += static_cast<double>(rec.arrivals);
      }
    }
    std::vector<double> x, y;
    for (std::int64_t t = 1; t <= horizon; ++t) {
      if (count[t] == 0.0) continue;
      x.push_back(static_cast<double>(t));
      y.push_back(cert[t] / count[t]);
    }
    slopes[g] = loglog_slope(x, y, 10.0, 1000.0);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = std::fabs(slopes[0] + 1.0) <= 0.1 && std::fabs(slopes[1] + 0.5) <= 0.1 &&
                  seconds <= 60.0;
  return {ok, "slope gamma=2 " + fmt("%.4f", slopes[0]) + ", gamma=1 " + fmt("%.4f", slopes[1]) +
                  ", " + fmt("%.1f s", seconds)};
}

Verdict criterion8() {
  const auto start = std::chrono::steady_clock::now();
  SimOptions opt;
  opt.check_lemmas = false;
  opt.keep_records = false;
  opt.track_cluster_coverage = true;
  const auto runs = run_replications(100, kMaster + 8, true, [&](std::size_t, std::uint64_t seed) {
    ClusteredParams p;
    p.theta = {{0.2, 0.5, 0.8}, {0.7, 0.4, 0.1}, {0.5, 0.6, 0.3}};
    p.rates = {0.5, 0.3, 0.2};
    p.initial_composition = {4, 3, 3};
    p.horizon = 1000;
    p.noise = GaussianNoise{0.5};
    p.delta = 0.05;
    p.seed = seed;
    return simulate(gen_clustered(p), ClusteredUcb{}, seed, opt);
  });
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::size_t checks = 0, misses = 0;
  for (const auto& r : runs) {
    checks += r.cluster_checks;
    misses += r.cluster_misses;
  }
  const double freq = checks ? static_cast<double>(misses) / static_cast<double>(checks) : 1.0;
  const bool ok = checks > 0 && freq <= 0.05 && seconds <= 120.0;
  return {ok, std::to_string(misses) + "/" + std::to_string(checks) + " radius exceedances (" +
                  fmt("%.2e", freq) + "), " + fmt("%.1f s", seconds)};
}

Verdict criterion9() {
  AgentPattern pattern;
  pattern.process = PoissonPattern{1.0, 0.0};
  std::size_t within = 0;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    StreamSet streams(replication_seed(kMaster + 9, r));
    const auto sizes = population_sizes(pattern, 0, 10000, streams);
    within += std::fabs(static_cast<double>(sizes.back()) - 1e4) <= 300.0;
  }
  ClusteredParams p;
  p.theta = {{0.2, 0.8}, {0.5, 0.5}, {0.8, 0.2}};
  p.rates = {0.5, 0.5, 0.5};
  p.initial_composition = {0, 0, 0};
  p.horizon = 200;
  const auto spec = gen_clustered(p);
  const double bound = std::log(3.0 / 0.05) / 0.5;
  std::size_t exceed = 0;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const auto first = first_appearance_times(spec, replication_seed(kMaster + 90, r), true);
    exceed += *std::max_element(first.begin(), first.end()) > bound;
  }
  const bool ok = within >= 990 && exceed <= 50;
  return {ok, std::to_string(within) + "/1000 sizes within 1e4 +- 300, " + std::to_string(exceed) +
                  "/1000 first appearances past " + fmt("%.4f", bound)};
}

Verdict criterion10(const fs::path& config, const fs::path& frozen) {
  std::string detail;
  bool ok = false;
  auto cfg = load_config(config.string());
  std::string first;
  bool same = true;
  for (int rerun = 0; rerun < 2; ++rerun) {
    const auto dir = fs::temp_directory_path() / ("omab_golden_" + std::to_string(rerun));
    fs::remove_all(dir);
    cfg.output_dir = dir.string();
    run_experiment(cfg);
    const std::string csv = read(dir / "rep_0.csv");
    if (rerun == 0) first = csv;
    else same = csv == first;
    fs::remove_all(dir);
  }
  const bool matches_frozen = first == read(frozen);
  std::size_t failed = 0, total = 0;
  for (const auto& r : validate()) {
    ++total;
    failed += !r.passed;
  }
  ok = same && matches_frozen && failed == 0;
  detail = std::string("rerun ") + (same ? "identical" : "differs") +
           ", frozen csv " + (matches_frozen ? "matches" : "differs") + ", validate " +
           std::to_string(total - failed) + "/" + std::to_string(total) + " pass";
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: omab_acceptance <golden config> <frozen csv>\n");
    return 2;
  }
  int failures = 0;
  auto report = [&](int id, const char* name, const Verdict& v) {
    std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
    std::fflush(stdout);
    failures += !v.pass;
  };
  auto guarded = [](const std::function<Verdict()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Verdict{false, std::string("exception: ") + e.what()};
    }
  };

  LemmaRuns lemmas;
  const auto lemma_verdict = guarded([&] {
    lemmas = lemma_runs();
    return Verdict{true, ""};
  });
  if (!lemma_verdict.pass) {
    report(1, "arrival perturbation", lemma_verdict);
    report(2, "one-step stability", lemma_verdict);
  } else {
    report(1, "arrival perturbation",
           {lemmas.pert_viol == 0 && lemmas.seconds <= 60.0,
            std::to_string(lemmas.pert_viol) + " violations in " +
                std::to_string(lemmas.pert_checks) + " rounds, " + fmt("%.1f s", lemmas.seconds)});
    report(2, "one-step stability",
           {lemmas.stab_viol == 0 && lemmas.stab_checks > 0,
            std::to_string(lemmas.stab_viol) + " violations in " +
                std::to_string(lemmas.stab_checks) + " premise rounds"});
  }
  report(3, "argmax shift invariance", guarded(criterion3));
  report(4, "formula calculators", guarded(criterion4));
  double seconds5 = 0.0;
  report(5, "commit after burn-in on the stable clustered instance",
         guarded([&] { return criterion5(seconds5); }));
  report(6, "regret growth under T doubling", guarded(criterion6));
  report(7, "entry-error decay slopes", guarded(criterion7));
  report(8, "cluster radius coverage", guarded(criterion8));
  report(9, "Poisson trajectories and cluster discovery", guarded(criterion9));
  report(10, "determinism and regression", guarded([&] { return criterion10(argv[1], argv[2]); }));
  return failures == 0 ? 0 : 1;
}
