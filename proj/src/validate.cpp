#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "omab/csv.hpp"
#include "omab/error.hpp"
#include "omab/harness.hpp"
#include "omab/metrics.hpp"
#include "omab/replication.hpp"

namespace omab {

namespace {

class Report {
 public:
  template <typename Fn>
  void run(const std::string& module, const std::string& name, Fn&& fn) {
    PropertyResult r;
    r.module = module;
    r.name = name;
    try {
      std::string detail;
      r.passed = fn(detail);
      r.detail = detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    results_.push_back(std::move(r));
  }
  std::vector<PropertyResult> take() { return std::move(results_); }

 private:
  std::vector<PropertyResult> results_;
};

InstanceSpec small_tabular(std::uint64_t seed, double departures, std::int64_t horizon = 300) {
  RandomTabularParams p;
  p.num_arms = 3;
  p.horizon = horizon;
  p.initial_size = 8;
  p.arrival_rate = 1.0;
  p.departure_rate = departures;
  p.seed = seed;
  return gen_random_tabular(p);
}

double rel_err(long double ref, double got) {
  if (ref == 0.0L) return std::fabs(got);
  return static_cast<double>(std::fabs((static_cast<long double>(got) - ref) / ref));
}

std::string count_text(std::size_t bad, std::size_t total) {
  std::ostringstream s;
  s << bad << " of " << total;
  return s.str();
}

}  // namespace

std::vector<PropertyResult> validate(const ValidateOptions& options) {
  Report report;

  // --- population -------------------------------------------------------
  report.run("population", "partition holds every round", [](std::string& d) {
    std::size_t rounds = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      InstanceSpec spec = small_tabular(seed, 0.7, 400);
      spec.pattern.lifetime = LifetimeLaw{LifetimeLaw::Kind::geometric, 0.05, 1};
      PopulationState state;
      StreamSet streams(seed);
      const auto factory = make_factory(spec);
      auto prev = initial_population(spec.initial_size, spec.pattern, factory, state, streams);
      for (std::int64_t t = 1; t <= spec.horizon; ++t) {
        auto cur = step_population(prev, spec.pattern, factory, state, streams);
        check_snapshot(prev, cur);
        prev = std::move(cur);
        ++rounds;
      }
    }
    d = std::to_string(rounds) + " rounds checked";
    return true;
  });

  report.run("population", "positive-part size law", [](std::string& d) {
    Rng rng(7);
    SchedulePattern sched;
    for (std::int64_t t = 1; t <= 300; ++t) {
      sched.entries.push_back({t, rng() % 3, rng() % 5});
    }
    AgentPattern pattern;
    pattern.process = sched;
    StreamSet streams(3);
    const auto sizes = population_sizes(pattern, 4, 300, streams);
    std::size_t m = 4;
    std::size_t bad = 0;
    PopulationState state;
    StreamSet id_streams(3);
    auto factory = [](const ArrivalContext&, Rng&) {
      AgentProfile p;
      p.mean_vector = {0.5};
      return p;
    };
    auto snap = initial_population(4, pattern, factory, state, id_streams);
    for (std::size_t t = 0; t < sizes.size(); ++t) {
      const auto& e = sched.entries[t];
      m = static_cast<std::size_t>(std::max<std::int64_t>(
          0, static_cast<std::int64_t>(m) - static_cast<std::int64_t>(e.departures)) +
          static_cast<std::int64_t>(e.arrivals));
      snap = step_population(snap, pattern, factory, state, id_streams);
      if (sizes[t] != m || snap.size() != m) ++bad;
    }
    d = count_text(bad, sizes.size()) + " rounds off the law";
    return bad == 0;
  });

  report.run("population", "identical seeds give identical trajectories", [](std::string& d) {
    InstanceSpec spec = small_tabular(11, 0.5);
    const auto factory = make_factory(spec);
    const auto a = population_trajectory(spec.pattern, factory, spec.initial_size, 300, 99);
    const auto b = population_trajectory(spec.pattern, factory, spec.initial_size, 300, 99);
    bool same = a.size() == b.size();
    for (std::size_t t = 0; same && t < a.size(); ++t) {
      same = a[t].active == b[t].active && a[t].arrivals == b[t].arrivals &&
             a[t].departures == b[t].departures;
    }
    d = same ? "300 rounds identical" : "trajectories differ";
    return same;
  });

  report.run("population", "size nondecreasing without departures", [](std::string& d) {
    AgentPattern pattern;
    pattern.process = PoissonPattern{1.0, 0.0};
    std::size_t bad = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      StreamSet streams(seed);
      const auto sizes = population_sizes(pattern, 0, 1000, streams);
      for (std::size_t t = 1; t < sizes.size(); ++t) bad += sizes[t] < sizes[t - 1];
    }
    d = std::to_string(bad) + " decreases";
    return bad == 0;
  });

  // --- rewards ----------------------------------------------------------
  std::vector<RunResult> lemma_runs;
  SimOptions counting;
  counting.check_lemmas = false;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    lemma_runs.push_back(simulate(small_tabular(seed, 0.0, 200), CertifiedGlobalUcb{}, seed, counting));
  }

  report.run("rewards", "argmax agrees between sums and averages", [](std::string& d) {
    std::size_t bad = 0;
    std::size_t rounds = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      InstanceSpec spec = small_tabular(seed, 0.5, 200);
      Simulation sim(spec, UniformRandomPolicy{}, seed);
      while (!sim.done()) {
        sim.step();
        if (sim.snapshot().active.empty()) continue;
        const auto g = global_values(sim.snapshot(), sim.registry(), spec.num_arms);
        bad += argmax_lowest(g.unnormalized) != argmax_lowest(g.normalized);
        ++rounds;
      }
    }
    d = count_text(bad, rounds) + " rounds disagree";
    return bad == 0;
  });

  report.run("rewards", "arrival perturbation bound", [&](std::string& d) {
    std::size_t checks = 0, bad = 0;
    for (const auto& r : lemma_runs) {
      checks += r.perturbation_checks;
      bad += r.perturbation_violations;
    }
    d = count_text(bad, checks) + " rounds violate";
    return bad == 0 && checks > 0;
  });

  report.run("rewards", "one-step stability", [&](std::string& d) {
    std::size_t checks = 0, bad = 0;
    for (const auto& r : lemma_runs) {
      checks += r.stability_checks;
      bad += r.stability_violations;
    }
    d = count_text(bad, checks) + " premise rounds violate";
    return bad == 0 && checks > 0;
  });

  report.run("rewards", "linear means are 1-Lipschitz in the parameter", [](std::string& d) {
    Rng rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    std::size_t bad = 0;
    for (int s = 0; s < 2000; ++s) {
      std::vector<double> x(4), a(4), b(4);
      double nx = 0.0;
      for (auto& v : x) {
        v = g(rng);
        nx += v * v;
      }
      const double scale = uniform01(rng) / std::sqrt(nx);
      double diff = 0.0, fa = 0.0, fb = 0.0;
      for (int k = 0; k < 4; ++k) {
        x[k] *= scale;
        a[k] = g(rng);
        b[k] = g(rng);
        diff += (a[k] - b[k]) * (a[k] - b[k]);
        fa += x[k] * a[k];
        fb += x[k] * b[k];
      }
      bad += std::fabs(fa - fb) > std::sqrt(diff) + 1e-12;
    }
    d = count_text(bad, 2000) + " samples violate";
    return bad == 0;
  });

  report.run("rewards", "logistic link respects its Lipschitz constant", [](std::string& d) {
    NonlinearModel m;
    m.theta = {{0.3, -0.2, 0.5}, {-1.0, 0.4, 0.1}};
    m.lipschitz = {0.25, 0.25};
    Rng rng(9);
    const auto bad = lipschitz_violations(m, 3, 5000, rng);
    d = count_text(bad, 5000) + " samples violate";
    return bad == 0;
  });

  // --- transfer ---------------------------------------------------------
  report.run("transfer", "certificates bound the entry error for honest inputs", [](std::string& d) {
    Rng rng(21);
    std::normal_distribution<double> g(0.0, 1.0);
    std::size_t bad = 0, total = 0;
    const std::size_t dim = 3, k = 2;
    NonlinearModel nl;
    nl.theta = {{0.5, -0.3, 0.2}, {-0.4, 0.6, 0.1}};
    nl.lipschitz = {0.25, 0.25};
    LinearModel lin{{{0.2, 0.3, 0.1}, {0.4, 0.1, 0.3}}};
    for (int s = 0; s < 500; ++s) {
      AgentProfile agent;
      std::vector<double> x(dim);
      double nx = 0.0;
      for (auto& v : x) {
        v = std::fabs(g(rng));
        nx += v * v;
      }
      for (auto& v : x) v *= uniform01(rng) / std::sqrt(nx);
      agent.features = x;
      const std::size_t count = 1 + s % 5;
      std::vector<NeighborParams> lin_nb(count), nl_nb(count);
      for (std::size_t j = 0; j < count; ++j) {
        const double c = 0.3 * uniform01(rng);
        for (auto* nb : {&lin_nb[j], &nl_nb[j]}) {
          const Matrix& theta = nb == &lin_nb[j] ? lin.theta : nl.theta;
          nb->theta_hat = theta;
          nb->certificate = c;
          for (auto& row : nb->theta_hat) {
            std::vector<double> e(dim);
            double ne = 0.0;
            for (auto& v : e) {
              v = g(rng);
              ne += v * v;
            }
            const double len = c * uniform01(rng) / std::sqrt(ne);
            for (std::size_t q = 0; q < dim; ++q) row[q] += e[q] * len;
          }
        }
      }
      const auto w = uniform_weights(count);
      RewardModel lm{k, lin, GaussianNoise{0.1}};
      RewardModel nm{k, nl, GaussianNoise{0.1}};
      const auto lo = linear_param_transfer(agent, lin_nb, w, k);
      const auto no = nonlinear_param_transfer(agent, nl_nb, w, nl);
      std::vector<double> lin_true(k), nl_true(k);
      for (std::size_t i = 0; i < k; ++i) {
        double z1 = 0.0, z2 = 0.0;
        for (std::size_t q = 0; q < dim; ++q) {
          z1 += x[q] * lin.theta[i][q];
          z2 += x[q] * nl.theta[i][q];
        }
        lin_true[i] = z1;
        nl_true[i] = logistic(z2);
      }
      bad += pretraining_error(lo.estimates, lin_true).error > lo.certificate + 1e-12;
      bad += pretraining_error(no.estimates, nl_true).error > no.certificate + 1e-12;
      total += 2;
    }
    ClusterStats stats(2, 2, 0.05, 100);
    const Matrix theta = {{0.2, 0.7}, {0.9, 0.4}};
    for (int n = 0; n < 30; ++n) {
      for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < 2; ++i) stats.observe(c, i, theta[c][i]);
      }
    }
    for (int c = 0; c < 2; ++c) {
      AgentProfile a;
      a.cluster = c;
      const auto out = cluster_inherit(a, stats, 0.5);
      bad += pretraining_error(out.estimates, theta[c]).error > out.certificate + 1e-12;
      ++total;
    }
    d = count_text(bad, total) + " transfers exceed their certificate";
    return bad == 0;
  });

  report.run("transfer", "zero-knowledge certificate dominates", [](std::string& d) {
    Rng rng(4);
    std::size_t bad = 0;
    for (int s = 0; s < 1000; ++s) {
      std::vector<double> mu(4);
      for (auto& v : mu) v = uniform01(rng);
      const auto out = zero_knowledge_init(4);
      bad += pretraining_error(out.estimates, mu).error > out.certificate;
    }
    d = count_text(bad, 1000) + " draws exceed";
    return bad == 0;
  });

  report.run("transfer", "empty arrival batches carry zero error", [&](std::string& d) {
    InstanceSpec spec = small_tabular(3, 0.0, 200);
    Simulation sim(spec, CertifiedGlobalUcb{}, 3);
    std::size_t bad = 0, empty = 0;
    while (!sim.done()) {
      const auto& rec = sim.step();
      if (rec.arrivals == 0) {
        ++empty;
        bad += rec.arrival_error != 0.0 || rec.ea != 0.0;
      }
    }
    d = count_text(bad, empty) + " empty rounds with nonzero error";
    return bad == 0 && empty > 0;
  });

  // --- policy -----------------------------------------------------------
  report.run("policy", "selection invariant under a common shift", [](std::string& d) {
    Rng rng(13);
    std::size_t bad = 0;
    for (int s = 0; s < 10000; ++s) {
      GlobalIndex idx;
      const std::size_t k = 2 + s % 5;
      for (std::size_t i = 0; i < k; ++i) {
        idx.estimate.push_back(std::floor(uniform01(rng) * 8.0) / 4.0);
        idx.stat_bonus.push_back(std::floor(uniform01(rng) * 4.0) / 4.0);
      }
      idx.arrival_bonus = std::floor(uniform01(rng) * 16.0) / 4.0;
      bad += select_arm(idx) != select_arm_without_arrival_bonus(idx);
    }
    d = count_text(bad, 10000) + " mismatches";
    return bad == 0;
  });

  std::size_t radius_bad = 0, frame_bad = 0, pair_checks = 0;
  {
    SimOptions opts;
    opts.update_kernel = options.update_kernel;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      InstanceSpec spec = small_tabular(seed, 0.3, 200);
      Simulation sim(spec, CertifiedGlobalUcb{}, seed, opts);
      const std::size_t k = spec.num_arms;
      while (!sim.done()) {
        std::vector<std::size_t> slots;
        std::vector<std::uint64_t> n;
        std::vector<double> mu, rho;
        for (AgentId id : sim.snapshot().active) {
          const std::size_t s = sim.registry().slot(id);
          slots.push_back(s);
          for (std::size_t i = 0; i < k; ++i) {
            n.push_back(sim.stats().n(s, i));
            mu.push_back(sim.stats().mu(s, i));
            rho.push_back(sim.stats().rho(s, i));
          }
        }
        const auto& rec = sim.step();
        if (!rec.arm) continue;
        const auto& active = sim.snapshot().active;
        for (std::size_t j = 0; j < slots.size(); ++j) {
          const AgentId id = sim.registry().profiles()[slots[j]].id;
          if (!std::binary_search(active.begin(), active.end(), id)) continue;
          for (std::size_t i = 0; i < k; ++i) {
            const std::size_t q = j * k + i;
            ++pair_checks;
            if (sim.stats().rho(slots[j], i) > rho[q]) ++radius_bad;
            if (i != *rec.arm) {
              const double m2 = sim.stats().mu(slots[j], i);
              const double r2 = sim.stats().rho(slots[j], i);
              if (sim.stats().n(slots[j], i) != n[q] || std::memcmp(&m2, &mu[q], sizeof m2) != 0 ||
                  std::memcmp(&r2, &rho[q], sizeof r2) != 0) {
                ++frame_bad;
              }
            }
          }
        }
      }
    }
  }
  report.run("policy", "radius never increases", [&](std::string& d) {
    d = count_text(radius_bad, pair_checks) + " agent-arm updates increase the radius";
    return radius_bad == 0 && pair_checks > 0;
  });
  report.run("policy", "unpulled arms untouched", [&](std::string& d) {
    d = count_text(frame_bad, pair_checks) + " unpulled triples changed";
    return frame_bad == 0 && pair_checks > 0;
  });

  report.run("policy", "oracle zero, global UCB below uniform random", [](std::string& d) {
    std::size_t oracle_bad = 0, beaten = 0;
    const std::size_t runs = 100;
    for (std::uint64_t seed = 1; seed <= runs; ++seed) {
      StablePairParams sp;
      sp.horizon = 200;
      sp.seed = seed;
      const InstanceSpec spec = gen_stable_pair(sp).first;
      const auto o = simulate(spec, OraclePolicy{}, seed);
      const auto u = simulate(spec, CertifiedGlobalUcb{}, seed);
      const auto r = simulate(spec, UniformRandomPolicy{}, seed);
      oracle_bad += o.totals.r_round != 0.0;
      beaten += u.totals.r_round <= r.totals.r_round;
    }
    d = "oracle nonzero in " + std::to_string(oracle_bad) + " runs; UCB at or below random in " +
        count_text(beaten, runs);
    return oracle_bad == 0 && static_cast<double>(beaten) >= 0.95 * runs;
  });

  report.run("policy", "confidence coverage with C1 = 2, beta = 1/2", [](std::string& d) {
    SimOptions opts;
    opts.track_coverage = true;
    std::size_t checks = 0, misses = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto r = simulate(small_tabular(seed, 0.2, 200), CertifiedGlobalUcb{}, seed, opts);
      checks += r.coverage_checks;
      misses += r.coverage_misses;
    }
    const double rate = checks ? static_cast<double>(misses) / static_cast<double>(checks) : 1.0;
    d = "miss rate " + format_real(rate);
    return rate < 0.05;
  });

  // --- metrics ----------------------------------------------------------
  report.run("metrics", "gaps non-negative and normalized = aggregate / M", [&](std::string& d) {
    std::size_t bad = 0, rows = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto r = simulate(small_tabular(seed, 0.5, 200), UniformRandomPolicy{}, seed);
      for (const auto& rec : r.records) {
        ++rows;
        const auto& g = rec.regret;
        if (g.r_round < 0 || g.rbar_round < 0 || g.r_agentsum < 0 || g.rbar_agentsum < 0) ++bad;
        if (rec.population > 0 &&
            std::fabs(g.rbar_round * static_cast<double>(rec.population) - g.r_round) >
                1e-12 * std::max(1.0, g.r_round)) {
          ++bad;
        }
      }
    }
    d = count_text(bad, rows) + " rows inconsistent";
    return bad == 0;
  });

  report.run("metrics", "closed forms match extended-precision evaluation", [](std::string& d) {
    Rng rng(31);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
      const double gap = 0.05 + 0.9 * uniform01(rng);
      const double delta = 0.01 + 0.9 * uniform01(rng);
      const std::size_t k = 1 + rng() % 10;
      const std::int64_t t = 1 + static_cast<std::int64_t>(rng() % 100000);
      const long double g2 = static_cast<long double>(gap) * gap;
      worst = std::max(worst, rel_err(8.0L / g2 * std::log(2.0L * k * t / delta),
                                      n_stab(gap, delta, k, t)));
      worst = std::max(worst, rel_err(8.0L / g2 * std::log(2.0L * k / delta), n_id(gap, delta, k)));
      const double p = uniform01(rng), q = 0.01 + 0.98 * uniform01(rng);
      const long double lp = p, lq = q;
      long double kl = 0.0L;
      if (p > 0) kl += lp * std::log(lp / lq);
      if (p < 1) kl += (1.0L - lp) * std::log((1.0L - lp) / (1.0L - lq));
      worst = std::max(worst, rel_err(kl, bernoulli_kl(p, q)));
      const double lam = 0.05 + 2.0 * uniform01(rng);
      const std::int64_t h = 2 + rng() % 5;
      const long double pg = lam * std::exp(-(long double)lam) * std::exp(-(long double)lam * (h - 1)) *
                             std::pow(1.0L - q, (long double)(h - 1)) * q;
      worst = std::max(worst, rel_err(pg, p_good_block(lam, h, q)));
    }
    d = "worst relative error " + format_real(worst);
    return worst <= 1e-10;
  });

  report.run("metrics", "burn-in round is the larger of its two parts", [](std::string& d) {
    std::size_t bad = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      InstanceSpec spec = gen_stable_clustered(1500, seed);
      CommitAfterBurnin policy;
      policy.adaptive = AdaptiveBurnin{0.3, 0.05};
      const auto r = simulate(spec, policy, seed);
      const auto ts = tau_stab(r.sizes, n_stab(0.3, 0.05, 2, spec.horizon));
      const auto ti = tau_id_round_robin(r.sizes, 2, n_id(0.3, 0.05, 2));
      const bool both = ts && ti;
      if (both != r.commit_round.has_value()) {
        ++bad;
      } else if (both && *r.commit_round != std::max<std::int64_t>({*ts, *ti, 2})) {
        ++bad;
      }
    }
    d = count_text(bad, 5) + " runs disagree";
    return bad == 0;
  });

  // --- instances --------------------------------------------------------
  report.run("instances", "serialization round-trips exactly", [](std::string& d) {
    std::vector<InstanceSpec> specs;
    PivotalParams pp;
    pp.horizon = 50;
    pp.arrivals.entries = {{1, 2, 0}, {5, 1, 0}};
    pp.p_schedule = {0.25};
    specs.push_back(gen_pivotal(pp));
    BlocksParams bp;
    bp.horizon = 100;
    specs.push_back(gen_zero_knowledge_blocks(bp));
    specs.push_back(gen_stable_pair(StablePairParams{}).second);
    specs.push_back(gen_stable_clustered(200, 4));
    specs.push_back(gen_linear(LinearParams{}));
    specs.push_back(gen_nonlinear(LinearParams{}));
    specs.push_back(small_tabular(8, 0.1));
    std::size_t bad = 0;
    for (const auto& s : specs) {
      const std::string a = serialize_instance(s);
      const std::string b = serialize_instance(parse_instance(a));
      bad += a != b;
    }
    d = count_text(bad, specs.size()) + " generators fail";
    return bad == 0;
  });

  report.run("instances", "swapping pivotal signs swaps the arms", [](std::string& d) {
    PivotalParams pp;
    pp.horizon = 200;
    for (std::int64_t t = 1; t <= 200; t += 3) pp.arrivals.entries.push_back({t, 2, 0});
    pp.p_schedule = {0.3};
    pp.seed = 17;
    const InstanceSpec plus = gen_pivotal(pp);
    std::vector<int> flipped = plus.latent.pivotal_signs;
    for (int& s : flipped) s = -s;
    pp.signs = flipped;
    const InstanceSpec minus = gen_pivotal(pp);
    const auto a = simulate(plus, FixedArmPolicy{0}, 5);
    const auto b = simulate(minus, FixedArmPolicy{1}, 5);
    std::size_t bad = 0;
    for (std::size_t t = 0; t < a.records.size(); ++t) {
      bad += a.records[t].regret.r_round != b.records[t].regret.r_round;
    }
    d = count_text(bad, a.records.size()) + " rounds differ";
    return bad == 0;
  });

  // --- harness ----------------------------------------------------------
  report.run("harness", "reruns are byte-identical", [](std::string& d) {
    const InstanceSpec spec = small_tabular(2, 0.3, 200);
    const auto a = run_replications(spec, CertifiedGlobalUcb{}, 3, 42, false);
    const auto b = run_replications(spec, CertifiedGlobalUcb{}, 3, 42, true);
    bool same = true;
    for (std::size_t r = 0; r < a.size(); ++r) {
      same = same && records_to_csv(a[r].records, 3) == records_to_csv(b[r].records, 3);
    }
    d = same ? "serial and parallel replications identical" : "outputs differ";
    return same;
  });

  report.run("harness", "column set is fixed", [](std::string& d) {
    const auto cols = record_columns(2);
    const std::vector<std::string> expected = {
        "t", "M_t", "A_t", "a_t", "i_star", "Vhat_1", "Vhat_2", "Bstat_1", "Bstat_2", "EA",
        "S_t", "gap", "D_t", "sumP", "sumPbar", "r_round", "r_agentsum", "rbar_round",
        "rbar_agentsum"};
    d = std::to_string(cols.size()) + " columns";
    return cols == expected;
  });

  return report.take();
}

}  // namespace omab
