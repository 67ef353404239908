#include "omab/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "omab/error.hpp"

namespace omab {

namespace {

const Matrix* parameter_table(const RewardModel& model) {
  if (const auto* lin = std::get_if<LinearModel>(&model.kind)) return &lin->theta;
  if (const auto* nl = std::get_if<NonlinearModel>(&model.kind)) return &nl->theta;
  return nullptr;
}

}  // namespace

Simulation::Simulation(const InstanceSpec& spec, const PolicyKind& policy,
                       std::uint64_t replication_seed, SimOptions options)
    : spec_(spec),
      policy_(policy),
      opts_(std::move(options)),
      streams_(replication_seed),
      factory_(make_factory(spec)),
      stats_(spec.num_arms) {
  spec_.validate();
  validate_policy(policy_, spec_.num_arms, spec_.horizon);
  transfer_sigma_ = spec_.transfer.sigma > 0.0 ? spec_.transfer.sigma : spec_.model.noise_scale();
  if (const Matrix* theta = parameter_table(spec_.model)) {
    double best = 0.0;
    for (const auto& row : *theta) {
      double sq = 0.0;
      for (double v : row) sq += v * v;
      best = std::max(best, std::sqrt(sq));
    }
    norm_bound_ = spec_.transfer.norm_bound > 0.0 ? spec_.transfer.norm_bound : best;
  }

  const std::size_t clusters = spec_.cluster_count();
  const bool wants_clusters = spec_.transfer.mode == TransferMode::cluster ||
                              std::holds_alternative<ClusteredUcb>(policy_) ||
                              std::holds_alternative<CommitAfterBurnin>(policy_) ||
                              opts_.track_cluster_coverage;
  if (wants_clusters && clusters > 0) {
    clusters_.emplace(clusters, spec_.num_arms, spec_.transfer.delta, spec_.horizon);
  }
  if (std::holds_alternative<ClusteredUcb>(policy_) && !clusters_) {
    throw InvalidParameter("clustered UCB needs cluster-labelled agents");
  }
  if (const auto* c = std::get_if<CommitAfterBurnin>(&policy_)) {
    pooled_sum_.assign(spec_.num_arms, 0.0);
    pooled_count_.assign(spec_.num_arms, 0.0);
    if (c->adaptive) {
      burnin_stab_ = n_stab(c->adaptive->gap, c->adaptive->delta_conf, spec_.num_arms,
                            spec_.horizon);
      burnin_id_ = n_id(c->adaptive->gap, c->adaptive->delta_conf, spec_.num_arms);
    }
  }

  snapshot_ = initial_population(spec_.initial_size, spec_.pattern, factory_, pop_, streams_);
  for (AgentId id : snapshot_.active) stats_.init_blank(pop_.registry.slot(id));
  if (!snapshot_.active.empty()) {
    prev_values_ = global_values(snapshot_, pop_.registry, spec_.num_arms);
  }
  result_.sizes.reserve(static_cast<std::size_t>(spec_.horizon));
  if (opts_.keep_records) result_.records.reserve(static_cast<std::size_t>(spec_.horizon));
}

TransferOutcome Simulation::transfer_for(const AgentProfile& agent) {
  const std::size_t k = spec_.num_arms;
  if (agent.pretrained) {
    return pretrained_init(agent.pretrained->estimates, agent.pretrained->radius);
  }
  switch (spec_.transfer.mode) {
    case TransferMode::pretrained:
    case TransferMode::zero_knowledge: return zero_knowledge_init(k);
    case TransferMode::cluster: return cluster_inherit(agent, *clusters_, transfer_sigma_);
    case TransferMode::linear:
    case TransferMode::nonlinear: break;
  }
  // Parameter transfer from continuing neighbours with synthetic confidence sets.
  std::vector<AgentId> pool = snapshot_.continuing;
  if (pool.empty()) return zero_knowledge_init(k);
  const std::size_t cap = spec_.transfer.max_neighbors;
  if (cap > 0 && pool.size() > cap) {
    for (std::size_t j = 0; j < cap; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
      std::swap(pool[j], pool[pick(streams_.neighbors)]);
    }
    pool.resize(cap);
  }
  const Matrix& theta = *parameter_table(spec_.model);
  const std::size_t dim = theta.front().size();
  const auto& info = spec_.transfer.info;
  const double n_eff = info.c_gamma * std::pow(static_cast<double>(snapshot_.round), info.gamma);
  const double radius =
      linear_neighbor_radius(transfer_sigma_, dim, k, spec_.horizon, spec_.transfer.delta,
                             info.lambda, norm_bound_, info.kappa, n_eff);
  const double spread = transfer_sigma_ / std::sqrt(info.lambda + info.kappa * n_eff);
  std::normal_distribution<double> gauss(0.0, spread);
  std::vector<NeighborParams> neighbors(pool.size());
  for (auto& nb : neighbors) {
    nb.theta_hat = theta;
    for (auto& row : nb.theta_hat) {
      for (double& v : row) v += gauss(streams_.neighbors);
    }
    nb.certificate = radius;
  }
  const auto weights = uniform_weights(neighbors.size());
  if (spec_.transfer.mode == TransferMode::linear) {
    return linear_param_transfer(agent, neighbors, weights, k);
  }
  return nonlinear_param_transfer(agent, neighbors, weights,
                                  std::get<NonlinearModel>(spec_.model.kind));
}

void Simulation::admit_arrivals() {
  for (AgentId id : snapshot_.arrivals) {
    AgentProfile& agent = pop_.registry.at(id);
    TransferOutcome out = transfer_for(agent);
    agent.entry_estimates = out.estimates;
    agent.certificate = out.certificate;
    agent.mode_used = out.mode_used;
    stats_.init_from(pop_.registry.slot(id), out);
    const double err = pretraining_error(out.estimates, agent.mean_vector).error;
    current_.arrival_error += err;
    current_.arrival_certificate += out.certificate;
    if (err > out.certificate + 1e-12) ++result_.certificate_violations;
  }
  result_.arrivals_total += snapshot_.arrivals.size();
  result_.arrival_error_sum += current_.arrival_error;
}

std::vector<double> Simulation::cluster_sizes() const {
  std::vector<double> sizes(clusters_ ? clusters_->clusters() : 0, 0.0);
  for (AgentId id : snapshot_.active) {
    const auto& c = pop_.registry.at(id).cluster;
    if (c && static_cast<std::size_t>(*c) < sizes.size()) sizes[*c] += 1.0;
  }
  return sizes;
}

std::size_t Simulation::decide(const GlobalValues* values, RoundRecord& rec) {
  const std::int64_t t = snapshot_.round;
  const std::size_t k = spec_.num_arms;

  if (const auto* p = std::get_if<ClusteredUcb>(&policy_)) {
    const auto sizes = cluster_sizes();
    std::vector<std::vector<std::uint64_t>> counts(clusters_->clusters(),
                                                   std::vector<std::uint64_t>(k));
    rec.vhat.assign(k, 0.0);
    for (std::size_t c = 0; c < clusters_->clusters(); ++c) {
      for (std::size_t i = 0; i < k; ++i) {
        counts[c][i] = clusters_->count(c, i);
        rec.vhat[i] += sizes[c] * clusters_->mean(c, i);
      }
    }
    rec.bstat = clustered_bonus(sizes, counts, t, p->c1, p->beta, k);
    rec.ea = 0.0;
    if (t <= p->burn_in) return clustered_burnin_arm(t, k);
    std::vector<double> score(k);
    for (std::size_t i = 0; i < k; ++i) score[i] = rec.vhat[i] + rec.bstat[i];
    return argmax_lowest(score);
  }

  std::vector<double> eps;
  if (const auto* p = std::get_if<CertifiedGlobalUcb>(&policy_)) {
    if (!p->eps_comm.empty()) {
      const double decay = std::pow(static_cast<double>(t), -p->eps_power);
      eps.resize(k);
      for (std::size_t i = 0; i < k; ++i) {
        eps[i] = (p->eps_comm.size() == 1 ? p->eps_comm[0] : p->eps_comm[i]) * decay;
      }
    }
  }
  const GlobalIndex index = aggregate_global(stats_, snapshot_, pop_.registry, eps);
  rec.vhat = index.estimate;
  rec.bstat = index.stat_bonus;
  rec.ea = index.arrival_bonus;

  switch (policy_.index()) {
    case 0: {
      const std::size_t a = select_arm(index);
      if (select_arm_without_arrival_bonus(index) != a) ++result_.arrival_bonus_mismatches;
      return a;
    }
    case 2: return values->optimal_arm;
    case 3: return std::uniform_int_distribution<std::size_t>(0, k - 1)(streams_.policy);
    case 4: return clustered_burnin_arm(t, k);
    case 5: return std::get<FixedArmPolicy>(policy_).arm;
    default:
      if (result_.committed_arm) return *result_.committed_arm;
      return clustered_burnin_arm(t, k);
  }
}

void Simulation::observe(std::size_t arm) {
  const std::int64_t t = snapshot_.round;
  const std::size_t m = snapshot_.active.size();
  slots_.resize(m);
  rewards_.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const AgentId id = snapshot_.active[j];
    slots_[j] = pop_.registry.slot(id);
    rewards_[j] =
        draw_reward(spec_.model.noise, pop_.registry.profiles()[slots_[j]].mean_vector[arm],
                    streams_.rewards);
  }
  double c1 = 2.0;
  double beta = 0.5;
  if (const auto* p = std::get_if<CertifiedGlobalUcb>(&policy_)) {
    c1 = p->c1;
    beta = p->beta;
  } else if (const auto* p = std::get_if<ClusteredUcb>(&policy_)) {
    c1 = p->c1;
    beta = p->beta;
  }
  if (opts_.update_kernel) {
    opts_.update_kernel(stats_, slots_, arm, rewards_, t, c1, beta);
  } else if (opts_.parallel_update) {
    update_and_broadcast(stats_, slots_, arm, rewards_, t, c1, beta);
  } else {
    update_and_broadcast_serial(stats_, slots_, arm, rewards_, t, c1, beta);
  }

  if (clusters_) {
    const auto& profiles = pop_.registry.profiles();
    for (std::size_t j = 0; j < m; ++j) {
      const auto& c = profiles[slots_[j]].cluster;
      if (c) clusters_->observe(static_cast<std::size_t>(*c), arm, rewards_[j]);
    }
  }
  if (!pooled_sum_.empty() && !result_.committed_arm) {
    for (std::size_t j = 0; j < m; ++j) pooled_sum_[arm] += rewards_[j];
    pooled_count_[arm] += static_cast<double>(m);
  }

  if (opts_.track_coverage) {
    const auto& profiles = pop_.registry.profiles();
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t s = slots_[j];
      for (std::size_t i = 0; i < spec_.num_arms; ++i) {
        if (stats_.n(s, i) == 0) continue;
        ++result_.coverage_checks;
        if (std::fabs(stats_.mu(s, i) - profiles[s].mean_vector[i]) > stats_.rho(s, i)) {
          ++result_.coverage_misses;
        }
      }
    }
  }
  if (opts_.track_cluster_coverage && clusters_) {
    const auto* cl = std::get_if<ClusteredModel>(&spec_.model.kind);
    if (cl) {
      for (std::size_t c = 0; c < clusters_->clusters(); ++c) {
        for (std::size_t i = 0; i < spec_.num_arms; ++i) {
          if (clusters_->count(c, i) == 0) continue;
          ++result_.cluster_checks;
          if (std::fabs(clusters_->mean(c, i) - cl->theta[c][i]) >
              clusters_->radius(c, i, transfer_sigma_)) {
            ++result_.cluster_misses;
          }
        }
      }
    }
  }
}

void Simulation::maybe_commit() {
  const auto* p = std::get_if<CommitAfterBurnin>(&policy_);
  if (!p || result_.committed_arm) return;
  const std::int64_t t = snapshot_.round;
  const std::size_t k = spec_.num_arms;
  const double m = static_cast<double>(snapshot_.size());
  cumulative_population_ += m;
  bool ready = false;
  if (p->adaptive) {
    ready = t >= static_cast<std::int64_t>(k) && m >= burnin_stab_ &&
            cumulative_population_ / static_cast<double>(k) >= burnin_id_ + 1.0;
  } else {
    ready = t == p->tau;
  }
  if (!ready) return;

  std::vector<double> estimate(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (pooled_count_[i] == 0.0) {
      throw UndefinedEstimate("arm " + std::to_string(i + 1) + " was never sampled before round " +
                              std::to_string(t));
    }
  }
  bool labelled = clusters_.has_value() && m > 0.0;
  std::vector<double> sizes;
  if (labelled) {
    sizes = cluster_sizes();
    double covered = 0.0;
    for (double s : sizes) covered += s;
    labelled = covered == m;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double pooled = pooled_sum_[i] / pooled_count_[i];
    if (!labelled) {
      estimate[i] = pooled;
      continue;
    }
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (sizes[c] == 0.0) continue;
      const double theta = clusters_->count(c, i) > 0 ? clusters_->mean(c, i) : pooled;
      estimate[i] += sizes[c] / m * theta;
    }
  }
  result_.committed_arm = argmax_lowest(estimate);
  result_.commit_round = t;
  result_.commit_population = m;
  result_.commit_min_samples = *std::min_element(pooled_count_.begin(), pooled_count_.end());
  needs_feedback_ = false;
}

const RoundRecord& Simulation::step() {
  if (done()) throw InvalidParameter("simulation already reached its horizon");
  const PopulationSnapshot prev = snapshot_;
  snapshot_ = step_population(prev, spec_.pattern, factory_, pop_, streams_);
  if (opts_.check_population) check_snapshot(prev, snapshot_);
  const std::int64_t t = snapshot_.round;

  current_ = RoundRecord{};
  current_.t = t;
  current_.population = snapshot_.size();
  current_.arrivals = snapshot_.arrivals.size();
  current_.departures = snapshot_.departures.size();
  admit_arrivals();
  result_.sizes.push_back(snapshot_.size());

  if (snapshot_.active.empty()) {
    current_.regret = ledger_.accumulate_empty();
    prev_values_.reset();
    maybe_commit();
    if (opts_.keep_records) result_.records.push_back(current_);
    return opts_.keep_records ? result_.records.back() : current_;
  }

  const GlobalValues values = global_values(snapshot_, pop_.registry, spec_.num_arms);
  current_.optimal = values.optimal_arm;
  if (spec_.num_arms > 1) current_.gap = values.gap;
  if (prev_values_) {
    current_.stable = stability_indicator(prev_values_->optimal_arm, values.optimal_arm);
    const auto pert = check_perturbation(*prev_values_, values, current_.arrivals,
                                         current_.departures);
    const auto one = check_one_step(*prev_values_, values, current_.arrivals,
                                    current_.departures);
    if (pert.applicable) {
      ++result_.perturbation_checks;
      if (!pert.holds) ++result_.perturbation_violations;
    }
    if (one.premise) {
      ++result_.stability_checks;
      if (!one.holds) ++result_.stability_violations;
    }
    if (opts_.check_lemmas && (!pert.holds || !one.holds)) {
      std::ostringstream msg;
      msg.precision(17);
      if (!pert.holds) {
        msg << "round " << t << ": average values moved by " << pert.shift
            << " with arrival allowance " << pert.allowance;
      } else {
        msg << "round " << t << ": optimal arm changed from " << prev_values_->optimal_arm + 1
            << " to " << values.optimal_arm + 1 << " with gap " << prev_values_->gap
            << " and arrival ratio " << static_cast<double>(current_.arrivals) /
                                            static_cast<double>(current_.population);
      }
      throw InvariantViolation(msg.str());
    }
  }

  const std::size_t arm = decide(&values, current_);
  current_.arm = arm;
  result_.chosen_stat_bonus_sum += current_.bstat.at(arm);
  current_.regret = ledger_.accumulate(values, arm);
  if (needs_feedback_) observe(arm);
  maybe_commit();
  prev_values_ = values;
  if (opts_.keep_records) result_.records.push_back(current_);
  return opts_.keep_records ? result_.records.back() : current_;
}

RunResult Simulation::run() {
  std::vector<std::optional<std::size_t>> optimal;
  optimal.reserve(static_cast<std::size_t>(spec_.horizon));
  while (!done()) optimal.push_back(step().optimal);
  result_.totals = ledger_.totals();
  if (result_.commit_round) {
    const auto tau = static_cast<std::size_t>(*result_.commit_round);
    bool good = true;
    for (std::size_t t = tau; t <= optimal.size(); ++t) {
      const auto& o = optimal[t - 1];
      if (o && *o != *result_.committed_arm) good = false;
    }
    result_.good_event = good;
    const auto& rows = ledger_.rows();
    for (std::size_t t = tau + 1; t <= rows.size(); ++t) {
      result_.post_commit_rbar += rows[t - 1].rbar_round;
    }
  }
  return result_;
}

RunResult simulate(const InstanceSpec& spec, const PolicyKind& policy,
                   std::uint64_t replication_seed, const SimOptions& options) {
  Simulation sim(spec, policy, replication_seed, options);
  return sim.run();
}

}  // namespace omab
