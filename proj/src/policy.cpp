#include "omab/policy.hpp"

#include <algorithm>
#include <cmath>

#include "omab/error.hpp"

namespace omab {

void LocalStatsTable::grow(std::size_t slot) {
  if (slot < ready_.size()) return;
  const std::size_t slots = std::max(slot + 1, ready_.size() * 2);
  n_.resize(slots * num_arms_, 0);
  mu_.resize(slots * num_arms_, 0.0);
  rho_.resize(slots * num_arms_, 1.0);
  ready_.resize(slots, 0);
}

void LocalStatsTable::init_blank(std::size_t slot) {
  grow(slot);
  for (std::size_t i = 0; i < num_arms_; ++i) {
    n(slot, i) = 0;
    mu(slot, i) = 0.0;
    rho(slot, i) = 1.0;
  }
  ready_[slot] = 1;
}

void LocalStatsTable::init_from(std::size_t slot, const TransferOutcome& outcome) {
  if (outcome.estimates.size() != num_arms_) {
    throw InvalidParameter("transfer outcome has the wrong number of arms");
  }
  grow(slot);
  for (std::size_t i = 0; i < num_arms_; ++i) {
    n(slot, i) = outcome.counts_init.empty() ? 0 : outcome.counts_init[i];
    mu(slot, i) = outcome.estimates[i];
    rho(slot, i) = outcome.radii_init.empty() ? outcome.certificate : outcome.radii_init[i];
  }
  ready_[slot] = 1;
}

GlobalIndex aggregate_global(const LocalStatsTable& stats, const PopulationSnapshot& snapshot,
                             const AgentRegistry& agents, const std::vector<double>& eps_comm) {
  const std::size_t k = stats.num_arms();
  if (!eps_comm.empty() && eps_comm.size() != k) {
    throw InvalidParameter("eps_comm needs one entry per arm");
  }
  GlobalIndex g;
  g.estimate.assign(k, 0.0);
  g.stat_bonus.assign(k, 0.0);
  auto slot_of = [&](AgentId id) {
    const std::size_t s = agents.slot(id);
    if (!stats.ready(s)) {
      throw InvariantViolation("active agent " + std::to_string(id) + " has no local statistics");
    }
    return s;
  };
  for (AgentId id : snapshot.continuing) {
    const std::size_t s = slot_of(id);
    for (std::size_t i = 0; i < k; ++i) {
      g.estimate[i] += stats.mu(s, i);
      g.stat_bonus[i] += stats.rho(s, i);
    }
  }
  for (AgentId id : snapshot.arrivals) {
    const std::size_t s = slot_of(id);
    for (std::size_t i = 0; i < k; ++i) g.estimate[i] += stats.mu(s, i);
    g.arrival_bonus += agents.at(id).certificate;
  }
  if (!eps_comm.empty()) {
    for (std::size_t i = 0; i < k; ++i) {
      if (!(eps_comm[i] >= 0.0)) throw InvalidParameter("eps_comm must be non-negative");
      g.stat_bonus[i] += eps_comm[i];
    }
  }
  return g;
}

std::size_t select_arm(const GlobalIndex& index) {
  // E^A is common to every arm; comparing without it keeps rounding from creating ties.
  std::size_t best = 0;
  double top = index.estimate[0] + index.stat_bonus[0];
  for (std::size_t i = 1; i < index.estimate.size(); ++i) {
    const double v = index.estimate[i] + index.stat_bonus[i];
    if (v > top) {
      top = v;
      best = i;
    }
  }
  return best;
}

std::size_t select_arm_without_arrival_bonus(const GlobalIndex& index) {
  GlobalIndex copy = index;
  copy.arrival_bonus = 0.0;
  return select_arm(copy);
}

double candidate_radius(std::int64_t t, std::uint64_t n, double c1, double beta) {
  const double base = c1 * std::log(static_cast<double>(t)) /
                      std::max(1.0, static_cast<double>(n));
  return std::pow(base, beta);
}

namespace {

inline void update_one(LocalStatsTable& stats, std::size_t slot, std::size_t arm, double reward,
                       std::int64_t t, double c1, double beta) {
  const std::uint64_t n = ++stats.n(slot, arm);
  double& mu = stats.mu(slot, arm);
  mu = ((static_cast<double>(n) - 1.0) * mu + reward) / static_cast<double>(n);
  if (t > 1) {
    double& rho = stats.rho(slot, arm);
    rho = std::min(rho, candidate_radius(t, n, c1, beta));
  }
}

void check_update_args(const std::vector<std::size_t>& slots, const std::vector<double>& rewards,
                       std::int64_t t) {
  if (t < 1) throw InvalidParameter("round index must be at least 1");
  if (rewards.size() != slots.size()) {
    throw InvalidParameter("every active agent needs a reward");
  }
}

}  // namespace

void update_and_broadcast(LocalStatsTable& stats, const std::vector<std::size_t>& slots,
                          std::size_t arm, const std::vector<double>& rewards, std::int64_t t,
                          double c1, double beta) {
  check_update_args(slots, rewards, t);
  const auto count = static_cast<std::ptrdiff_t>(slots.size());
#pragma omp parallel for schedule(static) if (count > 4096)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    update_one(stats, slots[j], arm, rewards[j], t, c1, beta);
  }
}

void update_and_broadcast_serial(LocalStatsTable& stats, const std::vector<std::size_t>& slots,
                                 std::size_t arm, const std::vector<double>& rewards,
                                 std::int64_t t, double c1, double beta) {
  check_update_args(slots, rewards, t);
  for (std::size_t j = 0; j < slots.size(); ++j) {
    update_one(stats, slots[j], arm, rewards[j], t, c1, beta);
  }
}

std::size_t clustered_burnin_arm(std::int64_t t, std::size_t num_arms) {
  if (t < 1) throw InvalidParameter("round index must be at least 1");
  if (num_arms < 1) throw InvalidParameter("at least one arm is required");
  return static_cast<std::size_t>((t - 1) % static_cast<std::int64_t>(num_arms));
}

std::vector<double> clustered_bonus(const std::vector<double>& cluster_sizes,
                                    const std::vector<std::vector<std::uint64_t>>& counts,
                                    std::int64_t t, double c1, double beta,
                                    std::size_t num_arms) {
  if (counts.size() != cluster_sizes.size()) {
    throw InvalidParameter("cluster sizes and counts differ in length");
  }
  std::vector<double> out(num_arms, 0.0);
  for (std::size_t c = 0; c < cluster_sizes.size(); ++c) {
    if (cluster_sizes[c] <= 0.0) continue;
    for (std::size_t i = 0; i < num_arms; ++i) {
      out[i] += cluster_sizes[c] * candidate_radius(t, counts[c].at(i), c1, beta);
    }
  }
  return out;
}

void validate_policy(const PolicyKind& policy, std::size_t num_arms, std::int64_t horizon) {
  auto check_constants = [](double c1, double beta) {
    if (!(c1 > 0.0)) throw InvalidParameter("C1 must be positive");
    if (!(beta > 0.0)) throw InvalidParameter("beta must be positive");
  };
  if (const auto* p = std::get_if<CertifiedGlobalUcb>(&policy)) {
    check_constants(p->c1, p->beta);
    if (!p->eps_comm.empty() && p->eps_comm.size() != 1 && p->eps_comm.size() != num_arms) {
      throw InvalidParameter("eps_comm needs one value or one per arm");
    }
    for (double e : p->eps_comm) {
      if (!(e >= 0.0)) throw InvalidParameter("eps_comm must be non-negative");
    }
    if (!(p->eps_power >= 0.0)) throw InvalidParameter("eps_comm decay must be non-negative");
  } else if (const auto* p = std::get_if<ClusteredUcb>(&policy)) {
    check_constants(p->c1, p->beta);
    if (p->burn_in < 0) throw InvalidParameter("burn-in length must be non-negative");
  } else if (const auto* p = std::get_if<FixedArmPolicy>(&policy)) {
    if (p->arm >= num_arms) throw InvalidParameter("fixed arm out of range");
  } else if (const auto* p = std::get_if<CommitAfterBurnin>(&policy)) {
    if (p->adaptive) {
      if (!(p->adaptive->gap > 0.0 && p->adaptive->gap <= 1.0)) {
        throw InvalidParameter("burn-in gap must lie in (0,1]");
      }
      if (!(p->adaptive->delta_conf > 0.0 && p->adaptive->delta_conf < 1.0)) {
        throw InvalidParameter("burn-in confidence must lie in (0,1)");
      }
    } else if (p->tau < 1 || p->tau > horizon) {
      throw InvalidParameter("commit round must lie in [1, T]");
    }
  }
}

std::string policy_name(const PolicyKind& policy) {
  switch (policy.index()) {
    case 0: return "certified_global_ucb";
    case 1: return "clustered_ucb";
    case 2: return "oracle";
    case 3: return "uniform_random";
    case 4: return "round_robin";
    case 5: return "fixed_arm";
    default: return "commit_after_burnin";
  }
}

}  // namespace omab
