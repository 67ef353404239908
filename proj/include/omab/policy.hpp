#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "omab/population.hpp"
#include "omab/transfer.hpp"

namespace omab {

/// Per (agent, arm) count, running mean and radius, stored by registry slot.
class LocalStatsTable {
 public:
  explicit LocalStatsTable(std::size_t num_arms = 1) : num_arms_(num_arms) {}

  std::size_t num_arms() const { return num_arms_; }
  std::size_t slots() const { return ready_.size(); }

  /// Initial population: no samples, estimates 0, radius 1.
  void init_blank(std::size_t slot);
  void init_from(std::size_t slot, const TransferOutcome& outcome);
  bool ready(std::size_t slot) const { return slot < ready_.size() && ready_[slot] != 0; }

  std::uint64_t& n(std::size_t slot, std::size_t arm) { return n_[slot * num_arms_ + arm]; }
  double& mu(std::size_t slot, std::size_t arm) { return mu_[slot * num_arms_ + arm]; }
  double& rho(std::size_t slot, std::size_t arm) { return rho_[slot * num_arms_ + arm]; }
  std::uint64_t n(std::size_t slot, std::size_t arm) const { return n_[slot * num_arms_ + arm]; }
  double mu(std::size_t slot, std::size_t arm) const { return mu_[slot * num_arms_ + arm]; }
  double rho(std::size_t slot, std::size_t arm) const { return rho_[slot * num_arms_ + arm]; }

 private:
  void grow(std::size_t slot);

  std::size_t num_arms_;
  std::vector<std::uint64_t> n_;
  std::vector<double> mu_;
  std::vector<double> rho_;
  std::vector<std::uint8_t> ready_;
};

struct GlobalIndex {
  std::vector<double> estimate;    // sum over active agents of mu
  std::vector<double> stat_bonus;  // sum over continuing agents of rho, plus eps_comm
  double arrival_bonus = 0.0;      // sum over arrivals of their certificates

  double index(std::size_t arm) const {
    return estimate[arm] + stat_bonus[arm] + arrival_bonus;
  }
};

/// Exact sums over the snapshot. `eps_comm` is empty (zero) or has one entry per arm.
GlobalIndex aggregate_global(const LocalStatsTable& stats, const PopulationSnapshot& snapshot,
                             const AgentRegistry& agents, const std::vector<double>& eps_comm);

/// argmax of estimate + stat_bonus + arrival_bonus, ties to the lowest arm. The arrival
/// bonus is common to every arm and is left out of the comparison.
std::size_t select_arm(const GlobalIndex& index);
/// Same selection with the arrival bonus dropped.
std::size_t select_arm_without_arrival_bonus(const GlobalIndex& index);

/// (c1 ln t / max(1, n))^beta.
double candidate_radius(std::int64_t t, std::uint64_t n, double c1, double beta);

/// Pulled-arm update for each listed slot: count, running mean and, from t = 2 on,
/// radius = min(radius, candidate). Other arms are left untouched.
void update_and_broadcast(LocalStatsTable& stats, const std::vector<std::size_t>& slots,
                          std::size_t arm, const std::vector<double>& rewards, std::int64_t t,
                          double c1, double beta);
/// Single-threaded reference for the kernel above; results are bit-identical.
void update_and_broadcast_serial(LocalStatsTable& stats, const std::vector<std::size_t>& slots,
                                 std::size_t arm, const std::vector<double>& rewards,
                                 std::int64_t t, double c1, double beta);

using UpdateKernel =
    std::function<void(LocalStatsTable&, const std::vector<std::size_t>&, std::size_t,
                       const std::vector<double>&, std::int64_t, double, double)>;

/// Round-robin burn-in arm (0-based): (t - 1) mod K.
std::size_t clustered_burnin_arm(std::int64_t t, std::size_t num_arms);

/// F(i) = sum_c M_c (c1 ln t / max(1, n_{c,i}))^beta; counts[c][i].
std::vector<double> clustered_bonus(const std::vector<double>& cluster_sizes,
                                    const std::vector<std::vector<std::uint64_t>>& counts,
                                    std::int64_t t, double c1, double beta, std::size_t num_arms);

struct CertifiedGlobalUcb {
  double c1 = 2.0;
  double beta = 0.5;
  std::vector<double> eps_comm;  // empty, one value for every arm, or one per arm
  double eps_power = 0.0;        // eps_t = eps * t^-eps_power
};

struct ClusteredUcb {
  double c1 = 2.0;
  double beta = 0.5;
  std::int64_t burn_in = 0;
};

struct OraclePolicy {};
struct UniformRandomPolicy {};
struct RoundRobinPolicy {};
struct FixedArmPolicy {
  std::size_t arm = 0;
};

/// Burn-in length chosen online: the first round t >= K with M_t >= N_stab and
/// (1/K) sum_{s<=t} M_s >= N_id + 1.
struct AdaptiveBurnin {
  double gap = 0.3;
  double delta_conf = 0.05;
};

struct CommitAfterBurnin {
  std::int64_t tau = 1;
  std::optional<AdaptiveBurnin> adaptive;
};

using PolicyKind = std::variant<CertifiedGlobalUcb, ClusteredUcb, OraclePolicy, UniformRandomPolicy,
                                RoundRobinPolicy, FixedArmPolicy, CommitAfterBurnin>;

void validate_policy(const PolicyKind& policy, std::size_t num_arms, std::int64_t horizon);
std::string policy_name(const PolicyKind& policy);

}  // namespace omab
