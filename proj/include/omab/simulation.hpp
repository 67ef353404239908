#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "omab/instances.hpp"
#include "omab/metrics.hpp"
#include "omab/policy.hpp"
#include "omab/transfer.hpp"

namespace omab {

struct SimOptions {
  bool check_lemmas = true;       // throw InvariantViolation on a failed round check
  bool check_population = true;   // partition and size laws every round
  bool parallel_update = false;   // OpenMP local-update kernel
  bool track_coverage = false;    // per-agent |mu_hat - mu| <= rho tally
  bool track_cluster_coverage = false;
  bool keep_records = true;
  UpdateKernel update_kernel;     // overrides the built-in kernels when set
};

struct RoundRecord {
  std::int64_t t = 0;
  std::size_t population = 0;
  std::size_t arrivals = 0;
  std::size_t departures = 0;
  std::optional<std::size_t> arm;       // 0-based
  std::optional<std::size_t> optimal;   // 0-based
  std::vector<double> vhat;
  std::vector<double> bstat;
  double ea = 0.0;
  std::optional<int> stable;
  std::optional<double> gap;
  double arrival_error = 0.0;        // sum of P_m over the round's arrivals
  double arrival_certificate = 0.0;  // sum of certificates over the round's arrivals
  RegretRow regret;
};

struct RunResult {
  std::vector<RoundRecord> records;
  std::vector<std::size_t> sizes;  // M_1..M_T
  RegretRow totals;
  std::size_t arrivals_total = 0;
  std::size_t certificate_violations = 0;
  double arrival_error_sum = 0.0;
  std::size_t perturbation_checks = 0;
  std::size_t perturbation_violations = 0;
  std::size_t stability_checks = 0;
  std::size_t stability_violations = 0;
  std::size_t coverage_checks = 0;
  std::size_t coverage_misses = 0;
  std::size_t cluster_checks = 0;
  std::size_t cluster_misses = 0;
  std::size_t arrival_bonus_mismatches = 0;
  double chosen_stat_bonus_sum = 0.0;  // sum_t B_stat(a_t)
  std::optional<std::int64_t> commit_round;
  std::optional<std::size_t> committed_arm;
  double commit_population = 0.0;      // M at the commit round
  double commit_min_samples = 0.0;     // smallest pooled per-arm count at the commit round
  std::optional<bool> good_event;      // committed arm optimal on every round from commit on
  double post_commit_rbar = 0.0;       // sum over t > commit of rbar_round
};

/// One replication of one policy on one instance.
class Simulation {
 public:
  Simulation(const InstanceSpec& spec, const PolicyKind& policy, std::uint64_t replication_seed,
             SimOptions options = {});

  bool done() const { return snapshot_.round >= spec_.horizon; }
  /// Plays one round and returns its record.
  const RoundRecord& step();
  /// Plays the remaining rounds and finalizes the result.
  RunResult run();

  const PopulationSnapshot& snapshot() const { return snapshot_; }
  const AgentRegistry& registry() const { return pop_.registry; }
  const LocalStatsTable& stats() const { return stats_; }
  const RegretLedger& ledger() const { return ledger_; }

 private:
  void admit_arrivals();
  TransferOutcome transfer_for(const AgentProfile& agent);
  std::size_t decide(const GlobalValues* values, RoundRecord& rec);
  void observe(std::size_t arm);
  void maybe_commit();
  std::vector<double> cluster_sizes() const;

  InstanceSpec spec_;
  PolicyKind policy_;
  SimOptions opts_;
  StreamSet streams_;
  AgentFactory factory_;
  PopulationState pop_;
  PopulationSnapshot snapshot_;
  LocalStatsTable stats_;
  RegretLedger ledger_;
  std::optional<ClusterStats> clusters_;
  std::optional<GlobalValues> prev_values_;
  double transfer_sigma_ = 0.5;
  double norm_bound_ = 1.0;

  // Commit-after-burn-in bookkeeping.
  std::vector<double> pooled_sum_;
  std::vector<double> pooled_count_;
  double cumulative_population_ = 0.0;
  double burnin_stab_ = 0.0;
  double burnin_id_ = 0.0;
  bool needs_feedback_ = true;

  std::vector<std::size_t> slots_;
  std::vector<double> rewards_;
  RoundRecord current_;
  RunResult result_;
};

RunResult simulate(const InstanceSpec& spec, const PolicyKind& policy,
                   std::uint64_t replication_seed, const SimOptions& options = {});

}  // namespace omab
