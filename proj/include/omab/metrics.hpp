#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omab/rewards.hpp"

namespace omab {

/// Per-round shortfalls under the four conventions, and their running totals.
///   r_round       V_t(i*) - V_t(a_t)
///   r_agentsum    M_t (V_t(i*) - V_t(a_t))
///   rbar_round    Vbar_t(i*) - Vbar_t(a_t)
///   rbar_agentsum M_t (Vbar_t(i*) - Vbar_t(a_t))
struct RegretRow {
  double r_round = 0.0;
  double r_agentsum = 0.0;
  double rbar_round = 0.0;
  double rbar_agentsum = 0.0;
};

class RegretLedger {
 public:
  /// Appends the round's gaps. Negative shortfalls from rounding are clamped to 0.
  const RegretRow& accumulate(const GlobalValues& values, std::size_t chosen_arm);
  /// Empty-population round: zero regret.
  const RegretRow& accumulate_empty();

  const std::vector<RegretRow>& rows() const { return rows_; }
  const RegretRow& totals() const { return totals_; }
  std::size_t rounds() const { return rows_.size(); }

 private:
  std::vector<RegretRow> rows_;
  RegretRow totals_;
};

int stability_indicator(std::size_t prev_optimal, std::size_t cur_optimal);

/// (8 / gap^2) ln(2 K T / delta).
double n_stab(double gap, double delta, std::size_t num_arms, std::int64_t horizon);
/// (8 / gap^2) ln(2 K / delta).
double n_id(double gap, double delta, std::size_t num_arms);

/// First 1-based round whose size reaches `threshold`. Throws InvalidParameter
/// if the trajectory decreases.
std::optional<std::int64_t> tau_stab(const std::vector<std::size_t>& sizes, double threshold);
/// First 1-based round whose smallest per-arm count reaches `threshold`.
/// counts[t-1][i] is N_i(t).
std::optional<std::int64_t> tau_id(const std::vector<std::vector<double>>& counts,
                                   double threshold);
/// Round-robin bound: first t with (1/K) sum_{s<=t} M_s >= threshold + 1.
std::optional<std::int64_t> tau_id_round_robin(const std::vector<std::size_t>& sizes,
                                               std::size_t num_arms, double threshold);

struct GoodEventBound {
  double stability_term = 0.0;
  double identification_term = 0.0;
  double total() const { return stability_term + identification_term; }
  double clamped() const;
};

/// 2K(T - tau + 1) exp(-M_tau (gap0 - gap)^2 / 2) + 2K exp(-N_min gap^2 / 8).
GoodEventBound delta_good_event(double m_tau, double base_gap, double gap, std::size_t num_arms,
                                std::int64_t horizon, std::int64_t tau, double n_min);

enum class IdentificationModel { linear, nonlinear, cluster, zero_knowledge };

struct IdentificationParams {
  IdentificationModel kind = IdentificationModel::zero_knowledge;
  std::size_t num_arms = 2;
  double gap = 0.1;
  double samples = 0.0;      // N_min for the chosen model
  double c_lin = 1.0;
  std::size_t dim = 1;       // d (linear) or p (nonlinear)
  double c_nl = 1.0;
  double lipschitz_max = 0.25;
  std::size_t clusters = 1;
};

/// linear    2K exp(-c_lin N gap^2 / (16 d))
/// nonlinear 2K exp(-c_nl N gap^2 / (16 L^2 p))
/// cluster   2KC exp(-N gap^2 / 8)
/// zero-kn.  2K exp(-N gap^2 / 8)
double model_identification_term(const IdentificationParams& params);
/// C exp(-lambda_min tau).
double cluster_discovery_term(std::size_t clusters, double min_rate, double tau);

/// lambda e^{-lambda} * e^{-lambda (H0 - 1)} * (1 - q)^{H0 - 1} q.
double p_good_block(double rate, std::int64_t block_length, double q);
double bernoulli_kl(double p, double q);

struct BudgetReport {
  double regret = 0.0;
  double budget = 0.0;  // M_0 ln T + sum of arrival errors
  double ratio = 0.0;
};
BudgetReport regret_budget(double aggregate_regret, std::size_t initial_size,
                             std::int64_t horizon, double arrival_error_sum);

/// Least-squares slope of log(y) against log(x) over the points with x in [lo, hi].
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double lo,
                    double hi);

}  // namespace omab
