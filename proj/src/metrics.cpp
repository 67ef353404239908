#include "omab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "omab/error.hpp"

namespace omab {

const RegretRow& RegretLedger::accumulate(const GlobalValues& values, std::size_t chosen_arm) {
  if (chosen_arm >= values.unnormalized.size()) throw InvalidParameter("arm index out of range");
  const double m = static_cast<double>(values.population);
  RegretRow row;
  const std::size_t best = values.optimal_arm;
  row.r_round = std::max(0.0, values.unnormalized[best] - values.unnormalized[chosen_arm]);
  row.r_agentsum = m * row.r_round;
  row.rbar_round = std::max(0.0, values.normalized[best] - values.normalized[chosen_arm]);
  row.rbar_agentsum = m * row.rbar_round;
  totals_.r_round += row.r_round;
  totals_.r_agentsum += row.r_agentsum;
  totals_.rbar_round += row.rbar_round;
  totals_.rbar_agentsum += row.rbar_agentsum;
  rows_.push_back(row);
  return rows_.back();
}

const RegretRow& RegretLedger::accumulate_empty() {
  rows_.emplace_back();
  return rows_.back();
}

int stability_indicator(std::size_t prev_optimal, std::size_t cur_optimal) {
  return prev_optimal == cur_optimal ? 1 : 0;
}

namespace {

void check_gap_delta(double gap, double delta) {
  if (!(gap > 0.0 && gap <= 1.0)) throw InvalidParameter("gap must lie in (0,1]");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("confidence must lie in (0,1)");
}

}  // namespace

double n_stab(double gap, double delta, std::size_t num_arms, std::int64_t horizon) {
  check_gap_delta(gap, delta);
  if (num_arms < 1 || horizon < 1) throw InvalidParameter("K and T must be at least 1");
  return 8.0 / (gap * gap) *
         std::log(2.0 * static_cast<double>(num_arms) * static_cast<double>(horizon) / delta);
}

double n_id(double gap, double delta, std::size_t num_arms) {
  check_gap_delta(gap, delta);
  if (num_arms < 1) throw InvalidParameter("K must be at least 1");
  return 8.0 / (gap * gap) * std::log(2.0 * static_cast<double>(num_arms) / delta);
}

std::optional<std::int64_t> tau_stab(const std::vector<std::size_t>& sizes, double threshold) {
  for (std::size_t t = 1; t < sizes.size(); ++t) {
    if (sizes[t] < sizes[t - 1]) {
      throw InvalidParameter("population stability time needs a nondecreasing trajectory");
    }
  }
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    if (static_cast<double>(sizes[t]) >= threshold) return static_cast<std::int64_t>(t + 1);
  }
  return std::nullopt;
}

std::optional<std::int64_t> tau_id(const std::vector<std::vector<double>>& counts,
                                   double threshold) {
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (t > 0) {
      for (std::size_t i = 0; i < counts[t].size(); ++i) {
        if (counts[t][i] < counts[t - 1][i]) {
          throw InvalidParameter("identification time needs nondecreasing counts");
        }
      }
    }
    if (counts[t].empty()) continue;
    const double lo = *std::min_element(counts[t].begin(), counts[t].end());
    if (lo >= threshold) return static_cast<std::int64_t>(t + 1);
  }
  return std::nullopt;
}

std::optional<std::int64_t> tau_id_round_robin(const std::vector<std::size_t>& sizes,
                                               std::size_t num_arms, double threshold) {
  if (num_arms < 1) throw InvalidParameter("K must be at least 1");
  double total = 0.0;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    total += static_cast<double>(sizes[t]);
    if (total / static_cast<double>(num_arms) >= threshold + 1.0) {
      return static_cast<std::int64_t>(t + 1);
    }
  }
  return std::nullopt;
}

double GoodEventBound::clamped() const { return std::clamp(total(), 0.0, 1.0); }

GoodEventBound delta_good_event(double m_tau, double base_gap, double gap, std::size_t num_arms,
                                std::int64_t horizon, std::int64_t tau, double n_min) {
  if (!(gap > 0.0 && gap <= base_gap && base_gap <= 1.0)) {
    throw InvalidParameter("need 0 < gap <= base gap <= 1");
  }
  if (tau < 1 || tau > horizon) throw InvalidParameter("need 1 <= tau <= T");
  if (!(m_tau >= 0.0) || !(n_min >= 0.0)) throw InvalidParameter("counts must be non-negative");
  const double k2 = 2.0 * static_cast<double>(num_arms);
  const double slack = base_gap - gap;
  GoodEventBound out;
  out.stability_term = k2 * static_cast<double>(horizon - tau + 1) *
                       std::exp(-m_tau * slack * slack / 2.0);
  out.identification_term = k2 * std::exp(-n_min * gap * gap / 8.0);
  return out;
}

double model_identification_term(const IdentificationParams& p) {
  if (!(p.gap > 0.0) || !(p.samples >= 0.0) || p.num_arms < 1) {
    throw InvalidParameter("identification term needs gap > 0, N >= 0, K >= 1");
  }
  const double k2 = 2.0 * static_cast<double>(p.num_arms);
  const double g2 = p.gap * p.gap;
  switch (p.kind) {
    case IdentificationModel::linear:
      if (p.dim < 1 || !(p.c_lin > 0.0)) throw InvalidParameter("linear term needs d, c_lin > 0");
      return k2 * std::exp(-p.c_lin * p.samples * g2 / (16.0 * static_cast<double>(p.dim)));
    case IdentificationModel::nonlinear:
      if (p.dim < 1 || !(p.c_nl > 0.0) || !(p.lipschitz_max > 0.0)) {
        throw InvalidParameter("nonlinear term needs p, c_nl, L_max > 0");
      }
      return k2 * std::exp(-p.c_nl * p.samples * g2 /
                           (16.0 * p.lipschitz_max * p.lipschitz_max *
                            static_cast<double>(p.dim)));
    case IdentificationModel::cluster:
      if (p.clusters < 1) throw InvalidParameter("cluster term needs C >= 1");
      return k2 * static_cast<double>(p.clusters) * std::exp(-p.samples * g2 / 8.0);
    case IdentificationModel::zero_knowledge:
      return k2 * std::exp(-p.samples * g2 / 8.0);
  }
  throw InvalidParameter("unknown identification model");
}

double cluster_discovery_term(std::size_t clusters, double min_rate, double tau) {
  if (clusters < 1 || !(min_rate > 0.0) || !(tau >= 0.0)) {
    throw InvalidParameter("discovery term needs C >= 1, rate > 0, tau >= 0");
  }
  return static_cast<double>(clusters) * std::exp(-min_rate * tau);
}

double p_good_block(double rate, std::int64_t block_length, double q) {
  if (!(rate > 0.0) || block_length < 1 || !(q > 0.0 && q < 1.0)) {
    throw InvalidParameter("p_good needs rate > 0, H0 >= 1, q in (0,1)");
  }
  const double h = static_cast<double>(block_length - 1);
  return rate * std::exp(-rate) * std::exp(-rate * h) * std::pow(1.0 - q, h) * q;
}

double bernoulli_kl(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0) || !(q > 0.0 && q < 1.0)) {
    throw InvalidParameter("Bernoulli KL needs p in [0,1] and q in (0,1)");
  }
  double out = 0.0;
  if (p > 0.0) out += p * std::log(p / q);
  if (p < 1.0) out += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return out;
}

BudgetReport regret_budget(double aggregate_regret, std::size_t initial_size,
                             std::int64_t horizon, double arrival_error_sum) {
  BudgetReport out;
  out.regret = aggregate_regret;
  out.budget = static_cast<double>(initial_size) * std::log(static_cast<double>(horizon)) +
               arrival_error_sum;
  out.ratio = out.budget > 0.0 ? aggregate_regret / out.budget : 0.0;
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double lo,
                    double hi) {
  if (x.size() != y.size()) throw InvalidParameter("x and y differ in length");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < lo || x[k] > hi || !(x[k] > 0.0) || !(y[k] > 0.0)) continue;
    const double lx = std::log(x[k]);
    const double ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw InvalidParameter("slope fit needs at least two points");
  const double nn = static_cast<double>(n);
  const double den = nn * sxx - sx * sx;
  if (den == 0.0) throw InvalidParameter("slope fit needs distinct x values");
  return (nn * sxy - sx * sy) / den;
}

}  // namespace omab
