#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "omab/population.hpp"
#include "omab/rewards.hpp"

namespace omab {

/// What an arriving agent starts with: estimates, certified radius, zero counts.
struct TransferOutcome {
  std::vector<double> estimates;
  double certificate = 1.0;
  TransferMode mode_used = TransferMode::zero_knowledge;
  std::vector<std::uint64_t> counts_init;
  std::vector<double> radii_init;
};

TransferOutcome zero_knowledge_init(std::size_t num_arms);

/// Passes the estimates through; the radius is clamped to 1.
TransferOutcome pretrained_init(std::vector<double> estimates, double declared_radius);

/// One continuing agent's parameter estimates (one vector per arm) and a
/// radius bounding ||theta_hat_i - theta_i|| on every arm.
struct NeighborParams {
  Matrix theta_hat;
  double certificate = 1.0;
};

/// Throws InvalidWeights unless weights are non-negative and sum to 1 within 1e-12.
void check_weights(const std::vector<double>& weights, std::size_t expected);
std::vector<double> uniform_weights(std::size_t count);

/// Weighted parameter average, estimates <x, theta_hat_i>, certificate sum_j w_j c_j.
/// No neighbors: zero-knowledge outcome.
TransferOutcome linear_param_transfer(const AgentProfile& agent,
                                      const std::vector<NeighborParams>& neighbors,
                                      const std::vector<double>& weights, std::size_t num_arms);

/// As linear, with estimates f_i(x, theta_hat_i) and certificate
/// max_i L_i * sum_j w_j c_j.
TransferOutcome nonlinear_param_transfer(const AgentProfile& agent,
                                         const std::vector<NeighborParams>& neighbors,
                                         const std::vector<double>& weights,
                                         const NonlinearModel& model);

/// Pooled per-cluster, per-arm reward statistics.
class ClusterStats {
 public:
  ClusterStats() = default;
  ClusterStats(std::size_t clusters, std::size_t num_arms, double delta, std::int64_t horizon);

  void observe(std::size_t cluster, std::size_t arm, double reward);
  std::uint64_t count(std::size_t cluster, std::size_t arm) const {
    return counts_[cluster * num_arms_ + arm];
  }
  /// Zero while the pair is unobserved.
  double mean(std::size_t cluster, std::size_t arm) const {
    return means_[cluster * num_arms_ + arm];
  }
  /// sigma * sqrt(2 ln(2KCT/delta) / max(1, N)).
  double radius(std::size_t cluster, std::size_t arm, double sigma) const;
  bool observed(std::size_t cluster) const;

  std::size_t clusters() const { return clusters_; }
  std::size_t num_arms() const { return num_arms_; }
  double delta() const { return delta_; }
  std::int64_t horizon() const { return horizon_; }

 private:
  std::size_t clusters_ = 0;
  std::size_t num_arms_ = 0;
  double delta_ = 0.05;
  std::int64_t horizon_ = 1;
  std::vector<std::uint64_t> counts_;
  std::vector<double> means_;
};

double cluster_radius(double sigma, std::size_t num_arms, std::size_t clusters,
                      std::int64_t horizon, double delta, double count);

/// Fully observed cluster: its means with certificate max_i radius (clamped to 1).
/// Partially observed: unseen arms get estimate 0 and radius 1. Unseen: zero-knowledge.
TransferOutcome cluster_inherit(const AgentProfile& agent, const ClusterStats& stats, double sigma);

struct PretrainingError {
  double error = 0.0;                                        // P_m
  double degree = std::numeric_limits<double>::infinity();  // D_m = 1 / P_m
};

PretrainingError pretraining_error(const std::vector<double>& estimates,
                                   const std::vector<double>& true_means);

/// Confidence radius a continuing agent reports for its linear parameter estimate:
/// (sigma sqrt(d ln(KT/delta)) + sqrt(lambda) S) / sqrt(lambda + kappa N_eff).
double linear_neighbor_radius(double sigma, std::size_t dim, std::size_t num_arms,
                              std::int64_t horizon, double delta, double lambda, double norm_bound,
                              double kappa, double effective_samples);

}  // namespace omab
