#include "omab/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "omab/error.hpp"

namespace omab {

namespace {

TransferOutcome make_outcome(std::vector<double> estimates, double certificate,
                             TransferMode mode) {
  TransferOutcome out;
  const std::size_t k = estimates.size();
  out.estimates = std::move(estimates);
  out.certificate = std::min(certificate, 1.0);
  out.mode_used = mode;
  out.counts_init.assign(k, 0);
  out.radii_init.assign(k, out.certificate);
  return out;
}

Matrix average_parameters(const std::vector<NeighborParams>& neighbors,
                          const std::vector<double>& weights, std::size_t num_arms) {
  Matrix avg(num_arms);
  for (std::size_t i = 0; i < num_arms; ++i) {
    avg[i].assign(neighbors.front().theta_hat.at(i).size(), 0.0);
  }
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    if (neighbors[j].theta_hat.size() != num_arms) {
      throw InvalidParameter("neighbor parameter table has the wrong number of arms");
    }
    for (std::size_t i = 0; i < num_arms; ++i) {
      const auto& th = neighbors[j].theta_hat[i];
      if (th.size() != avg[i].size()) throw InvalidParameter("neighbor parameter size mismatch");
      for (std::size_t k = 0; k < th.size(); ++k) avg[i][k] += weights[j] * th[k];
    }
  }
  return avg;
}

double weighted_certificate(const std::vector<NeighborParams>& neighbors,
                            const std::vector<double>& weights) {
  double c = 0.0;
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    if (!(neighbors[j].certificate >= 0.0)) {
      throw InvalidParameter("neighbor certificates must be non-negative");
    }
    c += weights[j] * neighbors[j].certificate;
  }
  return c;
}

}  // namespace

TransferOutcome zero_knowledge_init(std::size_t num_arms) {
  if (num_arms < 1) throw InvalidParameter("at least one arm is required");
  return make_outcome(std::vector<double>(num_arms, 0.0), 1.0, TransferMode::zero_knowledge);
}

TransferOutcome pretrained_init(std::vector<double> estimates, double declared_radius) {
  if (!(declared_radius >= 0.0)) throw InvalidParameter("declared radius must be non-negative");
  if (estimates.empty()) throw InvalidParameter("pretrained estimates are empty");
  return make_outcome(std::move(estimates), declared_radius, TransferMode::pretrained);
}

void check_weights(const std::vector<double>& weights, std::size_t expected) {
  if (weights.size() != expected) {
    throw InvalidWeights("expected " + std::to_string(expected) + " weights, got " +
                         std::to_string(weights.size()));
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidWeights("weights must be non-negative");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-12) {
    throw InvalidWeights("weights sum to " + std::to_string(sum) + ", not 1");
  }
}

std::vector<double> uniform_weights(std::size_t count) {
  if (count == 0) return {};
  return std::vector<double>(count, 1.0 / static_cast<double>(count));
}

TransferOutcome linear_param_transfer(const AgentProfile& agent,
                                      const std::vector<NeighborParams>& neighbors,
                                      const std::vector<double>& weights, std::size_t num_arms) {
  if (neighbors.empty()) return zero_knowledge_init(num_arms);
  check_weights(weights, neighbors.size());
  if (!agent.features) throw ModelMismatch("linear transfer needs agent features");
  const auto& x = *agent.features;
  const Matrix avg = average_parameters(neighbors, weights, num_arms);
  std::vector<double> est(num_arms, 0.0);
  for (std::size_t i = 0; i < num_arms; ++i) {
    if (avg[i].size() != x.size()) throw ModelMismatch("feature and parameter sizes differ");
    for (std::size_t k = 0; k < x.size(); ++k) est[i] += x[k] * avg[i][k];
  }
  return make_outcome(std::move(est), weighted_certificate(neighbors, weights),
                      TransferMode::linear);
}

TransferOutcome nonlinear_param_transfer(const AgentProfile& agent,
                                         const std::vector<NeighborParams>& neighbors,
                                         const std::vector<double>& weights,
                                         const NonlinearModel& model) {
  const std::size_t num_arms = model.theta.size();
  if (neighbors.empty()) return zero_knowledge_init(num_arms);
  check_weights(weights, neighbors.size());
  if (!agent.features) throw ModelMismatch("nonlinear transfer needs agent features");
  if (model.lipschitz.size() != num_arms) {
    throw InvalidModel("nonlinear model needs one Lipschitz constant per arm");
  }
  const auto& x = *agent.features;
  const Matrix avg = average_parameters(neighbors, weights, num_arms);
  std::vector<double> est(num_arms);
  for (std::size_t i = 0; i < num_arms; ++i) {
    if (avg[i].size() != x.size() && !model.link) {
      throw ModelMismatch("feature and parameter sizes differ");
    }
    if (model.link) {
      est[i] = model.link(x, avg[i]);
    } else {
      double z = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) z += x[k] * avg[i][k];
      est[i] = logistic(z);
    }
  }
  const double lmax = *std::max_element(model.lipschitz.begin(), model.lipschitz.end());
  return make_outcome(std::move(est), lmax * weighted_certificate(neighbors, weights),
                      TransferMode::nonlinear);
}

ClusterStats::ClusterStats(std::size_t clusters, std::size_t num_arms, double delta,
                           std::int64_t horizon)
    : clusters_(clusters),
      num_arms_(num_arms),
      delta_(delta),
      horizon_(horizon),
      counts_(clusters * num_arms, 0),
      means_(clusters * num_arms, 0.0) {
  if (clusters < 1 || num_arms < 1) throw InvalidParameter("cluster table needs C, K >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("confidence delta must be in (0,1)");
  if (horizon < 1) throw InvalidParameter("horizon must be at least 1");
}

void ClusterStats::observe(std::size_t cluster, std::size_t arm, double reward) {
  const std::size_t k = cluster * num_arms_ + arm;
  const std::uint64_t n = ++counts_[k];
  means_[k] += (reward - means_[k]) / static_cast<double>(n);
}

double cluster_radius(double sigma, std::size_t num_arms, std::size_t clusters,
                      std::int64_t horizon, double delta, double count) {
  const double arg = 2.0 * static_cast<double>(num_arms) * static_cast<double>(clusters) *
                     static_cast<double>(horizon) / delta;
  return sigma * std::sqrt(2.0 * std::log(arg) / std::max(1.0, count));
}

double ClusterStats::radius(std::size_t cluster, std::size_t arm, double sigma) const {
  return cluster_radius(sigma, num_arms_, clusters_, horizon_, delta_,
                        static_cast<double>(count(cluster, arm)));
}

bool ClusterStats::observed(std::size_t cluster) const {
  for (std::size_t i = 0; i < num_arms_; ++i) {
    if (count(cluster, i) == 0) return false;
  }
  return true;
}

TransferOutcome cluster_inherit(const AgentProfile& agent, const ClusterStats& stats,
                                double sigma) {
  if (!agent.cluster) throw ModelMismatch("cluster transfer needs a cluster label");
  const int c = *agent.cluster;
  if (c < 0 || static_cast<std::size_t>(c) >= stats.clusters()) {
    throw ModelMismatch("cluster label outside the statistics table");
  }
  const std::size_t k = stats.num_arms();
  bool any = false;
  std::vector<double> est(k, 0.0);
  double cert = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (stats.count(c, i) == 0) {
      cert = 1.0;
      continue;
    }
    any = true;
    est[i] = stats.mean(c, i);
    cert = std::max(cert, stats.radius(c, i, sigma));
  }
  if (!any) return zero_knowledge_init(k);
  return make_outcome(std::move(est), cert, TransferMode::cluster);
}

PretrainingError pretraining_error(const std::vector<double>& estimates,
                                   const std::vector<double>& true_means) {
  if (estimates.size() != true_means.size()) {
    throw InvalidParameter("estimate and mean vectors differ in length");
  }
  PretrainingError out;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    out.error = std::max(out.error, std::fabs(estimates[i] - true_means[i]));
  }
  out.degree = out.error > 0.0 ? 1.0 / out.error : std::numeric_limits<double>::infinity();
  return out;
}

double linear_neighbor_radius(double sigma, std::size_t dim, std::size_t num_arms,
                              std::int64_t horizon, double delta, double lambda, double norm_bound,
                              double kappa, double effective_samples) {
  const double beta = sigma * std::sqrt(static_cast<double>(dim) *
                                        std::log(static_cast<double>(num_arms) *
                                                 static_cast<double>(horizon) / delta)) +
                      std::sqrt(lambda) * norm_bound;
  return beta / std::sqrt(lambda + kappa * effective_samples);
}

}  // namespace omab
