#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "omab/population.hpp"
#include "omab/rewards.hpp"

namespace omab {

/// Effective-information schedule for parameter transfer: continuing agents at
/// round t hold N_eff = c_gamma t^gamma samples and a ridge proxy lambda + kappa N_eff.
struct EffectiveInfo {
  double lambda = 1.0;
  double kappa = 1.0;
  double c_gamma = 1.0;
  double gamma = 1.0;
};

struct TransferConfig {
  TransferMode mode = TransferMode::zero_knowledge;
  double sigma = 0.0;        // <= 0: the reward model's noise scale
  double delta = 0.05;
  EffectiveInfo info;
  std::size_t max_neighbors = 0;  // 0: every continuing agent
  double norm_bound = 0.0;        // <= 0: largest ||theta_i|| of the model
};

/// Fields copied onto a generated agent. Unset means are filled from the model.
struct AgentTemplate {
  std::vector<double> means;
  std::optional<std::int64_t> lifetime;
  std::optional<int> cluster;
  std::optional<std::vector<double>> features;
  std::optional<PretrainedEntry> pretrained;
  std::int32_t tag = 0;
};

enum class FactoryKind { explicit_list, homogeneous, uniform_means, clustered, features };

struct FactorySpec {
  FactoryKind kind = FactoryKind::homogeneous;
  std::vector<AgentTemplate> agents;          // explicit_list: agent k is agents[k]
  std::vector<double> template_means;         // homogeneous
  double low = 0.0;                           // uniform_means bounds
  double high = 1.0;
  std::vector<double> cluster_weights;        // clustered: arrival label law
  std::vector<std::size_t> initial_composition;  // clustered: initial agents per cluster
  std::size_t feature_dim = 0;                // features
};

/// Generator-side latent draws kept for evaluation.
struct LatentParams {
  std::vector<double> pivotal_p;
  std::vector<int> pivotal_signs;   // +1: arm 1 favoured, -1: arm 2
  std::vector<int> block_z;
  std::vector<int> block_good;
  std::int64_t block_length = 0;
  int stable_variant = 0;           // 0: nu, 1: nu'
  double base_gap = 0.0;            // gap of the limiting composition, when known
};

struct InstanceSpec {
  std::string name = "instance";
  std::size_t num_arms = 2;
  std::int64_t horizon = 100;
  std::size_t initial_size = 1;
  AgentPattern pattern;
  RewardModel model;
  TransferConfig transfer;
  FactorySpec factory;
  LatentParams latent;
  std::uint64_t seed = 1;

  /// Throws InvalidParameter / InvalidModel on inconsistent fields.
  void validate() const;
  /// Number of clusters when agents carry labels, else 0.
  std::size_t cluster_count() const;
};

/// Builds profiles (features, labels, lifetimes, pretrained entries) and stores
/// the model-induced ground-truth means on each profile.
AgentFactory make_factory(const InstanceSpec& spec);

std::string serialize_instance(const InstanceSpec& spec);
InstanceSpec parse_instance(const std::string& text);
InstanceSpec load_instance(const std::string& path);
void save_instance(const InstanceSpec& spec, const std::string& path);

struct PivotalParams {
  std::int64_t horizon = 100;
  std::size_t initial_size = 10;
  SchedulePattern arrivals;                // only arrival counts are used
  std::vector<double> p_schedule;          // one per arrival, or a single value for all
  std::int64_t arrival_lifetime = 1;
  std::optional<std::vector<int>> signs;   // default: fair coins from the seed
  std::uint64_t seed = 1;
};
InstanceSpec gen_pivotal(const PivotalParams& params);

struct BlocksParams {
  std::int64_t block_length = 2;
  double informative_rate = 0.5;
  double ordinary_rate = 1.0;
  double q = 0.5;
  double ordinary_q = 0.05;
  double gap = 0.25;
  std::int64_t horizon = 2000;
  std::size_t initial_size = 5;
  std::uint64_t seed = 1;
};
InstanceSpec gen_zero_knowledge_blocks(const BlocksParams& params);

struct StablePairParams {
  double gap = 0.1;
  std::int64_t horizon = 1000;
  std::size_t initial_size = 10;
  double arrival_rate = 1.0;
  std::uint64_t seed = 1;
};
std::pair<InstanceSpec, InstanceSpec> gen_stable_pair(const StablePairParams& params);

struct ClusteredParams {
  Matrix theta;                    // C rows of K means
  std::vector<double> rates;       // per-cluster arrival rates
  std::vector<std::size_t> initial_composition;
  std::int64_t horizon = 1000;
  NoiseModel noise = BernoulliNoise{};
  TransferMode transfer = TransferMode::cluster;
  double delta = 0.05;
  std::uint64_t seed = 1;
};
InstanceSpec gen_clustered(const ClusteredParams& params);

/// Two clusters, theta_1 = (0.05, 0.95) at rate 0.8 and theta_2 = (0.8, 0.2) at
/// rate 0.2, 32 + 8 initial agents, Bernoulli rewards. Arm 2 is optimal with
/// limiting gap 0.6.
InstanceSpec gen_stable_clustered(std::int64_t horizon, std::uint64_t seed);

struct LinearParams {
  std::size_t dim = 3;
  std::size_t num_arms = 2;
  Matrix theta;                    // empty: drawn from the seed
  double gamma = 1.0;
  std::int64_t horizon = 1000;
  std::size_t initial_size = 10;
  double arrival_rate = 1.0;
  double sigma = 0.1;
  std::uint64_t seed = 1;
};
InstanceSpec gen_linear(const LinearParams& params);
InstanceSpec gen_nonlinear(const LinearParams& params);

struct RandomTabularParams {
  std::size_t num_arms = 3;
  std::int64_t horizon = 500;
  std::size_t initial_size = 10;
  double arrival_rate = 1.0;
  double departure_rate = 0.0;
  NoiseModel noise = BernoulliNoise{};
  std::uint64_t seed = 1;
};
InstanceSpec gen_random_tabular(const RandomTabularParams& params);

/// First time each cluster appears in the population (round 0 for initial members).
/// Continuous mode places the first arrival inside its round at t - 1 + min of k
/// uniforms, k the cluster's arrivals that round. Clusters never seen get +inf.
std::vector<double> first_appearance_times(const InstanceSpec& spec, std::uint64_t seed,
                                           bool continuous);

}  // namespace omab
