#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "omab/population.hpp"
#include "omab/rng.hpp"

namespace omab {

using Matrix = std::vector<std::vector<double>>;

/// Explicit per-agent means. Agents missing from the table use the means
/// stored on their profile.
struct TabularModel {
  std::unordered_map<AgentId, std::vector<double>> table;
};

/// mean = <x, theta_i>; theta is K rows of length d.
struct LinearModel {
  Matrix theta;
};

using LinkFn = std::function<double(const std::vector<double>& x, const std::vector<double>& theta)>;

/// mean = f_i(x, theta_i). Without a user link this is the logistic of <x, theta_i>,
/// whose Lipschitz constant in theta is at most 1/4 for unit-norm features.
struct NonlinearModel {
  Matrix theta;
  std::vector<double> lipschitz;  // per arm
  LinkFn link;                    // empty: logistic
};

/// mean = theta[c][i] for an agent in cluster c.
struct ClusteredModel {
  Matrix theta;  // C rows of length K
};

struct GaussianNoise {
  double sigma = 0.5;
};
struct BernoulliNoise {};

using NoiseModel = std::variant<GaussianNoise, BernoulliNoise>;

struct RewardModel {
  std::size_t num_arms = 2;
  std::variant<TabularModel, LinearModel, NonlinearModel, ClusteredModel> kind = TabularModel{};
  NoiseModel noise = BernoulliNoise{};

  /// Shape checks: row lengths, positive sigma, Lipschitz constants present.
  void validate() const;
  /// Sub-Gaussian scale: sigma for Gaussian noise, 1/2 for Bernoulli.
  double noise_scale() const;
};

double logistic(double z);

double mean_of(const RewardModel& model, const AgentProfile& agent, std::size_t arm);
std::vector<double> mean_vector_of(const RewardModel& model, const AgentProfile& agent);

/// One draw around a known mean.
double draw_reward(const NoiseModel& noise, double mean, Rng& rng);
double sample_reward(const RewardModel& model, const AgentProfile& agent, std::size_t arm, Rng& rng);

struct GlobalValues {
  std::int64_t round = 0;
  std::vector<double> unnormalized;
  std::vector<double> normalized;
  std::size_t optimal_arm = 0;
  double gap = std::numeric_limits<double>::infinity();  // +inf when K = 1
  std::size_t population = 0;
};

/// Index of the largest entry, ties to the lowest index.
std::size_t argmax_lowest(const std::vector<double>& values);

/// Sums the ground-truth mean vectors stored on the active agents' profiles.
GlobalValues global_values(const PopulationSnapshot& snapshot, const AgentRegistry& agents,
                           std::size_t num_arms);
/// Same, recomputing every mean through the model.
GlobalValues global_values(const RewardModel& model, const PopulationSnapshot& snapshot,
                           const AgentRegistry& agents);

/// max_i |Vbar_t(i) - Vbar_{t-1}(i)| and the allowance |A_t| / M_t.
struct PerturbationCheck {
  double shift = 0.0;
  double allowance = 0.0;
  bool applicable = false;  // no departures and M_t >= 1
  bool holds = true;
};
PerturbationCheck check_perturbation(const GlobalValues& prev, const GlobalValues& cur,
                                     std::size_t arrivals, std::size_t departures,
                                     double tolerance = 1e-12);

/// Premise: unique previous maximizer and |A_t| / M_t < Delta_{t-1} / 2.
/// Conclusion: same maximizer, and Delta_t >= Delta_{t-1} - 2 |A_t| / M_t.
struct StabilityCheck {
  bool premise = false;
  bool stable = true;
  bool holds = true;
};
StabilityCheck check_one_step(const GlobalValues& prev, const GlobalValues& cur,
                              std::size_t arrivals, std::size_t departures,
                              double tolerance = 1e-12);

/// Samples random parameter pairs and checks |f(x,a) - f(x,b)| <= L ||a - b||.
/// Returns the number of violations out of `samples`.
std::size_t lipschitz_violations(const NonlinearModel& model, std::size_t feature_dim,
                                 std::size_t samples, Rng& rng);

/// Lines `agent_id,mu_1,...,mu_K`.
TabularModel load_tabular(const std::string& path, std::size_t num_arms);

}  // namespace omab
