#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "omab/instances.hpp"
#include "omab/policy.hpp"

namespace omab {

using ParamMap = std::map<std::string, std::string>;

/// Experiment description read from a `key = value` file.
///
///   instance            path to an instance document (relative to the config file)
///   instance.kind       generator name, instead of a path
///   instance.<param>    generator parameter
///   instance.regenerate true: regenerate the instance per replication from its seed
///   policy              certified_global_ucb | clustered_ucb | oracle | uniform_random |
///                       round_robin | fixed_arm | commit_after_burnin
///   policy.<param>      c1, beta, eps_comm, eps_power, burn_in, arm, tau, gap, delta
///   replications, seed, output_dir, report, validate.lemmas, parallel, T, K
struct SimConfig {
  std::string instance_path;
  std::string instance_kind;
  ParamMap instance_params;
  bool regenerate = false;
  PolicyKind policy = CertifiedGlobalUcb{};
  std::size_t replications = 1;
  std::uint64_t seed = 1;
  std::string output_dir = "omab_out";
  std::vector<std::string> report = {"r_round", "r_agentsum", "rbar_round", "rbar_agentsum"};
  bool validate_lemmas = true;
  bool parallel = false;
  std::optional<std::int64_t> horizon;
  std::optional<std::size_t> num_arms;
};

/// Parses and validates; every error names the offending key.
SimConfig parse_config(std::istream& in, const std::string& base_dir = ".");
SimConfig load_config(const std::string& path);

/// Instance generators by name: pivotal, blocks, stable_pair, stable_clustered,
/// clustered, linear, nonlinear, random_tabular.
InstanceSpec generate_instance(const std::string& kind, const ParamMap& params,
                               std::optional<std::uint64_t> seed_override = std::nullopt);
std::vector<std::string> generator_names();

/// Loads or generates the configured instance and checks K and T against it.
InstanceSpec resolve_instance(const SimConfig& config,
                              std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace omab
