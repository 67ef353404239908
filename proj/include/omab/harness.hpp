#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "omab/config.hpp"
#include "omab/simulation.hpp"

namespace omab {

struct ReplicationRow {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  RegretRow totals;
  std::optional<std::int64_t> tau_stab;
  std::optional<std::int64_t> tau_id;
  std::optional<std::int64_t> tau;
  std::optional<std::int64_t> commit_round;
  std::optional<std::size_t> committed_arm;
  std::optional<bool> good_event;
  double post_commit_rbar = 0.0;
  std::size_t arrivals = 0;
  double certificate_violation_rate = 0.0;
  double arrival_error_sum = 0.0;
  double budget_ratio = 0.0;
  double implied_c0 = 0.0;
  std::size_t perturbation_checks = 0;
  std::size_t perturbation_violations = 0;
  std::size_t stability_checks = 0;
  std::size_t stability_violations = 0;
  std::size_t arrival_bonus_mismatches = 0;
  std::string assertion;  // empty unless a runtime check aborted the replication
};

struct LabelStats {
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

struct RunSummary {
  std::vector<ReplicationRow> rows;
  std::map<std::string, LabelStats> aggregate;
  bool assertion_failed = false;
  std::string output_dir;
};

/// Mean, sample standard deviation and linearly interpolated quantiles.
LabelStats summarize(std::vector<double> values);

/// OMAB_OUTPUT_DIR overrides the configured directory.
std::string output_directory(const SimConfig& config);

/// Runs every replication, writes rep_<r>.csv and summary.json.
RunSummary run_experiment(const SimConfig& config);
std::string summary_json(const SimConfig& config, const RunSummary& summary);

struct PropertyResult {
  std::string module;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidateOptions {
  UpdateKernel update_kernel;  // replaces the local update in the policy properties
};

/// Small-scale run of every module property.
std::vector<PropertyResult> validate(const ValidateOptions& options = {});

}  // namespace omab
