#include "omab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "omab/csv.hpp"
#include "omab/error.hpp"
#include "omab/replication.hpp"

namespace omab {

using json = nlohmann::json;

LabelStats summarize(std::vector<double> values) {
  LabelStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(sq / (n - 1.0));
  }
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.q05 = quantile(0.05);
  s.q50 = quantile(0.5);
  s.q95 = quantile(0.95);
  return s;
}

std::string output_directory(const SimConfig& config) {
  if (const char* env = std::getenv("OMAB_OUTPUT_DIR"); env && *env) return env;
  return config.output_dir;
}

namespace {

double label_value(const RegretRow& r, const std::string& label) {
  if (label == "r_round") return r.r_round;
  if (label == "r_agentsum") return r.r_agentsum;
  if (label == "rbar_round") return r.rbar_round;
  return r.rbar_agentsum;
}

ReplicationRow make_row(std::size_t index, std::uint64_t seed, const RunResult& res,
                        const SimConfig& cfg, const InstanceSpec& spec) {
  ReplicationRow row;
  row.index = index;
  row.seed = seed;
  row.totals = res.totals;
  row.commit_round = res.commit_round;
  row.committed_arm = res.committed_arm;
  row.good_event = res.good_event;
  row.post_commit_rbar = res.post_commit_rbar;
  row.arrivals = res.arrivals_total;
  row.certificate_violation_rate =
      res.arrivals_total ? static_cast<double>(res.certificate_violations) /
                               static_cast<double>(res.arrivals_total)
                         : 0.0;
  row.arrival_error_sum = res.arrival_error_sum;
  row.budget_ratio =
      regret_budget(res.totals.r_round, spec.initial_size, spec.horizon, res.arrival_error_sum)
          .ratio;
  const double log_budget =
      static_cast<double>(spec.initial_size) * std::log(static_cast<double>(spec.horizon));
  row.implied_c0 = log_budget > 0.0 ? res.chosen_stat_bonus_sum / log_budget : 0.0;
  row.perturbation_checks = res.perturbation_checks;
  row.perturbation_violations = res.perturbation_violations;
  row.stability_checks = res.stability_checks;
  row.stability_violations = res.stability_violations;
  row.arrival_bonus_mismatches = res.arrival_bonus_mismatches;
  if (const auto* p = std::get_if<CommitAfterBurnin>(&cfg.policy); p && p->adaptive) {
    const double ns = n_stab(p->adaptive->gap, p->adaptive->delta_conf, spec.num_arms,
                             spec.horizon);
    const double ni = n_id(p->adaptive->gap, p->adaptive->delta_conf, spec.num_arms);
    try {
      row.tau_stab = tau_stab(res.sizes, ns);
    } catch (const InvalidParameter&) {
      row.tau_stab.reset();
    }
    row.tau_id = tau_id_round_robin(res.sizes, spec.num_arms, ni);
    if (row.tau_stab && row.tau_id) row.tau = std::max(*row.tau_stab, *row.tau_id);
  }
  return row;
}

// Regenerated instances draw from a seed decorrelated from the simulation streams.
std::uint64_t instance_seed(std::uint64_t replication) {
  return splitmix64(replication ^ 0x6A09E667F3BCC909ULL);
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

RunSummary run_experiment(const SimConfig& config) {
  RunSummary summary;
  summary.output_dir = output_directory(config);
  const InstanceSpec base = resolve_instance(config);
  validate_policy(config.policy, base.num_arms, base.horizon);

  std::vector<std::string> assertions(config.replications);
  std::vector<InstanceSpec> specs(config.replications);
  SimOptions options;
  options.check_lemmas = config.validate_lemmas;
  const bool regenerate = config.regenerate && !config.instance_kind.empty();
  auto results = run_replications(
      config.replications, config.seed, config.parallel,
      [&](std::size_t r, std::uint64_t seed) {
        specs[r] = regenerate ? resolve_instance(config, instance_seed(seed)) : base;
        try {
          return simulate(specs[r], config.policy, seed, options);
        } catch (const InvariantViolation& e) {
          assertions[r] = e.what();
          return RunResult{};
        }
      });

  std::error_code ec;
  std::filesystem::create_directories(summary.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + summary.output_dir);
  for (std::size_t r = 0; r < results.size(); ++r) {
    const std::uint64_t seed = replication_seed(config.seed, r);
    ReplicationRow row = make_row(r, seed, results[r], config, specs[r]);
    row.assertion = assertions[r];
    if (!row.assertion.empty()) summary.assertion_failed = true;
    summary.rows.push_back(row);
    const auto path = std::filesystem::path(summary.output_dir) / ("rep_" + std::to_string(r) + ".csv");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_records(out, results[r].records, base.num_arms);
    if (!out) throw IoError("failed writing " + path.string());
  }
  for (const auto& label : config.report) {
    std::vector<double> values;
    for (const auto& row : summary.rows) values.push_back(label_value(row.totals, label));
    summary.aggregate[label] = summarize(values);
  }
  const auto path = std::filesystem::path(summary.output_dir) / "summary.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << summary_json(config, summary);
  if (!out) throw IoError("failed writing " + path.string());
  return summary;
}

std::string summary_json(const SimConfig& config, const RunSummary& summary) {
  json j;
  j["policy"] = policy_name(config.policy);
  j["replications"] = config.replications;
  j["seed"] = config.seed;
  j["assertion_failed"] = summary.assertion_failed;
  json rows = json::array();
  for (const auto& r : summary.rows) {
    json row;
    row["index"] = r.index;
    row["seed"] = r.seed;
    for (const auto& label : config.report) row[label] = label_value(r.totals, label);
    row["tau_stab"] = opt(r.tau_stab);
    row["tau_id"] = opt(r.tau_id);
    row["tau"] = opt(r.tau);
    row["commit_round"] = opt(r.commit_round);
    row["committed_arm"] = r.committed_arm ? json(*r.committed_arm + 1) : json(nullptr);
    row["good_event"] = opt(r.good_event);
    row["post_commit_rbar"] = r.post_commit_rbar;
    row["arrivals"] = r.arrivals;
    row["certificate_violation_rate"] = r.certificate_violation_rate;
    row["arrival_error_sum"] = r.arrival_error_sum;
    row["budget_ratio"] = r.budget_ratio;
    row["implied_c0"] = r.implied_c0;
    row["perturbation_checks"] = r.perturbation_checks;
    row["perturbation_violations"] = r.perturbation_violations;
    row["stability_checks"] = r.stability_checks;
    row["stability_violations"] = r.stability_violations;
    row["arrival_bonus_mismatches"] = r.arrival_bonus_mismatches;
    row["assertion"] = r.assertion.empty() ? json(nullptr) : json(r.assertion);
    rows.push_back(row);
  }
  j["rows"] = rows;
  json agg = json::object();
  for (const auto& [label, s] : summary.aggregate) {
    agg[label] = {{"mean", s.mean}, {"sd", s.sd}, {"q05", s.q05}, {"q50", s.q50}, {"q95", s.q95}};
  }
  j["aggregate"] = agg;
  return j.dump(2) + "\n";
}

}  // namespace omab
