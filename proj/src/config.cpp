#include "omab/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "omab/error.hpp"

namespace omab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(s);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (!v.empty() && v[0] == '-') throw ConfigError("key '" + key + "': must be non-negative");
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& f : split(v, ',')) out.push_back(to_double(key, f));
  return out;
}

/// Reads generator parameters and complains about any it did not consume.
class ParamReader {
 public:
  ParamReader(const ParamMap& params, std::string prefix)
      : params_(params), prefix_(std::move(prefix)) {}

  std::optional<std::string> raw(const std::string& name) {
    used_.insert(name);
    auto it = params_.find(name);
    if (it == params_.end()) return std::nullopt;
    return it->second;
  }
  double real(const std::string& name, double def) {
    auto v = raw(name);
    return v ? to_double(prefix_ + name, *v) : def;
  }
  std::int64_t integer(const std::string& name, std::int64_t def) {
    auto v = raw(name);
    return v ? to_int(prefix_ + name, *v) : def;
  }
  std::uint64_t count(const std::string& name, std::uint64_t def) {
    auto v = raw(name);
    return v ? to_uint(prefix_ + name, *v) : def;
  }
  std::string text(const std::string& name, const std::string& def) {
    auto v = raw(name);
    return v ? *v : def;
  }
  void finish() const {
    for (const auto& [k, v] : params_) {
      if (!used_.count(k)) throw ConfigError("unknown key '" + prefix_ + k + "'");
    }
  }

 private:
  const ParamMap& params_;
  std::string prefix_;
  std::set<std::string> used_;
};

NoiseModel read_noise(ParamReader& r, const std::string& def) {
  const auto kind = r.text("noise", def);
  const double sigma = r.real("sigma", 0.5);
  if (kind == "bernoulli") return BernoulliNoise{};
  if (kind == "gaussian") return GaussianNoise{sigma};
  throw ConfigError("key 'instance.noise': expected bernoulli or gaussian, got '" + kind + "'");
}

Matrix read_matrix(const std::string& key, const std::string& v) {
  Matrix out;
  for (const auto& row : split(v, ';')) out.push_back(to_doubles(key, row));
  return out;
}

}  // namespace

std::vector<std::string> generator_names() {
  return {"pivotal", "blocks", "stable_pair", "stable_clustered",
          "clustered", "linear", "nonlinear", "random_tabular"};
}

InstanceSpec generate_instance(const std::string& kind, const ParamMap& params,
                               std::optional<std::uint64_t> seed_override) {
  ParamReader r(params, "instance.");
  const std::uint64_t seed = seed_override ? *seed_override : r.count("seed", 1);
  if (seed_override) r.raw("seed");
  InstanceSpec spec;
  try {
    if (kind == "pivotal") {
      PivotalParams p;
      p.horizon = r.integer("T", 200);
      p.initial_size = r.count("M0", 10);
      const auto every = r.integer("every", 1);
      const auto batch = r.count("batch", 1);
      if (every < 1) throw ConfigError("key 'instance.every' must be at least 1");
      for (std::int64_t t = 1; t <= p.horizon; t += every) p.arrivals.entries.push_back({t, batch, 0});
      p.p_schedule = {r.real("p", 0.25)};
      p.arrival_lifetime = r.integer("lifetime", 1);
      p.seed = seed;
      spec = gen_pivotal(p);
    } else if (kind == "blocks") {
      BlocksParams p;
      p.block_length = r.integer("H0", 2);
      p.informative_rate = r.real("lambda_I", 0.5);
      p.ordinary_rate = r.real("lambda_O", 1.0);
      p.q = r.real("q", 0.5);
      p.ordinary_q = r.real("q_O", 0.05);
      p.gap = r.real("gap", 0.25);
      p.horizon = r.integer("T", 2000);
      p.initial_size = r.count("M0", 5);
      p.seed = seed;
      spec = gen_zero_knowledge_blocks(p);
    } else if (kind == "stable_pair") {
      StablePairParams p;
      p.gap = r.real("gap", 0.1);
      p.horizon = r.integer("T", 1000);
      p.initial_size = r.count("M0", 10);
      p.arrival_rate = r.real("lambda_A", 1.0);
      p.seed = seed;
      const auto variant = r.text("variant", "nu");
      auto pair = gen_stable_pair(p);
      if (variant == "nu") {
        spec = pair.first;
      } else if (variant == "nu_prime") {
        spec = pair.second;
      } else {
        throw ConfigError("key 'instance.variant': expected nu or nu_prime");
      }
    } else if (kind == "stable_clustered") {
      spec = gen_stable_clustered(r.integer("T", 5000), seed);
    } else if (kind == "clustered") {
      ClusteredParams p;
      p.theta = read_matrix("instance.theta", r.text("theta", "0.05,0.95;0.8,0.2"));
      p.rates = to_doubles("instance.rates", r.text("rates", "0.8,0.2"));
      p.initial_composition.clear();
      for (double c : to_doubles("instance.composition", r.text("composition", "32,8"))) {
        if (c < 0 || c != static_cast<double>(static_cast<std::size_t>(c))) {
          throw ConfigError("key 'instance.composition': counts must be non-negative integers");
        }
        p.initial_composition.push_back(static_cast<std::size_t>(c));
      }
      p.horizon = r.integer("T", 1000);
      p.noise = read_noise(r, "bernoulli");
      p.transfer = transfer_mode_from_string(r.text("transfer", "cluster"));
      p.delta = r.real("delta", 0.05);
      p.seed = seed;
      spec = gen_clustered(p);
    } else if (kind == "linear" || kind == "nonlinear") {
      LinearParams p;
      p.dim = r.count("d", 3);
      p.num_arms = r.count("K", 2);
      p.gamma = r.real("gamma", 1.0);
      p.horizon = r.integer("T", 1000);
      p.initial_size = r.count("M0", 10);
      p.arrival_rate = r.real("lambda_A", 1.0);
      p.sigma = r.real("sigma", 0.1);
      p.seed = seed;
      spec = kind == "linear" ? gen_linear(p) : gen_nonlinear(p);
    } else if (kind == "random_tabular") {
      RandomTabularParams p;
      p.num_arms = r.count("K", 3);
      p.horizon = r.integer("T", 500);
      p.initial_size = r.count("M0", 10);
      p.arrival_rate = r.real("lambda_A", 1.0);
      p.departure_rate = r.real("lambda_D", 0.0);
      p.noise = read_noise(r, "bernoulli");
      p.seed = seed;
      spec = gen_random_tabular(p);
    } else {
      throw ConfigError("unknown instance kind '" + kind + "'");
    }
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("instance parameters: ") + e.what());
  } catch (const InvalidModel& e) {
    throw ConfigError(std::string("instance parameters: ") + e.what());
  }
  r.finish();
  return spec;
}

InstanceSpec resolve_instance(const SimConfig& config, std::optional<std::uint64_t> seed_override) {
  InstanceSpec spec;
  if (!config.instance_path.empty()) {
    spec = load_instance(config.instance_path);
  } else {
    spec = generate_instance(config.instance_kind, config.instance_params, seed_override);
  }
  if (config.num_arms && *config.num_arms != spec.num_arms) {
    throw ConfigError("key 'K': config says " + std::to_string(*config.num_arms) +
                      " but the instance has " + std::to_string(spec.num_arms));
  }
  if (config.horizon && *config.horizon != spec.horizon) {
    throw ConfigError("key 'T': config says " + std::to_string(*config.horizon) +
                      " but the instance has " + std::to_string(spec.horizon));
  }
  return spec;
}

SimConfig parse_config(std::istream& in, const std::string& base_dir) {
  SimConfig cfg;
  ParamMap policy_params;
  std::string policy_name_value = "certified_global_ucb";
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("key '" + key + "' appears twice");
    if (key == "instance") {
      std::filesystem::path p(value);
      cfg.instance_path = p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
    } else if (key == "instance.kind") {
      cfg.instance_kind = value;
    } else if (key == "instance.regenerate") {
      cfg.regenerate = to_bool(key, value);
    } else if (key.rfind("instance.", 0) == 0) {
      cfg.instance_params[key.substr(9)] = value;
    } else if (key == "policy") {
      policy_name_value = value;
    } else if (key.rfind("policy.", 0) == 0) {
      policy_params[key.substr(7)] = value;
    } else if (key == "replications") {
      const auto n = to_int(key, value);
      if (n < 1) throw ConfigError("key 'replications': must be at least 1");
      cfg.replications = static_cast<std::size_t>(n);
    } else if (key == "seed") {
      cfg.seed = to_uint(key, value);
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "report") {
      cfg.report = split(value, ',');
      for (const auto& label : cfg.report) {
        if (label != "r_round" && label != "r_agentsum" && label != "rbar_round" &&
            label != "rbar_agentsum") {
          throw ConfigError("key 'report': unknown regret label '" + label + "'");
        }
      }
    } else if (key == "validate.lemmas") {
      cfg.validate_lemmas = to_bool(key, value);
    } else if (key == "parallel") {
      cfg.parallel = to_bool(key, value);
    } else if (key == "T") {
      cfg.horizon = to_int(key, value);
    } else if (key == "K") {
      const auto k = to_int(key, value);
      if (k < 1) throw ConfigError("key 'K': must be at least 1");
      cfg.num_arms = static_cast<std::size_t>(k);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  if (cfg.instance_path.empty() == cfg.instance_kind.empty()) {
    throw ConfigError("key 'instance': give exactly one of 'instance' or 'instance.kind'");
  }
  if (!cfg.instance_path.empty() && !cfg.instance_params.empty()) {
    throw ConfigError("key 'instance." + cfg.instance_params.begin()->first +
                      "': generator parameters need 'instance.kind'");
  }

  ParamReader r(policy_params, "policy.");
  const std::string& pn = policy_name_value;
  if (pn == "certified_global_ucb") {
    CertifiedGlobalUcb p;
    p.c1 = r.real("c1", 2.0);
    p.beta = r.real("beta", 0.5);
    if (auto v = r.raw("eps_comm")) p.eps_comm = to_doubles("policy.eps_comm", *v);
    p.eps_power = r.real("eps_power", 0.0);
    cfg.policy = p;
  } else if (pn == "clustered_ucb") {
    ClusteredUcb p;
    p.c1 = r.real("c1", 2.0);
    p.beta = r.real("beta", 0.5);
    p.burn_in = r.integer("burn_in", 0);
    cfg.policy = p;
  } else if (pn == "oracle") {
    cfg.policy = OraclePolicy{};
  } else if (pn == "uniform_random") {
    cfg.policy = UniformRandomPolicy{};
  } else if (pn == "round_robin") {
    cfg.policy = RoundRobinPolicy{};
  } else if (pn == "fixed_arm") {
    const auto arm = r.integer("arm", 1);
    if (arm < 1) throw ConfigError("key 'policy.arm': arms are numbered from 1");
    cfg.policy = FixedArmPolicy{static_cast<std::size_t>(arm - 1)};
  } else if (pn == "commit_after_burnin") {
    CommitAfterBurnin p;
    const auto tau = r.text("tau", "auto");
    if (tau == "auto") {
      p.adaptive = AdaptiveBurnin{r.real("gap", 0.3), r.real("delta", 0.05)};
    } else {
      p.tau = to_int("policy.tau", tau);
    }
    cfg.policy = p;
  } else {
    throw ConfigError("key 'policy': unknown policy '" + pn + "'");
  }
  r.finish();

  const InstanceSpec spec = resolve_instance(cfg);
  try {
    validate_policy(cfg.policy, spec.num_arms, spec.horizon);
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("key 'policy': ") + e.what());
  }
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(in, dir.empty() ? "." : dir.string());
}

}  // namespace omab
