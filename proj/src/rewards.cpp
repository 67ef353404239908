#include "omab/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "omab/error.hpp"

namespace omab {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double checked_mean(double mu, const AgentProfile& agent, std::size_t arm) {
  if (!(mu >= 0.0 && mu <= 1.0)) {
    throw InvalidModel("agent " + std::to_string(agent.id) + " arm " + std::to_string(arm + 1) +
                       " has mean " + std::to_string(mu) + " outside [0,1]");
  }
  return mu;
}

const std::vector<double>& features_of(const AgentProfile& agent, std::size_t dim) {
  if (!agent.features) {
    throw ModelMismatch("agent " + std::to_string(agent.id) + " has no features");
  }
  if (agent.features->size() != dim) {
    throw ModelMismatch("agent " + std::to_string(agent.id) + " has " +
                        std::to_string(agent.features->size()) + " features, model expects " +
                        std::to_string(dim));
  }
  return *agent.features;
}

}  // namespace

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void RewardModel::validate() const {
  if (num_arms < 1) throw InvalidModel("at least one arm is required");
  if (const auto* g = std::get_if<GaussianNoise>(&noise)) {
    if (!(g->sigma > 0.0) || !std::isfinite(g->sigma)) {
      throw InvalidModel("Gaussian noise needs sigma > 0");
    }
  }
  auto check_rows = [&](const Matrix& m, std::size_t rows, const char* what) {
    if (m.size() != rows) throw InvalidModel(std::string(what) + " has the wrong number of rows");
    if (m.empty()) return;
    for (const auto& row : m) {
      if (row.size() != m.front().size() || row.empty()) {
        throw InvalidModel(std::string(what) + " rows must share one positive length");
      }
    }
  };
  if (const auto* lin = std::get_if<LinearModel>(&kind)) {
    check_rows(lin->theta, num_arms, "linear theta");
  } else if (const auto* nl = std::get_if<NonlinearModel>(&kind)) {
    check_rows(nl->theta, num_arms, "nonlinear theta");
    if (nl->lipschitz.size() != num_arms) {
      throw InvalidModel("nonlinear model needs one Lipschitz constant per arm");
    }
    for (double l : nl->lipschitz) {
      if (!(l >= 0.0)) throw InvalidModel("Lipschitz constants must be non-negative");
    }
  } else if (const auto* cl = std::get_if<ClusteredModel>(&kind)) {
    if (cl->theta.empty()) throw InvalidModel("clustered model needs at least one cluster");
    for (const auto& row : cl->theta) {
      if (row.size() != num_arms) throw InvalidModel("cluster rows must have K entries");
      for (double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidModel("cluster means must lie in [0,1]");
      }
    }
  } else {
    for (const auto& [id, row] : std::get<TabularModel>(kind).table) {
      if (row.size() != num_arms) {
        throw InvalidModel("tabular row for agent " + std::to_string(id) + " has wrong length");
      }
    }
  }
}

double RewardModel::noise_scale() const {
  if (const auto* g = std::get_if<GaussianNoise>(&noise)) return g->sigma;
  return 0.5;
}

double mean_of(const RewardModel& model, const AgentProfile& agent, std::size_t arm) {
  if (arm >= model.num_arms) throw InvalidParameter("arm index out of range");
  return std::visit(
      [&](const auto& kind) -> double {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, TabularModel>) {
          auto it = kind.table.find(agent.id);
          const std::vector<double>* row = nullptr;
          if (it != kind.table.end()) {
            row = &it->second;
          } else if (agent.mean_vector.size() == model.num_arms) {
            row = &agent.mean_vector;
          } else {
            throw ModelMismatch("agent " + std::to_string(agent.id) + " has no tabular means");
          }
          return checked_mean((*row)[arm], agent, arm);
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          const auto& x = features_of(agent, kind.theta[arm].size());
          return checked_mean(dot(x, kind.theta[arm]), agent, arm);
        } else if constexpr (std::is_same_v<T, NonlinearModel>) {
          const auto& x = features_of(agent, kind.theta[arm].size());
          const double mu = kind.link ? kind.link(x, kind.theta[arm])
                                      : logistic(dot(x, kind.theta[arm]));
          return checked_mean(mu, agent, arm);
        } else {
          if (!agent.cluster) {
            throw ModelMismatch("agent " + std::to_string(agent.id) + " has no cluster label");
          }
          const int c = *agent.cluster;
          if (c < 0 || static_cast<std::size_t>(c) >= kind.theta.size()) {
            throw ModelMismatch("agent " + std::to_string(agent.id) + " has cluster " +
                                std::to_string(c) + " outside the model");
          }
          return checked_mean(kind.theta[c][arm], agent, arm);
        }
      },
      model.kind);
}

std::vector<double> mean_vector_of(const RewardModel& model, const AgentProfile& agent) {
  std::vector<double> out(model.num_arms);
  for (std::size_t i = 0; i < model.num_arms; ++i) out[i] = mean_of(model, agent, i);
  return out;
}

double draw_reward(const NoiseModel& noise, double mean, Rng& rng) {
  if (const auto* g = std::get_if<GaussianNoise>(&noise)) {
    return mean + std::normal_distribution<double>(0.0, g->sigma)(rng);
  }
  return uniform01(rng) < mean ? 1.0 : 0.0;
}

double sample_reward(const RewardModel& model, const AgentProfile& agent, std::size_t arm,
                     Rng& rng) {
  return draw_reward(model.noise, mean_of(model, agent, arm), rng);
}

std::size_t argmax_lowest(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

GlobalValues finish_values(GlobalValues g, std::size_t num_arms) {
  const double m = static_cast<double>(g.population);
  g.normalized.resize(num_arms);
  for (std::size_t i = 0; i < num_arms; ++i) g.normalized[i] = g.unnormalized[i] / m;
  g.optimal_arm = argmax_lowest(g.unnormalized);
  g.gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < num_arms; ++i) {
    if (i == g.optimal_arm) continue;
    g.gap = std::min(g.gap, g.normalized[g.optimal_arm] - g.normalized[i]);
  }
  return g;
}

}  // namespace

GlobalValues global_values(const PopulationSnapshot& snapshot, const AgentRegistry& agents,
                           std::size_t num_arms) {
  if (snapshot.active.empty()) {
    throw EmptyPopulation("round " + std::to_string(snapshot.round) + " has no active agents");
  }
  GlobalValues g;
  g.round = snapshot.round;
  g.population = snapshot.size();
  g.unnormalized.assign(num_arms, 0.0);
  for (AgentId id : snapshot.active) {
    const auto& mu = agents.at(id).mean_vector;
    for (std::size_t i = 0; i < num_arms; ++i) g.unnormalized[i] += mu[i];
  }
  return finish_values(std::move(g), num_arms);
}

GlobalValues global_values(const RewardModel& model, const PopulationSnapshot& snapshot,
                           const AgentRegistry& agents) {
  if (snapshot.active.empty()) {
    throw EmptyPopulation("round " + std::to_string(snapshot.round) + " has no active agents");
  }
  GlobalValues g;
  g.round = snapshot.round;
  g.population = snapshot.size();
  g.unnormalized.assign(model.num_arms, 0.0);
  for (AgentId id : snapshot.active) {
    const auto& agent = agents.at(id);
    for (std::size_t i = 0; i < model.num_arms; ++i) g.unnormalized[i] += mean_of(model, agent, i);
  }
  return finish_values(std::move(g), model.num_arms);
}

PerturbationCheck check_perturbation(const GlobalValues& prev, const GlobalValues& cur,
                                     std::size_t arrivals, std::size_t departures,
                                     double tolerance) {
  PerturbationCheck out;
  if (departures != 0 || cur.population == 0 || prev.population == 0) return out;
  out.applicable = true;
  out.allowance = static_cast<double>(arrivals) / static_cast<double>(cur.population);
  for (std::size_t i = 0; i < cur.normalized.size(); ++i) {
    out.shift = std::max(out.shift, std::fabs(cur.normalized[i] - prev.normalized[i]));
  }
  out.holds = out.shift <= out.allowance + tolerance;
  return out;
}

StabilityCheck check_one_step(const GlobalValues& prev, const GlobalValues& cur,
                              std::size_t arrivals, std::size_t departures, double tolerance) {
  StabilityCheck out;
  if (departures != 0 || cur.population == 0 || prev.population == 0) return out;
  const double ratio = static_cast<double>(arrivals) / static_cast<double>(cur.population);
  out.premise = prev.gap > 0.0 && ratio < prev.gap / 2.0;
  out.stable = cur.optimal_arm == prev.optimal_arm;
  if (out.premise) {
    out.holds = out.stable && cur.gap >= prev.gap - 2.0 * ratio - tolerance;
  }
  return out;
}

std::size_t lipschitz_violations(const NonlinearModel& model, std::size_t feature_dim,
                                 std::size_t samples, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t bad = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t arm = s % model.theta.size();
    const std::size_t p = model.theta[arm].size();
    std::vector<double> x(feature_dim);
    double norm = 0.0;
    for (double& v : x) {
      v = gauss(rng);
      norm += v * v;
    }
    const double radius = std::pow(uniform01(rng), 1.0 / static_cast<double>(feature_dim));
    norm = std::sqrt(norm);
    for (double& v : x) v *= radius / norm;
    std::vector<double> a = model.theta[arm];
    std::vector<double> b = model.theta[arm];
    double dist = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      a[k] += gauss(rng);
      b[k] += gauss(rng);
      dist += (a[k] - b[k]) * (a[k] - b[k]);
    }
    dist = std::sqrt(dist);
    auto f = [&](const std::vector<double>& th) {
      return model.link ? model.link(x, th) : logistic(dot(x, th));
    };
    if (std::fabs(f(a) - f(b)) > model.lipschitz[arm] * dist + 1e-12) ++bad;
  }
  return bad;
}

TabularModel load_tabular(const std::string& path, std::size_t num_arms) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tabular means file " + path);
  TabularModel out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != num_arms + 1) {
      throw InvalidModel(path + ":" + std::to_string(line_no) + ": expected agent id and " +
                         std::to_string(num_arms) + " means");
    }
    try {
      const AgentId id = std::stoull(fields[0]);
      std::vector<double> row(num_arms);
      for (std::size_t i = 0; i < num_arms; ++i) row[i] = std::stod(fields[i + 1]);
      for (double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidModel("mean outside [0,1]");
      }
      if (!out.table.emplace(id, std::move(row)).second) {
        throw InvalidModel("duplicate agent id");
      }
    } catch (const InvalidModel& e) {
      throw InvalidModel(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception&) {
      throw InvalidModel(path + ":" + std::to_string(line_no) + ": unparsable number");
    }
  }
  return out;
}

}  // namespace omab
