#include "omab/instances.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "omab/error.hpp"

namespace omab {

using json = nlohmann::json;

namespace {

std::vector<double> unit_ball_features(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(dim);
  double norm = 0.0;
  for (double& v : x) {
    v = std::fabs(gauss(rng));
    norm += v * v;
  }
  norm = std::sqrt(norm);
  const double radius = std::pow(uniform01(rng), 1.0 / static_cast<double>(dim));
  for (double& v : x) v = norm > 0.0 ? v * radius / norm : 0.0;
  return x;
}

int categorical(const std::vector<double>& weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    acc += weights[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(weights.size() - 1);
}

void apply_template(AgentProfile& p, const AgentTemplate& tmpl) {
  if (!tmpl.means.empty()) p.mean_vector = tmpl.means;
  if (tmpl.lifetime) p.lifetime = tmpl.lifetime;
  if (tmpl.cluster) p.cluster = tmpl.cluster;
  if (tmpl.features) p.features = tmpl.features;
  if (tmpl.pretrained) p.pretrained = tmpl.pretrained;
  p.tag = tmpl.tag;
}

}  // namespace

std::size_t InstanceSpec::cluster_count() const {
  if (const auto* cl = std::get_if<ClusteredModel>(&model.kind)) return cl->theta.size();
  if (factory.kind == FactoryKind::clustered) return factory.cluster_weights.size();
  return 0;
}

void InstanceSpec::validate() const {
  if (num_arms < 1) throw InvalidParameter("K must be at least 1");
  if (horizon < 1) throw InvalidParameter("T must be at least 1");
  if (model.num_arms != num_arms) throw InvalidParameter("model arm count differs from K");
  model.validate();
  pattern.validate();
  if (!(transfer.delta > 0.0 && transfer.delta < 1.0)) {
    throw InvalidParameter("transfer delta must lie in (0,1)");
  }
  const auto& info = transfer.info;
  if (!(info.lambda > 0.0) || !(info.kappa >= 0.0) || !(info.c_gamma >= 0.0) ||
      !(info.gamma >= 0.0)) {
    throw InvalidParameter("effective-information constants must be non-negative, lambda > 0");
  }
  switch (transfer.mode) {
    case TransferMode::linear:
      if (!std::holds_alternative<LinearModel>(model.kind)) {
        throw InvalidParameter("linear transfer needs a linear reward model");
      }
      break;
    case TransferMode::nonlinear:
      if (!std::holds_alternative<NonlinearModel>(model.kind)) {
        throw InvalidParameter("nonlinear transfer needs a nonlinear reward model");
      }
      break;
    case TransferMode::cluster:
      if (cluster_count() == 0) throw InvalidParameter("cluster transfer needs cluster labels");
      break;
    default: break;
  }
  auto check_means = [&](const std::vector<double>& m, const char* what) {
    if (m.size() != num_arms) throw InvalidParameter(std::string(what) + " needs K means");
    for (double v : m) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidModel(std::string(what) + " mean outside [0,1]");
    }
  };
  switch (factory.kind) {
    case FactoryKind::explicit_list: {
      if (factory.agents.size() < initial_size) {
        throw InvalidParameter("explicit agent list is shorter than the initial population");
      }
      for (std::size_t k = 0; k < factory.agents.size(); ++k) {
        const auto& tmpl = factory.agents[k];
        AgentProfile p;
        p.id = k;
        apply_template(p, tmpl);
        if (tmpl.means.empty() && std::holds_alternative<TabularModel>(model.kind) &&
            !std::get<TabularModel>(model.kind).table.count(k)) {
          throw InvalidParameter("explicit agent " + std::to_string(k) + " has no means");
        }
        p.mean_vector = mean_vector_of(model, p);
        validate_profile(p, num_arms);
        if (tmpl.pretrained && tmpl.pretrained->estimates.size() != num_arms) {
          throw InvalidParameter("pretrained estimates need K entries");
        }
      }
      break;
    }
    case FactoryKind::homogeneous: check_means(factory.template_means, "template"); break;
    case FactoryKind::uniform_means:
      if (!(factory.low >= 0.0 && factory.low <= factory.high && factory.high <= 1.0)) {
        throw InvalidParameter("uniform means need 0 <= low <= high <= 1");
      }
      break;
    case FactoryKind::clustered: {
      if (factory.cluster_weights.empty()) throw InvalidParameter("cluster weights are empty");
      double total = 0.0;
      for (double w : factory.cluster_weights) {
        if (!(w >= 0.0)) throw InvalidParameter("cluster weights must be non-negative");
        total += w;
      }
      if (!(total > 0.0)) throw InvalidParameter("cluster weights must not all be zero");
      if (const auto* cl = std::get_if<ClusteredModel>(&model.kind)) {
        if (cl->theta.size() != factory.cluster_weights.size()) {
          throw InvalidParameter("cluster weights and model clusters differ in number");
        }
      }
      if (factory.initial_composition.size() > factory.cluster_weights.size()) {
        throw InvalidParameter("initial composition lists more clusters than exist");
      }
      if (!factory.initial_composition.empty() &&
          std::accumulate(factory.initial_composition.begin(), factory.initial_composition.end(),
                          std::size_t{0}) != initial_size) {
        throw InvalidParameter("initial composition does not add up to M0");
      }
      break;
    }
    case FactoryKind::features: {
      if (factory.feature_dim < 1) throw InvalidParameter("feature dimension must be positive");
      const Matrix* theta = nullptr;
      if (const auto* lin = std::get_if<LinearModel>(&model.kind)) theta = &lin->theta;
      if (const auto* nl = std::get_if<NonlinearModel>(&model.kind)) theta = &nl->theta;
      if (!theta) throw InvalidParameter("feature factory needs a linear or nonlinear model");
      if (theta->front().size() != factory.feature_dim) {
        throw InvalidParameter("feature dimension differs from the parameter dimension");
      }
      if (std::holds_alternative<LinearModel>(model.kind)) {
        for (const auto& row : *theta) {
          double sq = 0.0;
          for (double v : row) {
            if (v < 0.0) throw InvalidModel("linear parameters must be non-negative");
            sq += v * v;
          }
          if (std::sqrt(sq) > 1.0 + 1e-12) {
            throw InvalidModel("linear parameters must have norm at most 1");
          }
        }
      }
      break;
    }
  }
}

AgentFactory make_factory(const InstanceSpec& spec) {
  auto shared = std::make_shared<const InstanceSpec>(spec);
  return [shared](const ArrivalContext& ctx, Rng& latent) {
    const InstanceSpec& s = *shared;
    const FactorySpec& f = s.factory;
    AgentProfile p;
    p.id = ctx.id;
    p.arrival_time = ctx.round;
    switch (f.kind) {
      case FactoryKind::explicit_list:
        if (ctx.id >= f.agents.size()) {
          throw InvalidParameter("explicit agent list has no entry for agent " +
                                 std::to_string(ctx.id));
        }
        apply_template(p, f.agents[ctx.id]);
        break;
      case FactoryKind::homogeneous: p.mean_vector = f.template_means; break;
      case FactoryKind::uniform_means: {
        p.mean_vector.resize(s.num_arms);
        for (double& v : p.mean_vector) v = f.low + (f.high - f.low) * uniform01(latent);
        break;
      }
      case FactoryKind::clustered: {
        int label = -1;
        if (ctx.round == 0 && !f.initial_composition.empty()) {
          std::size_t acc = 0;
          for (std::size_t c = 0; c < f.initial_composition.size(); ++c) {
            acc += f.initial_composition[c];
            if (ctx.id < acc) {
              label = static_cast<int>(c);
              break;
            }
          }
        }
        if (label < 0) label = categorical(f.cluster_weights, latent);
        p.cluster = label;
        break;
      }
      case FactoryKind::features: p.features = unit_ball_features(f.feature_dim, latent); break;
    }
    p.mean_vector = mean_vector_of(s.model, p);
    validate_profile(p, s.num_arms);
    return p;
  };
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json noise_to_json(const NoiseModel& noise) {
  if (const auto* g = std::get_if<GaussianNoise>(&noise)) {
    return {{"kind", "gaussian"}, {"sigma", g->sigma}};
  }
  return {{"kind", "bernoulli"}};
}

NoiseModel noise_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") return GaussianNoise{j.at("sigma").get<double>()};
  if (kind == "bernoulli") return BernoulliNoise{};
  throw InvalidParameter("unknown noise kind '" + kind + "'");
}

json model_to_json(const RewardModel& m) {
  json j;
  j["num_arms"] = m.num_arms;
  j["noise"] = noise_to_json(m.noise);
  if (const auto* t = std::get_if<TabularModel>(&m.kind)) {
    j["kind"] = "tabular";
    std::vector<AgentId> ids;
    for (const auto& [id, row] : t->table) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    json rows = json::array();
    for (AgentId id : ids) rows.push_back({{"agent", id}, {"means", t->table.at(id)}});
    j["table"] = rows;
  } else if (const auto* lin = std::get_if<LinearModel>(&m.kind)) {
    j["kind"] = "linear";
    j["theta"] = lin->theta;
  } else if (const auto* nl = std::get_if<NonlinearModel>(&m.kind)) {
    if (nl->link) throw InvalidParameter("custom link functions cannot be serialized");
    j["kind"] = "nonlinear";
    j["theta"] = nl->theta;
    j["lipschitz"] = nl->lipschitz;
  } else {
    j["kind"] = "clustered";
    j["theta"] = std::get<ClusteredModel>(m.kind).theta;
  }
  return j;
}

RewardModel model_from_json(const json& j) {
  RewardModel m;
  m.num_arms = j.at("num_arms").get<std::size_t>();
  m.noise = noise_from_json(j.at("noise"));
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "tabular") {
    TabularModel t;
    for (const auto& row : j.at("table")) {
      t.table.emplace(row.at("agent").get<AgentId>(), row.at("means").get<std::vector<double>>());
    }
    m.kind = std::move(t);
  } else if (kind == "linear") {
    m.kind = LinearModel{j.at("theta").get<Matrix>()};
  } else if (kind == "nonlinear") {
    NonlinearModel nl;
    nl.theta = j.at("theta").get<Matrix>();
    nl.lipschitz = j.at("lipschitz").get<std::vector<double>>();
    m.kind = std::move(nl);
  } else if (kind == "clustered") {
    m.kind = ClusteredModel{j.at("theta").get<Matrix>()};
  } else {
    throw InvalidParameter("unknown reward model kind '" + kind + "'");
  }
  return m;
}

json pattern_to_json(const AgentPattern& p) {
  json j;
  if (const auto* po = std::get_if<PoissonPattern>(&p.process)) {
    j["kind"] = "poisson";
    j["arrival_rate"] = po->arrival_rate;
    j["departure_rate"] = po->departure_rate;
  } else if (const auto* s = std::get_if<SchedulePattern>(&p.process)) {
    j["kind"] = "schedule";
    json rows = json::array();
    for (const auto& e : s->entries) rows.push_back({e.round, e.arrivals, e.departures});
    j["entries"] = rows;
  } else {
    j["kind"] = "trace";
    json rows = json::array();
    for (const auto& e : std::get<TracePattern>(p.process).events) {
      rows.push_back({e.round, e.kind == TraceEventKind::arrive ? "arrive" : "depart", e.agent});
    }
    j["events"] = rows;
  }
  switch (p.lifetime.kind) {
    case LifetimeLaw::Kind::none: j["lifetime"] = {{"kind", "none"}}; break;
    case LifetimeLaw::Kind::geometric:
      j["lifetime"] = {{"kind", "geometric"}, {"q", p.lifetime.q}};
      break;
    case LifetimeLaw::Kind::fixed:
      j["lifetime"] = {{"kind", "fixed"}, {"length", p.lifetime.length}};
      break;
  }
  return j;
}

AgentPattern pattern_from_json(const json& j) {
  AgentPattern p;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "poisson") {
    p.process = PoissonPattern{j.at("arrival_rate").get<double>(),
                               j.at("departure_rate").get<double>()};
  } else if (kind == "schedule") {
    SchedulePattern s;
    for (const auto& row : j.at("entries")) {
      s.entries.push_back({row.at(0).get<std::int64_t>(), row.at(1).get<std::uint64_t>(),
                           row.at(2).get<std::uint64_t>()});
    }
    p.process = std::move(s);
  } else if (kind == "trace") {
    TracePattern t;
    for (const auto& row : j.at("events")) {
      const auto ev = row.at(1).get<std::string>();
      if (ev != "arrive" && ev != "depart") throw MalformedTrace("unknown trace event " + ev);
      t.events.push_back({row.at(0).get<std::int64_t>(),
                          ev == "arrive" ? TraceEventKind::arrive : TraceEventKind::depart,
                          row.at(2).get<AgentId>()});
    }
    p.process = std::move(t);
  } else {
    throw InvalidParameter("unknown pattern kind '" + kind + "'");
  }
  if (j.contains("lifetime")) {
    const auto& l = j.at("lifetime");
    const auto lk = l.at("kind").get<std::string>();
    if (lk == "none") {
      p.lifetime.kind = LifetimeLaw::Kind::none;
    } else if (lk == "geometric") {
      p.lifetime.kind = LifetimeLaw::Kind::geometric;
      p.lifetime.q = l.at("q").get<double>();
    } else if (lk == "fixed") {
      p.lifetime.kind = LifetimeLaw::Kind::fixed;
      p.lifetime.length = l.at("length").get<std::int64_t>();
    } else {
      throw InvalidParameter("unknown lifetime law '" + lk + "'");
    }
  }
  return p;
}

json template_to_json(const AgentTemplate& a) {
  json j = json::object();
  if (!a.means.empty()) j["means"] = a.means;
  if (a.lifetime) j["lifetime"] = *a.lifetime;
  if (a.cluster) j["cluster"] = *a.cluster;
  if (a.features) j["features"] = *a.features;
  if (a.pretrained) {
    j["pretrained"] = {{"estimates", a.pretrained->estimates}, {"radius", a.pretrained->radius}};
  }
  if (a.tag != 0) j["tag"] = a.tag;
  return j;
}

AgentTemplate template_from_json(const json& j) {
  AgentTemplate a;
  if (j.contains("means")) a.means = j.at("means").get<std::vector<double>>();
  if (j.contains("lifetime")) a.lifetime = j.at("lifetime").get<std::int64_t>();
  if (j.contains("cluster")) a.cluster = j.at("cluster").get<int>();
  if (j.contains("features")) a.features = j.at("features").get<std::vector<double>>();
  if (j.contains("pretrained")) {
    const auto& pj = j.at("pretrained");
    a.pretrained = PretrainedEntry{pj.at("estimates").get<std::vector<double>>(),
                                   pj.at("radius").get<double>()};
  }
  if (j.contains("tag")) a.tag = j.at("tag").get<std::int32_t>();
  return a;
}

const char* factory_kind_name(FactoryKind k) {
  switch (k) {
    case FactoryKind::explicit_list: return "explicit";
    case FactoryKind::homogeneous: return "homogeneous";
    case FactoryKind::uniform_means: return "uniform_means";
    case FactoryKind::clustered: return "clustered";
    case FactoryKind::features: return "features";
  }
  return "homogeneous";
}

FactoryKind factory_kind_from(const std::string& name) {
  if (name == "explicit") return FactoryKind::explicit_list;
  if (name == "homogeneous") return FactoryKind::homogeneous;
  if (name == "uniform_means") return FactoryKind::uniform_means;
  if (name == "clustered") return FactoryKind::clustered;
  if (name == "features") return FactoryKind::features;
  throw InvalidParameter("unknown factory kind '" + name + "'");
}

}  // namespace

std::string serialize_instance(const InstanceSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["K"] = spec.num_arms;
  j["T"] = spec.horizon;
  j["M0"] = spec.initial_size;
  j["seed"] = spec.seed;
  j["pattern"] = pattern_to_json(spec.pattern);
  j["model"] = model_to_json(spec.model);
  j["transfer"] = {{"mode", to_string(spec.transfer.mode)},
                   {"sigma", spec.transfer.sigma},
                   {"delta", spec.transfer.delta},
                   {"lambda", spec.transfer.info.lambda},
                   {"kappa", spec.transfer.info.kappa},
                   {"c_gamma", spec.transfer.info.c_gamma},
                   {"gamma", spec.transfer.info.gamma},
                   {"max_neighbors", spec.transfer.max_neighbors},
                   {"norm_bound", spec.transfer.norm_bound}};
  const auto& f = spec.factory;
  json fj = {{"kind", factory_kind_name(f.kind)}};
  switch (f.kind) {
    case FactoryKind::explicit_list: {
      json agents = json::array();
      for (const auto& a : f.agents) agents.push_back(template_to_json(a));
      fj["agents"] = agents;
      break;
    }
    case FactoryKind::homogeneous: fj["template_means"] = f.template_means; break;
    case FactoryKind::uniform_means:
      fj["low"] = f.low;
      fj["high"] = f.high;
      break;
    case FactoryKind::clustered:
      fj["cluster_weights"] = f.cluster_weights;
      fj["initial_composition"] = f.initial_composition;
      break;
    case FactoryKind::features: fj["feature_dim"] = f.feature_dim; break;
  }
  j["factory"] = fj;
  const auto& l = spec.latent;
  j["latent"] = {{"pivotal_p", l.pivotal_p},       {"pivotal_signs", l.pivotal_signs},
                 {"block_z", l.block_z},           {"block_good", l.block_good},
                 {"block_length", l.block_length}, {"stable_variant", l.stable_variant},
                 {"base_gap", l.base_gap}};
  return j.dump(1) + "\n";
}

InstanceSpec parse_instance(const std::string& text) {
  InstanceSpec spec;
  try {
    const json j = json::parse(text);
    spec.name = j.value("name", std::string("instance"));
    spec.num_arms = j.at("K").get<std::size_t>();
    spec.horizon = j.at("T").get<std::int64_t>();
    spec.initial_size = j.at("M0").get<std::size_t>();
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.pattern = pattern_from_json(j.at("pattern"));
    spec.model = model_from_json(j.at("model"));
    if (j.contains("transfer")) {
      const auto& t = j.at("transfer");
      spec.transfer.mode = transfer_mode_from_string(t.value("mode", std::string("zero_knowledge")));
      spec.transfer.sigma = t.value("sigma", 0.0);
      spec.transfer.delta = t.value("delta", 0.05);
      spec.transfer.info.lambda = t.value("lambda", 1.0);
      spec.transfer.info.kappa = t.value("kappa", 1.0);
      spec.transfer.info.c_gamma = t.value("c_gamma", 1.0);
      spec.transfer.info.gamma = t.value("gamma", 1.0);
      spec.transfer.max_neighbors = t.value("max_neighbors", std::size_t{0});
      spec.transfer.norm_bound = t.value("norm_bound", 0.0);
    }
    const auto& fj = j.at("factory");
    auto& f = spec.factory;
    f.kind = factory_kind_from(fj.at("kind").get<std::string>());
    if (fj.contains("agents")) {
      for (const auto& a : fj.at("agents")) f.agents.push_back(template_from_json(a));
    }
    if (fj.contains("template_means")) {
      f.template_means = fj.at("template_means").get<std::vector<double>>();
    }
    f.low = fj.value("low", 0.0);
    f.high = fj.value("high", 1.0);
    if (fj.contains("cluster_weights")) {
      f.cluster_weights = fj.at("cluster_weights").get<std::vector<double>>();
    }
    if (fj.contains("initial_composition")) {
      f.initial_composition = fj.at("initial_composition").get<std::vector<std::size_t>>();
    }
    f.feature_dim = fj.value("feature_dim", std::size_t{0});
    if (j.contains("latent")) {
      const auto& lj = j.at("latent");
      auto& l = spec.latent;
      l.pivotal_p = lj.value("pivotal_p", std::vector<double>{});
      l.pivotal_signs = lj.value("pivotal_signs", std::vector<int>{});
      l.block_z = lj.value("block_z", std::vector<int>{});
      l.block_good = lj.value("block_good", std::vector<int>{});
      l.block_length = lj.value("block_length", std::int64_t{0});
      l.stable_variant = lj.value("stable_variant", 0);
      l.base_gap = lj.value("base_gap", 0.0);
    }
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("malformed instance document: ") + e.what());
  }
  spec.validate();
  return spec;
}

InstanceSpec load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str());
}

void save_instance(const InstanceSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write instance file " + path);
  out << serialize_instance(spec);
  if (!out) throw IoError("failed writing instance file " + path);
}

// ---------------------------------------------------------------------------
// Generators

InstanceSpec gen_pivotal(const PivotalParams& params) {
  if (params.horizon < 1) throw InvalidParameter("T must be at least 1");
  if (params.arrival_lifetime < 1) throw InvalidParameter("arrival lifetime must be positive");
  std::uint64_t total = 0;
  for (const auto& e : params.arrivals.entries) {
    if (e.round >= 1 && e.round <= params.horizon) total += e.arrivals;
  }
  if (params.p_schedule.empty()) throw InvalidParameter("P schedule is empty");
  if (params.p_schedule.size() != 1 && params.p_schedule.size() != total) {
    throw InvalidParameter("P schedule needs one value or one per arrival");
  }
  for (double p : params.p_schedule) {
    if (!(p > 0.0 && p <= 0.5)) throw InvalidParameter("pivotal P must lie in (0, 1/2]");
  }
  InstanceSpec spec;
  spec.name = "pivotal";
  spec.num_arms = 2;
  spec.horizon = params.horizon;
  spec.initial_size = params.initial_size;
  spec.seed = params.seed;
  SchedulePattern sched;
  for (const auto& e : params.arrivals.entries) {
    if (e.round >= 1 && e.round <= params.horizon && e.arrivals > 0) {
      sched.entries.push_back({e.round, e.arrivals, 0});
    }
  }
  std::sort(sched.entries.begin(), sched.entries.end(),
            [](const ScheduleEntry& a, const ScheduleEntry& b) { return a.round < b.round; });
  spec.pattern.process = sched;
  spec.model.num_arms = 2;
  spec.model.kind = TabularModel{};
  spec.model.noise = BernoulliNoise{};
  spec.transfer.mode = TransferMode::pretrained;
  spec.factory.kind = FactoryKind::explicit_list;
  for (std::size_t k = 0; k < params.initial_size; ++k) {
    spec.factory.agents.push_back(AgentTemplate{{0.5, 0.5}, std::nullopt, std::nullopt,
                                                std::nullopt, std::nullopt, 0});
  }
  StreamSet streams(params.seed);
  std::vector<int> signs;
  if (params.signs) {
    if (params.signs->size() != total) throw InvalidParameter("need one sign per arrival");
    signs = *params.signs;
  } else {
    for (std::uint64_t a = 0; a < total; ++a) signs.push_back(uniform01(streams.latent) < 0.5 ? 1 : -1);
  }
  for (std::uint64_t a = 0; a < total; ++a) {
    const double p = params.p_schedule.size() == 1 ? params.p_schedule[0] : params.p_schedule[a];
    if (signs[a] != 1 && signs[a] != -1) throw InvalidParameter("signs must be +1 or -1");
    AgentTemplate t;
    t.means = signs[a] > 0 ? std::vector<double>{0.5 + p, 0.5} : std::vector<double>{0.5, 0.5 + p};
    t.lifetime = params.arrival_lifetime;
    t.pretrained = PretrainedEntry{{0.5, 0.5}, p};
    t.tag = 1;
    spec.factory.agents.push_back(std::move(t));
    spec.latent.pivotal_p.push_back(p);
  }
  spec.latent.pivotal_signs = signs;
  spec.validate();
  return spec;
}

InstanceSpec gen_zero_knowledge_blocks(const BlocksParams& params) {
  if (params.block_length < 2) throw InvalidParameter("block length must be at least 2");
  if (!(params.q > 0.0 && params.q < 1.0) ||
      !(params.ordinary_q > 0.0 && params.ordinary_q < 1.0)) {
    throw InvalidParameter("lifetime parameters must lie in (0,1)");
  }
  if (!(params.gap >= 0.0 && params.gap <= 0.5)) throw InvalidParameter("gap must lie in [0, 1/2]");
  if (!(params.informative_rate >= 0.0) || !(params.ordinary_rate >= 0.0)) {
    throw InvalidParameter("rates must be non-negative");
  }
  if (params.horizon < 1) throw InvalidParameter("T must be at least 1");
  InstanceSpec spec;
  spec.name = "zero_knowledge_blocks";
  spec.num_arms = 2;
  spec.horizon = params.horizon;
  spec.initial_size = params.initial_size;
  spec.seed = params.seed;
  spec.model.num_arms = 2;
  spec.model.kind = TabularModel{};
  spec.model.noise = BernoulliNoise{};
  spec.transfer.mode = TransferMode::zero_knowledge;
  spec.factory.kind = FactoryKind::explicit_list;
  spec.latent.block_length = params.block_length;

  StreamSet streams(params.seed);
  TracePattern trace;
  auto& agents = spec.factory.agents;
  for (std::size_t k = 0; k < params.initial_size; ++k) {
    agents.push_back(AgentTemplate{{0.5, 0.5}, std::nullopt, std::nullopt, std::nullopt,
                                   std::nullopt, 0});
    trace.events.push_back({0, TraceEventKind::arrive, k});
  }
  const std::int64_t h = params.block_length;
  const std::int64_t blocks = (params.horizon + h - 1) / h;
  for (std::int64_t s = 0; s < blocks; ++s) {
    spec.latent.block_z.push_back(uniform01(streams.latent) < 0.5 ? 1 : -1);
  }
  std::geometric_distribution<std::int64_t> informative_life(params.q);
  std::geometric_distribution<std::int64_t> ordinary_life(params.ordinary_q);
  std::vector<std::int64_t> first_round_count(blocks, 0);
  std::vector<std::int64_t> later_count(blocks, 0);
  std::vector<std::int64_t> first_lifetime(blocks, 0);
  for (std::int64_t t = 1; t <= params.horizon; ++t) {
    const std::int64_t s = (t - 1) / h;
    const bool first = (t - 1) % h == 0;
    const auto informative = poisson_sample(params.informative_rate, streams.arrivals);
    const auto ordinary = poisson_sample(params.ordinary_rate, streams.departures);
    for (std::uint64_t a = 0; a < informative; ++a) {
      const std::int64_t life = informative_life(streams.lifetimes) + 1;
      const double d = params.gap;
      AgentTemplate tmpl;
      tmpl.means = spec.latent.block_z[s] > 0 ? std::vector<double>{0.5 + d, 0.5}
                                              : std::vector<double>{0.5, 0.5 + d};
      tmpl.lifetime = life;
      tmpl.tag = 1;
      trace.events.push_back({t, TraceEventKind::arrive, agents.size()});
      agents.push_back(std::move(tmpl));
      if (first) {
        ++first_round_count[s];
        first_lifetime[s] = life;
      } else {
        ++later_count[s];
      }
    }
    for (std::uint64_t a = 0; a < ordinary; ++a) {
      AgentTemplate tmpl;
      tmpl.means = {0.5, 0.5};
      tmpl.lifetime = ordinary_life(streams.lifetimes) + 1;
      trace.events.push_back({t, TraceEventKind::arrive, agents.size()});
      agents.push_back(std::move(tmpl));
    }
  }
  for (std::int64_t s = 0; s < blocks; ++s) {
    const bool complete = (s + 1) * h <= params.horizon;
    spec.latent.block_good.push_back(complete && first_round_count[s] == 1 && later_count[s] == 0 &&
                                             first_lifetime[s] == h
                                         ? 1
                                         : 0);
  }
  spec.pattern.process = std::move(trace);
  spec.validate();
  return spec;
}

std::pair<InstanceSpec, InstanceSpec> gen_stable_pair(const StablePairParams& params) {
  if (!(params.gap > 0.0 && params.gap < 0.25)) throw InvalidParameter("gap must lie in (0, 1/4)");
  InstanceSpec base;
  base.num_arms = 2;
  base.horizon = params.horizon;
  base.initial_size = params.initial_size;
  base.seed = params.seed;
  base.pattern.process = PoissonPattern{params.arrival_rate, 0.0};
  base.model.num_arms = 2;
  base.model.kind = TabularModel{};
  base.model.noise = BernoulliNoise{};
  base.transfer.mode = TransferMode::zero_knowledge;
  base.factory.kind = FactoryKind::homogeneous;
  base.latent.base_gap = params.gap;
  InstanceSpec nu = base;
  nu.name = "stable_nu";
  nu.factory.template_means = {0.5 + params.gap, 0.5};
  InstanceSpec nu_prime = base;
  nu_prime.name = "stable_nu_prime";
  nu_prime.factory.template_means = {0.5 + params.gap, 0.5 + 2.0 * params.gap};
  nu_prime.latent.stable_variant = 1;
  nu.validate();
  nu_prime.validate();
  return {nu, nu_prime};
}

InstanceSpec gen_clustered(const ClusteredParams& params) {
  if (params.theta.empty()) throw InvalidParameter("need at least one cluster");
  if (params.rates.size() != params.theta.size()) {
    throw InvalidParameter("need one arrival rate per cluster");
  }
  double total = 0.0;
  for (double r : params.rates) {
    if (!(r > 0.0)) throw InvalidParameter("cluster arrival rates must be positive");
    total += r;
  }
  InstanceSpec spec;
  spec.name = "clustered";
  spec.num_arms = params.theta.front().size();
  spec.horizon = params.horizon;
  spec.initial_size = std::accumulate(params.initial_composition.begin(),
                                      params.initial_composition.end(), std::size_t{0});
  spec.seed = params.seed;
  spec.pattern.process = PoissonPattern{total, 0.0};
  spec.model.num_arms = spec.num_arms;
  spec.model.kind = ClusteredModel{params.theta};
  spec.model.noise = params.noise;
  spec.transfer.mode = params.transfer;
  spec.transfer.delta = params.delta;
  spec.factory.kind = FactoryKind::clustered;
  spec.factory.cluster_weights = params.rates;
  spec.factory.initial_composition = params.initial_composition;
  std::vector<double> limit(spec.num_arms, 0.0);
  for (std::size_t c = 0; c < params.theta.size(); ++c) {
    for (std::size_t i = 0; i < spec.num_arms; ++i) {
      limit[i] += params.rates[c] / total * params.theta[c].at(i);
    }
  }
  const std::size_t best = argmax_lowest(limit);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < limit.size(); ++i) {
    if (i != best) gap = std::min(gap, limit[best] - limit[i]);
  }
  spec.latent.base_gap = std::isfinite(gap) ? gap : 0.0;
  spec.validate();
  return spec;
}

InstanceSpec gen_stable_clustered(std::int64_t horizon, std::uint64_t seed) {
  ClusteredParams p;
  p.theta = {{0.05, 0.95}, {0.8, 0.2}};
  p.rates = {0.8, 0.2};
  p.initial_composition = {32, 8};
  p.horizon = horizon;
  p.noise = BernoulliNoise{};
  p.seed = seed;
  InstanceSpec spec = gen_clustered(p);
  spec.name = "stable_clustered";
  return spec;
}

namespace {

Matrix random_linear_theta(std::size_t num_arms, std::size_t dim, Rng& rng) {
  Matrix theta(num_arms, std::vector<double>(dim));
  for (auto& row : theta) {
    double sq = 0.0;
    for (double& v : row) {
      v = uniform01(rng) + 1e-3;
      sq += v * v;
    }
    const double target = 0.5 + 0.5 * uniform01(rng);
    for (double& v : row) v *= target / std::sqrt(sq);
  }
  return theta;
}

}  // namespace

InstanceSpec gen_linear(const LinearParams& params) {
  if (params.dim < 1 || params.num_arms < 1) throw InvalidParameter("need d, K >= 1");
  if (!(params.gamma > 0.0)) throw InvalidParameter("gamma must be positive");
  StreamSet streams(params.seed);
  InstanceSpec spec;
  spec.name = "linear";
  spec.num_arms = params.num_arms;
  spec.horizon = params.horizon;
  spec.initial_size = params.initial_size;
  spec.seed = params.seed;
  spec.pattern.process = PoissonPattern{params.arrival_rate, 0.0};
  spec.model.num_arms = params.num_arms;
  spec.model.kind = LinearModel{params.theta.empty()
                                    ? random_linear_theta(params.num_arms, params.dim,
                                                          streams.latent)
                                    : params.theta};
  spec.model.noise = GaussianNoise{params.sigma};
  spec.transfer.mode = TransferMode::linear;
  spec.transfer.info.gamma = params.gamma;
  spec.factory.kind = FactoryKind::features;
  spec.factory.feature_dim = params.dim;
  spec.validate();
  return spec;
}

InstanceSpec gen_nonlinear(const LinearParams& params) {
  if (params.dim < 1 || params.num_arms < 1) throw InvalidParameter("need p, K >= 1");
  if (!(params.gamma > 0.0)) throw InvalidParameter("gamma must be positive");
  StreamSet streams(params.seed);
  InstanceSpec spec;
  spec.name = "nonlinear";
  spec.num_arms = params.num_arms;
  spec.horizon = params.horizon;
  spec.initial_size = params.initial_size;
  spec.seed = params.seed;
  spec.pattern.process = PoissonPattern{params.arrival_rate, 0.0};
  NonlinearModel nl;
  if (params.theta.empty()) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    nl.theta.assign(params.num_arms, std::vector<double>(params.dim));
    for (auto& row : nl.theta) {
      for (double& v : row) v = gauss(streams.latent);
    }
  } else {
    nl.theta = params.theta;
  }
  nl.lipschitz.assign(params.num_arms, 0.25);
  spec.model.num_arms = params.num_arms;
  spec.model.kind = std::move(nl);
  spec.model.noise = GaussianNoise{params.sigma};
  spec.transfer.mode = TransferMode::nonlinear;
  spec.transfer.info.gamma = params.gamma;
  spec.factory.kind = FactoryKind::features;
  spec.factory.feature_dim = params.dim;
  spec.validate();
  return spec;
}

InstanceSpec gen_random_tabular(const RandomTabularParams& params) {
  InstanceSpec spec;
  spec.name = "random_tabular";
  spec.num_arms = params.num_arms;
  spec.horizon = params.horizon;
  spec.initial_size = params.initial_size;
  spec.seed = params.seed;
  spec.pattern.process = PoissonPattern{params.arrival_rate, params.departure_rate};
  spec.model.num_arms = params.num_arms;
  spec.model.kind = TabularModel{};
  spec.model.noise = params.noise;
  spec.transfer.mode = TransferMode::zero_knowledge;
  spec.factory.kind = FactoryKind::uniform_means;
  spec.validate();
  return spec;
}

std::vector<double> first_appearance_times(const InstanceSpec& spec, std::uint64_t seed,
                                           bool continuous) {
  const std::size_t clusters = spec.cluster_count();
  if (clusters == 0) throw InvalidParameter("instance has no cluster labels");
  std::vector<double> first(clusters, std::numeric_limits<double>::infinity());
  PopulationState state;
  StreamSet streams(seed);
  const AgentFactory factory = make_factory(spec);
  PopulationSnapshot snap =
      initial_population(spec.initial_size, spec.pattern, factory, state, streams);
  std::size_t seen = 0;
  for (AgentId id : snap.active) {
    const int c = state.registry.at(id).cluster.value_or(-1);
    if (c >= 0 && std::isinf(first[c])) {
      first[c] = 0.0;
      ++seen;
    }
  }
  for (std::int64_t t = 1; t <= spec.horizon && seen < clusters; ++t) {
    snap = step_population(snap, spec.pattern, factory, state, streams);
    std::vector<std::size_t> counts(clusters, 0);
    for (AgentId id : snap.arrivals) {
      const int c = state.registry.at(id).cluster.value_or(-1);
      if (c >= 0) ++counts[c];
    }
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] == 0 || !std::isinf(first[c])) continue;
      double offset = 1.0;
      if (continuous) {
        const double u = uniform01(streams.neighbors);
        offset = 1.0 - std::pow(1.0 - u, 1.0 / static_cast<double>(counts[c]));
      }
      first[c] = static_cast<double>(t - 1) + offset;
      ++seen;
    }
  }
  return first;
}

}  // namespace omab
