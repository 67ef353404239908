#include "omab/population.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "omab/error.hpp"

namespace omab {

std::string to_string(TransferMode mode) {
  switch (mode) {
    case TransferMode::pretrained: return "pretrained";
    case TransferMode::linear: return "linear";
    case TransferMode::nonlinear: return "nonlinear";
    case TransferMode::cluster: return "cluster";
    case TransferMode::zero_knowledge: return "zero_knowledge";
  }
  return "zero_knowledge";
}

TransferMode transfer_mode_from_string(const std::string& name) {
  if (name == "pretrained") return TransferMode::pretrained;
  if (name == "linear") return TransferMode::linear;
  if (name == "nonlinear") return TransferMode::nonlinear;
  if (name == "cluster") return TransferMode::cluster;
  if (name == "zero_knowledge") return TransferMode::zero_knowledge;
  throw InvalidParameter("unknown transfer mode '" + name + "'");
}

void validate_profile(const AgentProfile& agent, std::size_t num_arms) {
  if (agent.mean_vector.size() != num_arms) {
    throw InvalidParameter("agent " + std::to_string(agent.id) + " has " +
                           std::to_string(agent.mean_vector.size()) + " means, expected " +
                           std::to_string(num_arms));
  }
  for (double mu : agent.mean_vector) {
    if (!(mu >= 0.0 && mu <= 1.0)) {
      throw InvalidParameter("agent " + std::to_string(agent.id) + " has a mean outside [0,1]");
    }
  }
  if (agent.features) {
    double sq = 0.0;
    for (double x : *agent.features) sq += x * x;
    if (std::sqrt(sq) > 1.0 + 1e-12) {
      throw InvalidParameter("agent " + std::to_string(agent.id) + " has feature norm above 1");
    }
  }
  if (agent.lifetime && *agent.lifetime <= 0) {
    throw InvalidParameter("agent " + std::to_string(agent.id) + " has a non-positive lifetime");
  }
  if (!(agent.certificate >= 0.0)) {
    throw InvalidParameter("agent " + std::to_string(agent.id) + " has a negative certificate");
  }
}

void AgentPattern::validate() const {
  if (const auto* p = std::get_if<PoissonPattern>(&process)) {
    if (!std::isfinite(p->arrival_rate) || p->arrival_rate < 0.0 ||
        !std::isfinite(p->departure_rate) || p->departure_rate < 0.0) {
      throw InvalidParameter("Poisson rates must be finite and non-negative");
    }
  } else if (const auto* s = std::get_if<SchedulePattern>(&process)) {
    for (std::size_t k = 0; k < s->entries.size(); ++k) {
      if (s->entries[k].round < 1) throw InvalidParameter("schedule rounds start at 1");
      if (k > 0 && s->entries[k].round <= s->entries[k - 1].round) {
        throw InvalidParameter("schedule rounds must be strictly increasing");
      }
    }
  } else {
    const auto& trace = std::get<TracePattern>(process);
    for (std::size_t k = 0; k < trace.events.size(); ++k) {
      if (trace.events[k].round < 0) throw MalformedTrace("trace rounds must be non-negative");
      if (k > 0 && trace.events[k].round < trace.events[k - 1].round) {
        throw MalformedTrace("trace events must be sorted by round");
      }
    }
  }
  switch (lifetime.kind) {
    case LifetimeLaw::Kind::none: break;
    case LifetimeLaw::Kind::geometric:
      if (!(lifetime.q > 0.0 && lifetime.q < 1.0)) {
        throw InvalidParameter("geometric lifetime needs q in (0,1)");
      }
      break;
    case LifetimeLaw::Kind::fixed:
      if (lifetime.length < 1) throw InvalidParameter("fixed lifetime must be at least 1");
      break;
  }
}

AgentProfile& AgentRegistry::add(AgentProfile profile) {
  if (contains(profile.id)) {
    throw InvalidParameter("agent id " + std::to_string(profile.id) + " already used");
  }
  const std::size_t slot = profiles_.size();
  if (profile.id != slot) index_.emplace(profile.id, slot);
  next_id_ = std::max(next_id_, profile.id + 1);
  profiles_.push_back(std::move(profile));
  return profiles_.back();
}

bool AgentRegistry::contains(AgentId id) const {
  if (id < profiles_.size() && profiles_[id].id == id) return true;
  return index_.count(id) != 0;
}

std::size_t AgentRegistry::slot(AgentId id) const {
  if (id < profiles_.size() && profiles_[id].id == id) return static_cast<std::size_t>(id);
  auto it = index_.find(id);
  if (it == index_.end()) throw InvalidParameter("unknown agent id " + std::to_string(id));
  return it->second;
}

std::uint64_t poisson_sample(double rate, Rng& rng) {
  if (!std::isfinite(rate) || rate < 0.0) {
    throw InvalidParameter("Poisson rate must be finite and non-negative");
  }
  if (rate == 0.0) return 0;
  return std::poisson_distribution<std::uint64_t>(rate)(rng);
}

namespace {

template <typename Entries, typename Key>
auto events_at(const Entries& entries, std::int64_t round, Key key) {
  auto lo = std::lower_bound(entries.begin(), entries.end(), round,
                             [&](const auto& e, std::int64_t r) { return key(e) < r; });
  auto hi = std::upper_bound(lo, entries.end(), round,
                             [&](std::int64_t r, const auto& e) { return r < key(e); });
  return std::make_pair(lo, hi);
}

void create_agent(AgentId id, std::int64_t round, const AgentPattern& pattern,
                  const AgentFactory& factory, PopulationState& state, StreamSet& streams,
                  bool apply_law) {
  AgentProfile profile = factory(ArrivalContext{id, round}, streams.latent);
  profile.id = id;
  profile.arrival_time = round;
  if (!profile.lifetime && apply_law) {
    switch (pattern.lifetime.kind) {
      case LifetimeLaw::Kind::none: break;
      case LifetimeLaw::Kind::geometric:
        profile.lifetime = static_cast<std::int64_t>(
                               std::geometric_distribution<std::int64_t>(pattern.lifetime.q)(
                                   streams.lifetimes)) +
                           1;
        break;
      case LifetimeLaw::Kind::fixed: profile.lifetime = pattern.lifetime.length; break;
    }
  }
  if (profile.lifetime) {
    if (*profile.lifetime <= 0) throw InvalidParameter("lifetimes must be positive");
    state.expirations.emplace(round + *profile.lifetime, id);
  }
  state.registry.add(std::move(profile));
}

bool sorted_contains(const std::vector<AgentId>& sorted, AgentId id) {
  return std::binary_search(sorted.begin(), sorted.end(), id);
}

}  // namespace

PopulationSnapshot initial_population(std::size_t initial_size, const AgentPattern& pattern,
                                      const AgentFactory& factory, PopulationState& state,
                                      StreamSet& streams) {
  pattern.validate();
  PopulationSnapshot snap;
  snap.round = 0;
  if (const auto* trace = std::get_if<TracePattern>(&pattern.process)) {
    auto [lo, hi] = events_at(trace->events, 0, [](const TraceEvent& e) { return e.round; });
    for (auto it = lo; it != hi; ++it) {
      if (it->kind != TraceEventKind::arrive) {
        throw MalformedTrace("round-0 trace events must be arrivals");
      }
      if (state.registry.contains(it->agent)) {
        throw MalformedTrace("agent " + std::to_string(it->agent) + " arrives twice");
      }
      create_agent(it->agent, 0, pattern, factory, state, streams, false);
      snap.active.push_back(it->agent);
    }
  } else {
    for (std::size_t k = 0; k < initial_size; ++k) {
      const AgentId id = state.registry.next_id();
      create_agent(id, 0, pattern, factory, state, streams, false);
      snap.active.push_back(id);
    }
  }
  std::sort(snap.active.begin(), snap.active.end());
  snap.continuing = snap.active;
  return snap;
}

PopulationSnapshot step_population(const PopulationSnapshot& prev, const AgentPattern& pattern,
                                   const AgentFactory& factory, PopulationState& state,
                                   StreamSet& streams) {
  const std::int64_t t = prev.round + 1;
  std::vector<AgentId> leaving;

  // Lifetime expirations.
  auto [exp_lo, exp_hi] = state.expirations.equal_range(t);
  for (auto it = exp_lo; it != exp_hi; ++it) {
    if (sorted_contains(prev.active, it->second)) leaving.push_back(it->second);
  }
  state.expirations.erase(exp_lo, exp_hi);
  std::sort(leaving.begin(), leaving.end());

  std::uint64_t arrival_count = 0;
  std::uint64_t departure_count = 0;
  std::vector<AgentId> trace_arrivals;

  if (const auto* p = std::get_if<PoissonPattern>(&pattern.process)) {
    departure_count = poisson_sample(p->departure_rate, streams.departures);
    arrival_count = poisson_sample(p->arrival_rate, streams.arrivals);
  } else if (const auto* s = std::get_if<SchedulePattern>(&pattern.process)) {
    auto [lo, hi] = events_at(s->entries, t, [](const ScheduleEntry& e) { return e.round; });
    if (lo != hi) {
      departure_count = lo->departures;
      arrival_count = lo->arrivals;
    }
  } else {
    const auto& trace = std::get<TracePattern>(pattern.process);
    auto [lo, hi] = events_at(trace.events, t, [](const TraceEvent& e) { return e.round; });
    std::vector<AgentId> trace_departures;
    for (auto it = lo; it != hi; ++it) {
      if (it->kind == TraceEventKind::depart) {
        if (!state.registry.contains(it->agent)) {
          throw MalformedTrace("round " + std::to_string(t) + ": departure of unknown agent " +
                               std::to_string(it->agent));
        }
        if (!sorted_contains(prev.active, it->agent)) {
          throw MalformedTrace("round " + std::to_string(t) + ": agent " +
                               std::to_string(it->agent) + " departs while inactive");
        }
        trace_departures.push_back(it->agent);
      } else {
        if (state.registry.contains(it->agent) ||
            std::find(trace_arrivals.begin(), trace_arrivals.end(), it->agent) !=
                trace_arrivals.end()) {
          throw MalformedTrace("round " + std::to_string(t) + ": agent " +
                               std::to_string(it->agent) + " arrives twice");
        }
        trace_arrivals.push_back(it->agent);
      }
    }
    std::sort(trace_departures.begin(), trace_departures.end());
    std::vector<AgentId> merged;
    std::set_union(leaving.begin(), leaving.end(), trace_departures.begin(),
                   trace_departures.end(), std::back_inserter(merged));
    leaving = std::move(merged);
  }

  if (departure_count > 0) {
    std::vector<AgentId> candidates;
    candidates.reserve(prev.active.size());
    std::set_difference(prev.active.begin(), prev.active.end(), leaving.begin(), leaving.end(),
                        std::back_inserter(candidates));
    const std::size_t k =
        static_cast<std::size_t>(std::min<std::uint64_t>(departure_count, candidates.size()));
    for (std::size_t j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, candidates.size() - 1);
      std::swap(candidates[j], candidates[pick(streams.departure_pick)]);
    }
    candidates.resize(k);
    std::sort(candidates.begin(), candidates.end());
    std::vector<AgentId> merged;
    std::set_union(leaving.begin(), leaving.end(), candidates.begin(), candidates.end(),
                   std::back_inserter(merged));
    leaving = std::move(merged);
  }

  PopulationSnapshot snap;
  snap.round = t;
  snap.departures = leaving;
  snap.continuing.reserve(prev.active.size());
  std::set_difference(prev.active.begin(), prev.active.end(), leaving.begin(), leaving.end(),
                      std::back_inserter(snap.continuing));
  for (AgentId id : leaving) state.registry.at(id).departure_time = t;

  if (std::holds_alternative<TracePattern>(pattern.process)) {
    for (AgentId id : trace_arrivals) create_agent(id, t, pattern, factory, state, streams, true);
    snap.arrivals = std::move(trace_arrivals);
    std::sort(snap.arrivals.begin(), snap.arrivals.end());
  } else {
    snap.arrivals.reserve(arrival_count);
    for (std::uint64_t k = 0; k < arrival_count; ++k) {
      const AgentId id = state.registry.next_id();
      create_agent(id, t, pattern, factory, state, streams, true);
      snap.arrivals.push_back(id);
    }
  }

  snap.active.reserve(snap.continuing.size() + snap.arrivals.size());
  std::merge(snap.continuing.begin(), snap.continuing.end(), snap.arrivals.begin(),
             snap.arrivals.end(), std::back_inserter(snap.active));
  return snap;
}

std::vector<PopulationSnapshot> population_trajectory(const AgentPattern& pattern,
                                                      const AgentFactory& factory,
                                                      std::size_t initial_size,
                                                      std::int64_t horizon, std::uint64_t seed) {
  if (horizon < 1) throw InvalidParameter("horizon must be at least 1");
  PopulationState state;
  StreamSet streams(seed);
  std::vector<PopulationSnapshot> out;
  out.reserve(static_cast<std::size_t>(horizon));
  PopulationSnapshot prev = initial_population(initial_size, pattern, factory, state, streams);
  for (std::int64_t t = 1; t <= horizon; ++t) {
    out.push_back(step_population(prev, pattern, factory, state, streams));
    prev = out.back();
  }
  return out;
}

std::vector<std::size_t> population_sizes(const AgentPattern& pattern, std::size_t initial_size,
                                          std::int64_t horizon, StreamSet& streams) {
  pattern.validate();
  if (pattern.lifetime.kind != LifetimeLaw::Kind::none ||
      std::holds_alternative<TracePattern>(pattern.process)) {
    throw InvalidParameter("count-level trajectories need a count-driven pattern");
  }
  std::vector<std::size_t> sizes;
  sizes.reserve(static_cast<std::size_t>(std::max<std::int64_t>(horizon, 0)));
  std::uint64_t m = initial_size;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    std::uint64_t a = 0;
    std::uint64_t d = 0;
    if (const auto* p = std::get_if<PoissonPattern>(&pattern.process)) {
      d = poisson_sample(p->departure_rate, streams.departures);
      a = poisson_sample(p->arrival_rate, streams.arrivals);
    } else {
      const auto& s = std::get<SchedulePattern>(pattern.process);
      auto [lo, hi] = events_at(s.entries, t, [](const ScheduleEntry& e) { return e.round; });
      if (lo != hi) {
        a = lo->arrivals;
        d = lo->departures;
      }
    }
    m = m - std::min(d, m) + a;
    sizes.push_back(static_cast<std::size_t>(m));
  }
  return sizes;
}

void check_snapshot(const PopulationSnapshot& prev, const PopulationSnapshot& cur) {
  auto fail = [&](const std::string& what) {
    throw InvariantViolation("population round " + std::to_string(cur.round) + ": " + what);
  };
  if (cur.round != prev.round + 1) fail("round index does not advance by one");
  auto is_sorted_unique = [](const std::vector<AgentId>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<AgentId>()) == v.end();
  };
  if (!is_sorted_unique(cur.active) || !is_sorted_unique(cur.arrivals) ||
      !is_sorted_unique(cur.continuing) || !is_sorted_unique(cur.departures)) {
    fail("sets must be sorted without duplicates");
  }
  std::vector<AgentId> joined;
  std::merge(cur.arrivals.begin(), cur.arrivals.end(), cur.continuing.begin(),
             cur.continuing.end(), std::back_inserter(joined));
  if (joined != cur.active) fail("arrivals and continuing do not partition the active set");
  std::vector<AgentId> overlap;
  std::set_intersection(cur.departures.begin(), cur.departures.end(), cur.active.begin(),
                        cur.active.end(), std::back_inserter(overlap));
  if (!overlap.empty()) fail("a departed agent is still active");
  if (!std::includes(prev.active.begin(), prev.active.end(), cur.continuing.begin(),
                     cur.continuing.end())) {
    fail("continuing agents were not active in the previous round");
  }
  if (!std::includes(prev.active.begin(), prev.active.end(), cur.departures.begin(),
                     cur.departures.end())) {
    fail("departing agents were not active in the previous round");
  }
  overlap.clear();
  std::set_intersection(cur.arrivals.begin(), cur.arrivals.end(), prev.active.begin(),
                        prev.active.end(), std::back_inserter(overlap));
  if (!overlap.empty()) fail("an arrival was already active");
  const auto expected = static_cast<std::int64_t>(prev.size()) +
                        static_cast<std::int64_t>(cur.arrivals.size()) -
                        static_cast<std::int64_t>(cur.departures.size());
  if (static_cast<std::int64_t>(cur.size()) != std::max<std::int64_t>(0, expected)) {
    fail("size does not follow the positive-part law");
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

bool skip_line(const std::string& line) {
  auto b = line.find_first_not_of(" \t\r");
  return b == std::string::npos || line[b] == '#';
}

template <typename T>
T parse_integer(const std::string& text, std::size_t line_no, const char* what) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<T>(v);
  } catch (const std::exception&) {
    throw MalformedTrace("line " + std::to_string(line_no) + ": bad " + what + " '" + text + "'");
  }
}

}  // namespace

SchedulePattern parse_schedule(std::istream& in) {
  SchedulePattern out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    auto fields = split_csv(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "t") continue;
    if (fields.size() != 3) {
      throw MalformedTrace("line " + std::to_string(line_no) + ": expected t,arrivals,departures");
    }
    ScheduleEntry e;
    e.round = parse_integer<std::int64_t>(fields[0], line_no, "round");
    const auto a = parse_integer<std::int64_t>(fields[1], line_no, "arrival count");
    const auto d = parse_integer<std::int64_t>(fields[2], line_no, "departure count");
    if (e.round < 1 || a < 0 || d < 0) {
      throw MalformedTrace("line " + std::to_string(line_no) + ": negative count or round < 1");
    }
    e.arrivals = static_cast<std::uint64_t>(a);
    e.departures = static_cast<std::uint64_t>(d);
    out.entries.push_back(e);
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const ScheduleEntry& x, const ScheduleEntry& y) { return x.round < y.round; });
  for (std::size_t k = 1; k < out.entries.size(); ++k) {
    if (out.entries[k].round == out.entries[k - 1].round) {
      throw MalformedTrace("schedule lists round " + std::to_string(out.entries[k].round) +
                           " twice");
    }
  }
  return out;
}

TracePattern parse_trace(std::istream& in) {
  TracePattern out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    auto fields = split_csv(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "t") continue;
    if (fields.size() != 3) {
      throw MalformedTrace("line " + std::to_string(line_no) + ": expected t,event,agent_id");
    }
    TraceEvent e;
    e.round = parse_integer<std::int64_t>(fields[0], line_no, "round");
    if (e.round < 0) throw MalformedTrace("line " + std::to_string(line_no) + ": negative round");
    if (fields[1] == "arrive") {
      e.kind = TraceEventKind::arrive;
    } else if (fields[1] == "depart") {
      e.kind = TraceEventKind::depart;
    } else {
      throw MalformedTrace("line " + std::to_string(line_no) + ": unknown event '" + fields[1] +
                           "'");
    }
    const auto id = parse_integer<std::int64_t>(fields[2], line_no, "agent id");
    if (id < 0) throw MalformedTrace("line " + std::to_string(line_no) + ": negative agent id");
    e.agent = static_cast<AgentId>(id);
    out.events.push_back(e);
  }
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const TraceEvent& x, const TraceEvent& y) { return x.round < y.round; });
  return out;
}

SchedulePattern load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schedule file " + path);
  return parse_schedule(in);
}

TracePattern load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file " + path);
  return parse_trace(in);
}

void write_schedule(std::ostream& out, const SchedulePattern& schedule) {
  for (const auto& e : schedule.entries) {
    out << e.round << ',' << e.arrivals << ',' << e.departures << '\n';
  }
}

void write_trace(std::ostream& out, const TracePattern& trace) {
  for (const auto& e : trace.events) {
    out << e.round << ',' << (e.kind == TraceEventKind::arrive ? "arrive" : "depart") << ','
        << e.agent << '\n';
  }
}

}  // namespace omab
