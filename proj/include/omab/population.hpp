#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "omab/rng.hpp"

namespace omab {

using AgentId = std::uint64_t;

/// Where an agent's entry estimates come from.
enum class TransferMode { pretrained, linear, nonlinear, cluster, zero_knowledge };

std::string to_string(TransferMode mode);
TransferMode transfer_mode_from_string(const std::string& name);

/// Estimates an agent carries in from outside the system, with a declared radius.
struct PretrainedEntry {
  std::vector<double> estimates;
  double radius = 0.0;
};

struct AgentProfile {
  AgentId id = 0;
  std::int64_t arrival_time = 0;          // 0 for the initial population
  std::optional<std::int64_t> lifetime;   // absent: never expires
  std::vector<double> mean_vector;        // ground truth, evaluator only
  std::optional<std::vector<double>> features;
  std::optional<int> cluster;
  std::optional<PretrainedEntry> pretrained;
  std::vector<double> entry_estimates;    // filled by the transfer step on arrival
  double certificate = 1.0;
  TransferMode mode_used = TransferMode::zero_knowledge;
  std::int32_t tag = 0;                   // generator-defined role marker
  std::optional<std::int64_t> departure_time;
};

/// Throws InvalidParameter when means leave [0,1] or features leave the unit ball.
void validate_profile(const AgentProfile& agent, std::size_t num_arms);

struct PopulationSnapshot {
  std::int64_t round = 0;
  std::vector<AgentId> active;      // sorted ascending
  std::vector<AgentId> arrivals;
  std::vector<AgentId> continuing;
  std::vector<AgentId> departures;

  std::size_t size() const { return active.size(); }
};

struct PoissonPattern {
  double arrival_rate = 0.0;
  double departure_rate = 0.0;
};

struct ScheduleEntry {
  std::int64_t round = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t departures = 0;
};

/// Explicit per-round counts; rounds without an entry have zero events.
struct SchedulePattern {
  std::vector<ScheduleEntry> entries;  // sorted by round, unique rounds
};

enum class TraceEventKind { arrive, depart };

struct TraceEvent {
  std::int64_t round = 0;
  TraceEventKind kind = TraceEventKind::arrive;
  AgentId agent = 0;
};

/// Explicit arrival/departure events by agent id. Round-0 arrivals form M_0.
struct TracePattern {
  std::vector<TraceEvent> events;  // sorted by round (stable within a round)
};

struct LifetimeLaw {
  enum class Kind { none, geometric, fixed };
  Kind kind = Kind::none;
  double q = 0.5;
  std::int64_t length = 1;
};

struct AgentPattern {
  std::variant<PoissonPattern, SchedulePattern, TracePattern> process = PoissonPattern{};
  LifetimeLaw lifetime;

  void validate() const;
};

/// Dense storage of every agent ever created in a run. Ids are never reused.
class AgentRegistry {
 public:
  AgentProfile& add(AgentProfile profile);
  bool contains(AgentId id) const;
  const AgentProfile& at(AgentId id) const { return profiles_[slot(id)]; }
  AgentProfile& at(AgentId id) { return profiles_[slot(id)]; }
  std::size_t slot(AgentId id) const;
  std::size_t size() const { return profiles_.size(); }
  AgentId next_id() const { return next_id_; }
  const std::vector<AgentProfile>& profiles() const { return profiles_; }

 private:
  std::vector<AgentProfile> profiles_;
  std::unordered_map<AgentId, std::size_t> index_;
  AgentId next_id_ = 0;
};

struct PopulationState {
  AgentRegistry registry;
  std::multimap<std::int64_t, AgentId> expirations;  // round at which the agent leaves
};

struct ArrivalContext {
  AgentId id = 0;
  std::int64_t round = 0;
};

/// Produces the profile of a newly created agent. Draws only from `latent`.
using AgentFactory = std::function<AgentProfile(const ArrivalContext&, Rng& latent)>;

/// Poisson(rate) variate; rate 0 returns 0 without consuming the stream.
std::uint64_t poisson_sample(double rate, Rng& rng);

/// Round-0 snapshot. Trace patterns take their round-0 arrivals; otherwise
/// `initial_size` agents are created with ids starting at the registry's next id.
PopulationSnapshot initial_population(std::size_t initial_size, const AgentPattern& pattern,
                                      const AgentFactory& factory, PopulationState& state,
                                      StreamSet& streams);

/// Advances one round: departures first (lifetime expirations, trace events,
/// then sampled/scheduled departures drawn uniformly from the remaining active
/// agents), then arrivals. Departure counts above the active size are dropped.
PopulationSnapshot step_population(const PopulationSnapshot& prev, const AgentPattern& pattern,
                                   const AgentFactory& factory, PopulationState& state,
                                   StreamSet& streams);

/// Snapshots for rounds 1..horizon.
std::vector<PopulationSnapshot> population_trajectory(const AgentPattern& pattern,
                                                      const AgentFactory& factory,
                                                      std::size_t initial_size,
                                                      std::int64_t horizon, std::uint64_t seed);

/// Count-only trajectory M_1..M_horizon for Poisson and schedule patterns without
/// a lifetime law. Draws the same counts as the id-level process.
std::vector<std::size_t> population_sizes(const AgentPattern& pattern, std::size_t initial_size,
                                          std::int64_t horizon, StreamSet& streams);

/// Throws InvariantViolation if the pair breaks the partition or size laws.
void check_snapshot(const PopulationSnapshot& prev, const PopulationSnapshot& cur);

/// `t,arrivals,departures` lines.
SchedulePattern parse_schedule(std::istream& in);
/// `t,arrive|depart,agent_id` lines.
TracePattern parse_trace(std::istream& in);
SchedulePattern load_schedule(const std::string& path);
TracePattern load_trace(const std::string& path);
void write_schedule(std::ostream& out, const SchedulePattern& schedule);
void write_trace(std::ostream& out, const TracePattern& trace);

}  // namespace omab
