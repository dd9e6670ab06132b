// Operational semantics of discrete-time systems (tick and counter flavours)
// and the explicit-state reachability oracle built on it.
//
// Every non-tick action is asynchronous and moves one process. A tick is
// global: it is enabled only when every process has a tick transition at its
// current location, and it moves all of them at once.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ctp/model.hpp"

namespace ctp {

struct GlobalConfig {
  std::vector<LocationId> locations;                 // per process
  std::vector<std::vector<MessageId>> channels;      // per channel, front = oldest
  std::vector<std::vector<std::uint64_t>> counters;  // per process, per counter
  std::uint64_t ticks = 0;
  std::vector<std::uint64_t> local_ticks;            // per process; all equal to ticks

  /// Canonical byte encoding of the control/data state. Tick counts are
  /// excluded: they never influence future behaviour.
  std::string key() const;
  /// key() plus the tick counts.
  std::string full_key() const;

  friend bool operator==(const GlobalConfig &, const GlobalConfig &) = default;
};

/// One move of the global system. Asynchronous steps list one process;
/// tick steps list every process with the tick transition it took.
struct Step {
  std::vector<ProcessId> processes;
  std::vector<std::uint32_t> transitions;  // parallel to processes
  bool tick = false;

  friend bool operator==(const Step &, const Step &) = default;
};

struct Successor {
  Step step;
  GlobalConfig config;
};

struct TraceStep {
  Step step;
  GlobalConfig config;
};

struct Trace {
  GlobalConfig initial;
  std::vector<TraceStep> steps;
  bool deadlocked = false;  // simulate(): no move was enabled before the step budget

  const GlobalConfig &final_config() const {
    return steps.empty() ? initial : steps.back().config;
  }
};

/// Allowed locations per process; an empty list leaves the process free.
struct LocationPattern {
  std::vector<std::vector<LocationId>> allowed;

  bool matches(const std::vector<LocationId> &locs) const;
};

using TargetSet = std::vector<LocationPattern>;

/// Every process in one of its final locations.
LocationPattern final_pattern(const System &sys);

/// Parses `p=loc,q=loc` (processes may repeat to allow alternatives).
/// Throws Error naming unknown processes or locations.
LocationPattern parse_target(const System &sys, std::string_view text);

/// Precomputed successor relation for one discrete-time system.
class DiscreteSemantics {
public:
  explicit DiscreteSemantics(const System &sys);

  const System &system() const { return sys_; }

  std::vector<GlobalConfig> initial_configs() const;
  /// Throws Error on a configuration that does not fit the system.
  std::vector<Successor> successors(const GlobalConfig &cfg) const;
  bool accepting(const GlobalConfig &cfg, const TargetSet &targets) const;
  void check_config(const GlobalConfig &cfg) const;

  std::string format_step(const Step &step) const;

private:
  void async_moves(const GlobalConfig &cfg, std::vector<Successor> &out) const;
  void tick_moves(const GlobalConfig &cfg, std::vector<Successor> &out) const;

  const System &sys_;
  // out_[p][l] = indices of transitions leaving l
  std::vector<std::vector<std::vector<std::uint32_t>>> out_;
};

std::vector<Successor> successors(const System &sys, const GlobalConfig &cfg);

enum class ReachStatus { Reachable, Unreachable, BoundExhausted };

std::string_view to_string(ReachStatus s);

struct ReachOptions {
  std::optional<std::size_t> channel_bound;  // max words length, nullopt = unbounded
  std::optional<std::size_t> depth;          // max steps, nullopt = unbounded
  std::size_t state_budget = 2'000'000;
  std::size_t message_budget = 50'000'000;  // total channel contents over stored states
};

struct ExploreStats {
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::size_t max_depth = 0;
  bool bound_pruned = false;
  bool depth_pruned = false;
  bool budget_hit = false;

  bool pruned() const { return bound_pruned || depth_pruned || budget_hit; }
};

struct ReachResult {
  ReachStatus status = ReachStatus::Unreachable;
  std::optional<Trace> witness;
  ExploreStats stats;
};

/// Breadth-first reachability. Reachable carries a shortest witness;
/// Unreachable is only returned when nothing was pruned.
ReachResult reach_explicit(const System &sys, const TargetSet &targets,
                           const ReachOptions &opts = {});

struct ReplayResult {
  bool valid = true;
  std::optional<std::size_t> first_invalid;  // index into trace.steps, or nullopt for the initial config
  std::string reason;
};

ReplayResult replay(const System &sys, const Trace &trace);

struct RandomPolicy {};
struct ScriptPolicy {
  std::vector<std::size_t> choices;  // index into the successor list at each step
};
using SimulationPolicy = std::variant<RandomPolicy, ScriptPolicy>;

/// A run of at most `steps` moves. Deterministic for a given seed.
Trace simulate(const System &sys, std::size_t steps, std::uint64_t seed,
               const SimulationPolicy &policy = RandomPolicy{});

enum class Scheduler {
  Free,
  SlotNormalized  // within a tick round, processes move in sender-first order
};

/// Full keys of every configuration reachable in at most `depth` steps.
std::vector<std::string> reachable_within(const System &sys, std::size_t depth,
                                          Scheduler scheduler);

/// Line-oriented trace rendering:
/// `step <i>: [<procs>] <action> ; channels: c=<word> ; ticks=<k>`.
std::string format_trace(const System &sys, const Trace &trace);

/// Structured (JSON) trace rendering.
std::string trace_to_json(const System &sys, const Trace &trace);

} // namespace ctp
