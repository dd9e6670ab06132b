// Dense-time systems: a zone-based explorer over one joint DBM for all
// clocks of all processes (delays are global), exact timed witnesses, and a
// region-based discretizer into tick automata.
//
// Discretization. Each timed process is unfolded over regions of its clocks
// plus two reference clocks that are never reset: `tau`, integral exactly at
// integer global times, and `tau'`, integral at a fixed but unknown fraction
// f of every time unit. One time unit is then four global phases, each
// entered by a tick:
//
//   A  (time = k)   B1 (k, k+f)   P  (time = k+f)   B2 (k+f, k+1)
//
// Time successors that stay inside a phase are internal `delay` moves.
// Because phases are global, messages can never travel backwards in time
// across a phase boundary. With zero-clock acceptance a process is final only
// in phase A or P with all of its clocks zero, which pins the common
// acceptance instant. Processes without clocks keep their locations and get a
// tick self-loop on each of them.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctp/dbm.hpp"
#include "ctp/semantics.hpp"

namespace ctp {

std::string format_rational(const Rational &r);  // always `num/den`

struct TimedStep {
  ProcessId process = 0;
  std::uint32_t transition = 0;
  Rational time;  // global timestamp, the sum of all earlier delays
};

struct TimedTrace {
  std::vector<LocationId> initial;
  std::vector<TimedStep> steps;
  Rational end_time;  // final delay ends here
};

struct ZoneOptions {
  std::size_t channel_bound = 3;
  std::size_t state_budget = 1'000'000;
};

struct ZoneStats {
  std::size_t states = 0;  // symbolic states stored
  std::size_t transitions = 0;
  std::size_t subsumed = 0;
  bool bound_pruned = false;
  bool budget_hit = false;

  bool pruned() const { return bound_pruned || budget_hit; }
};

struct ZoneResult {
  ReachStatus status = ReachStatus::Unreachable;
  std::optional<TimedTrace> witness;
  ZoneStats stats;
};

/// Throws Error unless the system has dense delay.
ZoneResult zone_reach(const System &sys, const TargetSet &targets, const ZoneOptions &opts = {});

struct TimedReplay {
  bool valid = true;
  std::optional<std::size_t> first_invalid;  // nullopt: the initial state or the end
  std::string reason;
  /// Clock valuations (all processes, joint order) just before each step
  /// and at end_time.
  std::vector<std::vector<Rational>> valuations;
  std::vector<LocationId> final_locations;
  std::vector<std::vector<MessageId>> final_channels;
};

/// Checks timestamps, guards, channel contents and, when targets are given,
/// acceptance at end_time.
TimedReplay replay_timed(const System &sys, const TimedTrace &trace, const TargetSet &targets = {});

/// Line per step: `step <i> @ <t>: [<p>] <action>`, then `end @ <t>`.
std::string format_timed_trace(const System &sys, const TimedTrace &trace);
std::string timed_trace_to_json(const System &sys, const TimedTrace &trace);

/// Clock region over the process clocks followed by tau and tau'.
struct Region {
  static constexpr std::uint8_t kAbove = 0xff;  // beyond the largest constant

  std::vector<std::uint8_t> ints;
  std::vector<std::uint8_t> fracs;  // 0 integral, 1.. increasing fractional classes

  friend bool operator==(const Region &, const Region &) = default;
  friend auto operator<=>(const Region &, const Region &) = default;
};

struct DiscretizedProcess {
  struct State {
    LocationId location = 0;
    Region region;
  };
  static constexpr std::uint32_t kDelay = 0xffffffff;

  Automaton automaton;              // tick flavour
  std::vector<State> states;        // one per discretized location
  std::vector<std::uint32_t> origin;  // per discretized transition: original index or kDelay
  std::int64_t max_constant = 0;
  bool timed = false;               // false: clock-free copy with tick self-loops

  std::string describe(const System &dense, ProcessId p, LocationId s) const;
};

/// Discretizes process p of a dense system. Acceptance flags of the system
/// decide which states are final.
DiscretizedProcess discretize(const System &sys, ProcessId p);

struct Discretized {
  System system;  // tick flavour, same topology
  std::vector<DiscretizedProcess> processes;
  bool zero_clocks = true;  // acceptance flag of the dense system
};

Discretized discretize_system(const System &sys);

/// Target over the dense system mapped to the discretized one, including the
/// clock conditions of the acceptance flags.
LocationPattern lift_target(const Discretized &d, const LocationPattern &pattern);

/// Follows a timed run step by step in the discretized system (the phase
/// fraction is the fraction of end_time, or 1/2 when that is integral).
/// Throws Error if the run does not fit the construction.
Trace lift_timed_trace(const System &dense, const Discretized &d, const TimedTrace &trace);

} // namespace ctp
