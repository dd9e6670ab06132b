// Classification of communication topologies against the decidability
// frontier for reachability.
//
//   discrete (tick) time:  decidable iff the topology is a polyforest and
//                          every weakly-connected component has at most one
//                          testable channel.
//   dense time:            not a polyforest              -> undecidable
//                          polyforest, test-free          -> decidable
//                          some component with >= 2 tests -> undecidable
//                          otherwise (<= 1 test each)      -> open
//   no time (counters):    classified like discrete time.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctp/model.hpp"

namespace ctp {

enum class VerdictStatus { Decidable, Undecidable, Open };

std::string_view to_string(VerdictStatus s);

struct ForestCheck {
  bool polyforest = true;
  /// On failure: channel ids along one undirected cycle (length 1 for a
  /// self-loop, 2 for parallel channels).
  std::vector<ChannelId> cycle;
};

ForestCheck is_polyforest(const Topology &topo);

struct WeakComponent {
  std::vector<ProcessId> processes;        // sorted
  std::vector<ChannelId> channels;         // channels inside the component
  std::vector<ChannelId> testable;         // testable subset
};

/// Weakly-connected components, ordered by smallest process id. Isolated
/// processes form singleton components.
std::vector<WeakComponent> weak_components(const Topology &topo);

enum class Rule {
  UndirectedCycle,        // not a polyforest
  MultipleTests,          // >= 2 testable channels in one component
  PolyforestTestFree,     // decidable, no emptiness tests
  PolyforestSingleTest,   // discrete: <= 1 test per component
  DenseTestsOpen,         // dense with <= 1 test per component
  CounterZeroTests,       // informational: counter automata use zero tests
};

std::string_view to_string(Rule r);

struct Reason {
  Rule rule;
  std::vector<ChannelId> witness;  // cycle or testable channel set
  std::optional<std::size_t> component;
  std::string text;
};

struct ComponentVerdict {
  WeakComponent component;
  VerdictStatus status = VerdictStatus::Decidable;
};

struct Verdict {
  VerdictStatus status = VerdictStatus::Decidable;
  std::vector<Reason> reasons;
  std::vector<ComponentVerdict> components;
};

Verdict classify(const Topology &topo, DelayKind flavor);

/// Classifies a whole system; adds informational notes (zero tests in
/// counter automata) on top of the topology verdict.
Verdict classify(const System &sys);

/// Checks an Undecidable verdict's witnesses against the topology: cycles are
/// real closed walks, test sets lie within one component.
bool witnesses_valid(const Topology &topo, const Verdict &v);

/// Processes ordered so that every channel goes from an earlier to a later
/// process. Requires a directed-acyclic topology (every polyforest is).
std::vector<ProcessId> sender_first_order(const Topology &topo);

std::string format_verdict(const Topology &topo, const Verdict &v);

} // namespace ctp
