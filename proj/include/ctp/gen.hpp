// Seeded random systems for differential testing.
//
// Output depends only on (profile, seed): the generator draws from a
// private mt19937_64 and never consults global state.

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "ctp/model.hpp"

namespace ctp {

enum class Shape {
  Polytree,    // connected, no undirected cycle
  Polyforest,  // no undirected cycle
  Cycle,       // exactly one undirected cycle through every process
  StarIn,      // leaves -> centre
  StarOut,     // centre -> leaves
  Free         // arbitrary channels, self-loops allowed
};

std::string_view to_string(Shape s);
std::optional<Shape> parse_shape(std::string_view s);

struct Range {
  std::uint32_t lo = 1;
  std::uint32_t hi = 1;
};

struct GenProfile {
  DelayKind flavor = DelayKind::Tick;
  Range processes{2, 3};
  Range locations{2, 4};
  std::uint32_t messages = 2;
  Shape shape = Shape::Polytree;
  std::uint32_t testable_budget = 0;  // exactly min(budget, #channels) become testable
  double tick_loop_density = 1.0;     // probability of a tick self-loop per location
  std::int64_t guard_max = 3;         // largest guard constant (dense)
  std::uint32_t clocks = 1;           // per process (dense)
  std::uint32_t counters = 2;         // per process (counter flavour)
  bool strict_guards = true;          // allow < and > in guards
  std::uint32_t extra_transitions = 2;  // beyond the spanning ones, per process (upper bound)
};

/// Reads `key=value` pairs separated by commas or whitespace, e.g.
/// `flavor=dense,shape=star-in,processes=2..3,locations=2..4`.
/// Named presets: `tick`, `dense`, `counter`, `minsky`.
GenProfile parse_profile(std::string_view text);

/// Throws Error for an infeasible profile.
System generate(const GenProfile &profile, std::uint64_t seed);

/// Only the topology part of generate().
Topology generate_topology(const GenProfile &profile, std::uint64_t seed);

enum class Mutation {
  AddTest,      // mark one more channel testable
  RemoveTest,   // clear one testable flag
  AddCycleEdge  // add a channel closing an undirected cycle
};

/// nullopt when the mutation does not apply (e.g. nothing left to mark).
std::optional<Topology> mutate(const Topology &topo, Mutation m, std::uint64_t seed);

} // namespace ctp
