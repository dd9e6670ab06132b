// Core data model: topologies, process automata and whole systems of
// communicating processes synchronised by global time.
//
// The three process flavours (tick, counter, timed) share one Automaton
// record; which optional parts are meaningful is fixed by the system's
// delay domain and checked by validate_system().

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctp {

using ProcessId = std::uint32_t;
using ChannelId = std::uint32_t;
using MessageId = std::uint32_t;
using LocationId = std::uint32_t;
using ClockId = std::uint32_t;
using CounterId = std::uint32_t;

/// Raised when an operation's precondition does not hold.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

enum class DelayKind : std::uint8_t {
  None,  // counter automata: no time at all
  Tick,  // discrete time, explicit global tick action
  Dense  // timed automata over non-negative reals
};

std::string_view to_string(DelayKind kind);

struct Channel {
  std::string name;
  ProcessId source = 0;
  ProcessId target = 0;
  bool testable = false;
  std::optional<SourceSpan> span;

  friend bool operator==(const Channel &a, const Channel &b) {
    return a.name == b.name && a.source == b.source && a.target == b.target &&
           a.testable == b.testable;
  }
};

struct Topology {
  std::vector<std::string> processes;
  std::vector<Channel> channels;
  std::vector<std::string> messages;

  std::optional<ProcessId> find_process(std::string_view name) const;
  std::optional<ChannelId> find_channel(std::string_view name) const;
  std::optional<MessageId> find_message(std::string_view name) const;

  std::vector<ChannelId> outgoing(ProcessId p) const;
  std::vector<ChannelId> incoming(ProcessId p) const;

  friend bool operator==(const Topology &, const Topology &) = default;
};

enum class ActionKind : std::uint8_t {
  Send,
  Recv,
  TestEmpty,
  Internal,
  Tick,
  Inc,
  Dec,
  ZeroTest
};

struct Action {
  ActionKind kind = ActionKind::Internal;
  ChannelId channel = 0;  // Send, Recv, TestEmpty
  MessageId message = 0;  // Send, Recv
  CounterId counter = 0;  // Inc, Dec, ZeroTest
  std::string label;      // Internal

  static Action send(ChannelId c, MessageId m) { return {ActionKind::Send, c, m, 0, {}}; }
  static Action recv(ChannelId c, MessageId m) { return {ActionKind::Recv, c, m, 0, {}}; }
  static Action test_empty(ChannelId c) { return {ActionKind::TestEmpty, c, 0, 0, {}}; }
  static Action internal(std::string label = {}) {
    return {ActionKind::Internal, 0, 0, 0, std::move(label)};
  }
  static Action tick() { return {ActionKind::Tick, 0, 0, 0, {}}; }
  static Action inc(CounterId x) { return {ActionKind::Inc, 0, 0, x, {}}; }
  static Action dec(CounterId x) { return {ActionKind::Dec, 0, 0, x, {}}; }
  static Action zero_test(CounterId x) { return {ActionKind::ZeroTest, 0, 0, x, {}}; }

  bool uses_channel() const {
    return kind == ActionKind::Send || kind == ActionKind::Recv || kind == ActionKind::TestEmpty;
  }
  bool uses_counter() const {
    return kind == ActionKind::Inc || kind == ActionKind::Dec || kind == ActionKind::ZeroTest;
  }

  friend bool operator==(const Action &a, const Action &b) {
    if (a.kind != b.kind)
      return false;
    switch (a.kind) {
    case ActionKind::Send:
    case ActionKind::Recv:
      return a.channel == b.channel && a.message == b.message;
    case ActionKind::TestEmpty:
      return a.channel == b.channel;
    case ActionKind::Internal:
      return a.label == b.label;
    case ActionKind::Tick:
      return true;
    default:
      return a.counter == b.counter;
    }
  }
};

enum class Cmp : std::uint8_t { Lt, Le, Eq, Ge, Gt };

std::string_view to_string(Cmp op);

/// Atomic guard `clock op constant`.
struct ClockConstraint {
  ClockId clock = 0;
  Cmp op = Cmp::Le;
  std::int64_t constant = 0;

  friend bool operator==(const ClockConstraint &, const ClockConstraint &) = default;
  friend auto operator<=>(const ClockConstraint &, const ClockConstraint &) = default;
};

struct Transition {
  LocationId from = 0;
  LocationId to = 0;
  Action action;
  std::vector<ClockConstraint> guard;  // conjunction; timed flavour only
  std::vector<ClockId> resets;         // timed flavour only
  std::optional<SourceSpan> span;

  friend bool operator==(const Transition &a, const Transition &b) {
    return a.from == b.from && a.to == b.to && a.action == b.action && a.guard == b.guard &&
           a.resets == b.resets;
  }
};

struct Automaton {
  std::vector<std::string> locations;
  std::vector<LocationId> initial;
  std::vector<LocationId> final_locations;
  std::vector<std::string> clocks;    // timed flavour
  std::vector<std::string> counters;  // counter flavour
  std::vector<Transition> transitions;
  std::optional<SourceSpan> span;

  std::optional<LocationId> find_location(std::string_view name) const;
  bool is_initial(LocationId l) const;
  bool is_final(LocationId l) const;
  /// Largest guard constant (0 when there are no guards).
  std::int64_t max_constant() const;

  friend bool operator==(const Automaton &a, const Automaton &b) {
    return a.locations == b.locations && a.initial == b.initial &&
           a.final_locations == b.final_locations && a.clocks == b.clocks &&
           a.counters == b.counters && a.transitions == b.transitions;
  }
};

/// Which resources must be exhausted for a run to be accepting.
struct Acceptance {
  bool empty_channels = true;
  bool zero_counters = true;
  bool zero_clocks = true;

  friend bool operator==(const Acceptance &, const Acceptance &) = default;
};

struct System {
  std::string name;
  DelayKind delay = DelayKind::Tick;
  Topology topology;
  std::vector<Automaton> automata;  // indexed by ProcessId
  Acceptance acceptance;

  std::size_t process_count() const { return topology.processes.size(); }
  const Automaton &automaton(ProcessId p) const { return automata.at(p); }

  friend bool operator==(const System &, const System &) = default;
};

struct Diagnostic {
  std::string message;
  std::optional<SourceSpan> span;
};

/// Structural well-formedness. Empty result iff the system is valid.
std::vector<Diagnostic> validate_system(const System &sys);

struct UndirectedEdge {
  ChannelId channel = 0;
  ProcessId a = 0;
  ProcessId b = 0;
};

/// Undirected support of a topology: one edge per channel, self-loops kept.
struct UndirectedGraph {
  std::size_t vertex_count = 0;
  std::vector<UndirectedEdge> edges;
};

UndirectedGraph underlying_graph(const Topology &topo);

/// Reorders every identifier table by name and remaps all references, then
/// sorts transitions. Two systems that differ only in declaration order
/// compare equal after canonicalization.
void canonicalize(System &sys);

/// Human-readable action, e.g. `send(c,m)` or `inc x`.
std::string format_action(const System &sys, ProcessId p, const Action &a);

/// Human-readable transition including guard and resets.
std::string format_transition(const System &sys, ProcessId p, const Transition &t);

bool is_identifier(std::string_view s);

} // namespace ctp
