// Vector addition systems with states: Karp–Miller coverability trees,
// boundedness certificates and reachability of zero-counter acceptance.
//
// Control states may be produced lazily (VassControl); every analysis first
// materialises the part of the control graph reachable from the initial
// states, ignoring counters.

#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctp/model.hpp"

namespace ctp {

using ControlState = std::vector<std::uint32_t>;

/// One original transition folded into a VASS transition.
struct FusedAction {
  ProcessId process = 0;
  std::uint32_t transition = 0;

  friend bool operator==(const FusedAction &, const FusedAction &) = default;
};

struct VassTransition {
  std::vector<std::int64_t> delta;
  ControlState target;
  std::string label;
  std::vector<FusedAction> provenance;
};

class VassControl {
public:
  virtual ~VassControl() = default;
  virtual std::vector<ControlState> initial_states() const = 0;
  /// Must be reentrant: analyses may call it from several places.
  virtual std::vector<VassTransition> transitions(const ControlState &q) const = 0;
  virtual bool is_final(const ControlState &q) const = 0;
  virtual std::string describe(const ControlState &q) const = 0;
};

struct Vass {
  std::vector<std::string> counters;
  std::vector<bool> zero_checked;  // acceptance requires these counters to be 0
  std::vector<std::int64_t> initial_marking;  // empty means all zero
  std::shared_ptr<const VassControl> control;

  std::size_t dimension() const { return counters.size(); }
  std::vector<std::int64_t> start_marking() const;
};

struct ExplicitTransition {
  std::uint32_t from = 0;
  std::vector<std::int64_t> delta;
  std::uint32_t to = 0;
  std::string label;
};

/// A hand-written VASS over named control states; all counters zero-checked.
Vass make_explicit_vass(std::vector<std::string> counters, std::vector<std::string> states,
                        std::vector<std::uint32_t> initial, std::vector<std::uint32_t> final_states,
                        std::vector<ExplicitTransition> transitions);

inline constexpr std::int64_t kOmega = std::numeric_limits<std::int64_t>::max();

/// Marking over N ∪ {ω}; ω is stored as kOmega and absorbs addition.
struct OmegaMarking {
  std::vector<std::int64_t> values;

  bool is_omega(std::size_t i) const { return values[i] == kOmega; }
  bool has_omega() const;
  /// Pointwise <= with n <= ω.
  bool covered_by(const OmegaMarking &other) const;
  /// nullopt when some component would become negative.
  std::optional<OmegaMarking> fire(const std::vector<std::int64_t> &delta) const;
  std::string format() const;

  friend bool operator==(const OmegaMarking &, const OmegaMarking &) = default;
};

struct KmOptions {
  std::size_t node_budget = 1'000'000;
  std::size_t control_budget = 1'000'000;
};

struct KmNode {
  std::uint32_t state = 0;  // index into KarpMillerResult::states
  OmegaMarking marking;
  std::optional<std::size_t> parent;
  std::string label;        // transition from the parent
  bool duplicate = false;   // same state and marking as an earlier node; not expanded
};

struct KarpMillerResult {
  std::vector<ControlState> states;
  std::vector<KmNode> nodes;
  bool complete = true;            // false: budget exceeded (Budget result)
  std::vector<bool> bounded;       // per counter, meaningful when complete
  std::optional<std::vector<std::int64_t>> bound;  // all counters bounded: max values

  bool all_bounded() const { return complete && bound.has_value(); }
};

KarpMillerResult karp_miller(const Vass &v, const KmOptions &opts = {});

/// Indented text rendering of the tree, one node per line.
std::string format_tree(const Vass &v, const KarpMillerResult &km);
/// `counter: bounded by B` / `counter: unbounded` per line.
std::string format_boundedness(const Vass &v, const KarpMillerResult &km);

enum class VassVerdict { Accepting, Rejecting, Unknown };

std::string_view to_string(VassVerdict v);

struct VassPathStep {
  VassTransition transition;
  ControlState state;
  std::vector<std::int64_t> marking;
};

struct VassPath {
  ControlState initial;
  std::vector<std::int64_t> initial_marking;
  std::vector<VassPathStep> steps;
};

struct VassReachOptions {
  std::optional<std::int64_t> bounded;  // bounded(k) mode; nullopt = auto
  std::size_t node_budget = 1'000'000;
  std::size_t state_budget = 2'000'000;
  std::int64_t max_cap = 256;  // auto mode: largest counter cap tried
};

struct VassStats {
  std::size_t control_states = 0;
  std::size_t tree_nodes = 0;
  std::size_t backward_tree_nodes = 0;
  std::size_t states = 0;
  std::int64_t cap = 0;  // last counter cap of the bounded search
};

struct VassReachResult {
  VassVerdict verdict = VassVerdict::Unknown;
  std::optional<VassPath> path;
  std::string certificate;  // why Rejecting, or why Unknown
  VassStats stats;
};

/// Reaches a final control state with every zero-checked counter at 0.
VassReachResult vass_reach(const Vass &v, const VassReachOptions &opts = {});

/// Checks a path against the VASS step relation and acceptance.
bool replay_vass_path(const Vass &v, const VassPath &path, std::string *why = nullptr);

/// Flat text export: `counter`, `state`, `init`, `final` and `trans` lines.
std::string export_vass(const Vass &v, std::size_t control_budget = 1'000'000);

} // namespace ctp
