// Transformations between tick systems, VASS and counter automata.
//
// tick_to_vass: every process runs on its own local time. A send and the
// matching receive fuse into one rendezvous transition, so channels carry no
// content. For each channel e = p -> q a lag counter holds
// (ticks of q) - (ticks of p): a tick of p decrements it, a tick of q
// increments it. Acceptance asks for final locations and all lags zero.
// Separate weak components are tied together by extra lag counters between
// their smallest processes, so every process ends with the same tick count.
//
// counters_to_channels: each counter becomes a self-loop channel carrying a
// single token message; zero tests become emptiness tests.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctp/semantics.hpp"
#include "ctp/vass.hpp"

namespace ctp {

struct TickVassOptions {
  /// Adds discard transitions for messages never received; required when
  /// the system does not demand empty channels at acceptance.
  bool allow_orphans = false;
  /// Location pattern that counts as final; default: every process final.
  std::optional<LocationPattern> target;
};

/// How the counters of a reduced VASS relate to the system.
struct TickVassLayout {
  struct Link {
    ProcessId sender;    // ticks decrement
    ProcessId receiver;  // ticks increment
    std::optional<ChannelId> channel;  // nullopt: component synchronisation
  };
  std::vector<Link> lags;                  // counters [0, lags.size())
  std::vector<ChannelId> orphan_counters;  // then one per channel when orphans are allowed
};

struct TickVass {
  Vass vass;
  TickVassLayout layout;
};

/// Throws Error when the system is not a discrete, test-free polyforest.
TickVass tick_to_vass(const System &sys, const TickVassOptions &opts = {});

/// Rebuilds a trace of the original system from an accepting VASS path.
/// Throws Error if the provenance labels do not form a run.
Trace vass_path_to_trace(const System &sys, const TickVass &tv, const VassPath &path);

struct VassAcceptance {
  VassVerdict verdict = VassVerdict::Unknown;
  std::optional<VassPath> path;
  std::optional<Trace> trace;  // Accepting only
  std::string certificate;
  VassStats stats;
};

VassAcceptance vass_acceptance(const System &sys, const TickVass &tv,
                               const VassReachOptions &opts = {});

/// Counter system (delay none) -> tick system with one self-loop channel per
/// counter. Acceptance with zero counters becomes acceptance with empty channels.
System counters_to_channels(const System &counters);

/// Name of the channel that encodes counter `x` of process `p`.
std::string counter_channel_name(const System &counters, ProcessId p, CounterId x);

} // namespace ctp
