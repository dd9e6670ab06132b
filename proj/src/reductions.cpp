#include "ctp/reductions.hpp"

#include <algorithm>
#include <sstream>

#include "ctp/topology.hpp"

namespace ctp {

namespace {

class TickControl final : public VassControl {
public:
  TickControl(const System &sys, const TickVassLayout &layout, const TickVassOptions &opts)
      : sys_(sys), allow_orphans_(opts.allow_orphans),
        target_(opts.target ? *opts.target : final_pattern(sys)) {
    const std::size_t n = sys_.process_count();
    dim_ = layout.lags.size() + layout.orphan_counters.size();
    tick_delta_.assign(n, std::vector<std::int64_t>(dim_, 0));
    for (std::size_t i = 0; i < layout.lags.size(); ++i) {
      tick_delta_[layout.lags[i].sender][i] -= 1;
      tick_delta_[layout.lags[i].receiver][i] += 1;
    }
    orphan_index_.assign(sys_.topology.channels.size(), 0);
    for (std::size_t i = 0; i < layout.orphan_counters.size(); ++i)
      orphan_index_[layout.orphan_counters[i]] = layout.lags.size() + i;
    out_.resize(n);
    for (ProcessId p = 0; p < n; ++p) {
      const auto &a = sys_.automata[p];
      out_[p].resize(a.locations.size());
      for (std::uint32_t t = 0; t < a.transitions.size(); ++t)
        out_[p][a.transitions[t].from].push_back(t);
    }
  }

  std::vector<ControlState> initial_states() const override {
    const std::size_t n = sys_.process_count();
    std::vector<ControlState> out;
    for (const auto &a : sys_.automata)
      if (a.initial.empty())
        return out;
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      ControlState q(n + (allow_orphans_ ? sys_.topology.channels.size() : 0), 0);
      for (std::size_t p = 0; p < n; ++p)
        q[p] = sys_.automata[p].initial[idx[p]];
      out.push_back(std::move(q));
      std::size_t p = 0;
      while (p < n && ++idx[p] == sys_.automata[p].initial.size())
        idx[p++] = 0;
      if (p == n)
        break;
    }
    return out;
  }

  std::vector<VassTransition> transitions(const ControlState &q) const override {
    const std::size_t n = sys_.process_count();
    std::vector<VassTransition> out;
    auto moved = [&](ProcessId p, LocationId to) {
      ControlState next = q;
      next[p] = to;
      return next;
    };
    for (ProcessId p = 0; p < n; ++p) {
      const auto &a = sys_.automata[p];
      for (auto ti : out_[p][q[p]]) {
        const auto &t = a.transitions[ti];
        const auto &act = t.action;
        switch (act.kind) {
        case ActionKind::Internal:
          out.push_back({zero(), moved(p, t.to), name(p) + ":" + format_action(sys_, p, act), {{p, ti}}});
          break;
        case ActionKind::Tick:
          out.push_back({tick_delta_[p], moved(p, t.to), name(p) + ":tick", {{p, ti}}});
          break;
        case ActionKind::Send: {
          const ProcessId r = sys_.topology.channels[act.channel].target;
          const bool lost = allow_orphans_ && q[n + act.channel] != 0;
          if (!lost) {
            for (auto tj : out_[r][q[r]]) {
              const auto &u = sys_.automata[r].transitions[tj];
              if (u.action.kind != ActionKind::Recv || u.action.channel != act.channel ||
                  u.action.message != act.message)
                continue;
              ControlState next = moved(p, t.to);
              next[r] = u.to;
              out.push_back({zero(), std::move(next),
                             name(p) + ":" + format_action(sys_, p, act) + "|" + name(r) + ":" +
                                 format_action(sys_, r, u.action),
                             {{p, ti}, {r, tj}}});
            }
          }
          if (allow_orphans_) {
            // the message is never received; neither is anything after it
            ControlState next = moved(p, t.to);
            next[n + act.channel] = 1;
            auto delta = zero();
            delta[orphan_index_[act.channel]] = 1;
            out.push_back({std::move(delta), std::move(next),
                           name(p) + ":" + format_action(sys_, p, act) + "|lost", {{p, ti}}});
          }
          break;
        }
        default:
          break;  // receives are fused into sends; tests and counters are excluded
        }
      }
    }
    return out;
  }

  bool is_final(const ControlState &q) const override {
    std::vector<LocationId> locs(q.begin(), q.begin() + static_cast<long>(sys_.process_count()));
    return target_.matches(locs);
  }

  std::string describe(const ControlState &q) const override {
    std::string s;
    for (ProcessId p = 0; p < sys_.process_count(); ++p)
      s += (p ? "," : "") + name(p) + "=" + sys_.automata[p].locations[q[p]];
    if (allow_orphans_) {
      std::string lost;
      for (ChannelId c = 0; c < sys_.topology.channels.size(); ++c)
        if (q[sys_.process_count() + c])
          lost += (lost.empty() ? "" : ",") + sys_.topology.channels[c].name;
      if (!lost.empty())
        s += " lost{" + lost + "}";
    }
    return s;
  }

private:
  std::vector<std::int64_t> zero() const { return std::vector<std::int64_t>(dim_, 0); }
  const std::string &name(ProcessId p) const { return sys_.topology.processes[p]; }

  System sys_;
  bool allow_orphans_;
  LocationPattern target_;
  std::size_t dim_ = 0;
  std::vector<std::vector<std::int64_t>> tick_delta_;
  std::vector<std::size_t> orphan_index_;
  std::vector<std::vector<std::vector<std::uint32_t>>> out_;
};

} // namespace

TickVass tick_to_vass(const System &sys, const TickVassOptions &opts) {
  if (sys.delay != DelayKind::Tick)
    throw Error("VASS reduction requires a discrete-time (tick) system");
  if (auto diags = validate_system(sys); !diags.empty())
    throw Error("invalid system: " + diags.front().message);
  for (const auto &c : sys.topology.channels)
    if (c.testable)
      throw Error("emptiness tests unsupported by VASS reduction (channel '" + c.name +
                  "' is testable)");
  if (!is_polyforest(sys.topology).polyforest)
    throw Error("VASS reduction requires a polyforest topology");
  if (!sys.acceptance.empty_channels && !opts.allow_orphans)
    throw Error("system accepts with non-empty channels; the reduction needs orphan mode");

  TickVass tv;
  auto &layout = tv.layout;
  std::vector<std::string> names;
  for (ChannelId c = 0; c < sys.topology.channels.size(); ++c) {
    const auto &ch = sys.topology.channels[c];
    layout.lags.push_back({ch.source, ch.target, c});
    names.push_back("lag[" + ch.name + "]");
  }
  auto comps = weak_components(sys.topology);
  for (std::size_t i = 1; i < comps.size(); ++i) {
    ProcessId a = comps[i - 1].processes.front();
    ProcessId b = comps[i].processes.front();
    layout.lags.push_back({a, b, std::nullopt});
    names.push_back("sync[" + sys.topology.processes[a] + "~" + sys.topology.processes[b] + "]");
  }
  if (opts.allow_orphans) {
    for (ChannelId c = 0; c < sys.topology.channels.size(); ++c) {
      layout.orphan_counters.push_back(c);
      names.push_back("lost[" + sys.topology.channels[c].name + "]");
    }
  }

  tv.vass.counters = names;
  tv.vass.zero_checked.assign(names.size(), true);
  for (std::size_t i = layout.lags.size(); i < names.size(); ++i)
    tv.vass.zero_checked[i] = false;
  tv.vass.control = std::make_shared<TickControl>(sys, layout, opts);
  return tv;
}

Trace vass_path_to_trace(const System &sys, const TickVass &tv, const VassPath &path) {
  (void)tv;
  const std::size_t n = sys.process_count();
  // per process: rounds of local (non-tick) transitions, and the tick taken after each round
  std::vector<std::vector<std::vector<std::uint32_t>>> rounds(n, std::vector<std::vector<std::uint32_t>>(1));
  std::vector<std::vector<std::uint32_t>> ticks(n);
  for (const auto &st : path.steps) {
    for (const auto &fa : st.transition.provenance) {
      if (fa.process >= n || fa.transition >= sys.automata[fa.process].transitions.size())
        throw Error("VASS path carries an unknown provenance label");
      if (sys.automata[fa.process].transitions[fa.transition].action.kind == ActionKind::Tick) {
        ticks[fa.process].push_back(fa.transition);
        rounds[fa.process].emplace_back();
      } else {
        rounds[fa.process].back().push_back(fa.transition);
      }
    }
  }
  const std::size_t k = n ? ticks[0].size() : 0;
  for (ProcessId p = 0; p < n; ++p)
    if (ticks[p].size() != k)
      throw Error("VASS path ends with unequal local tick counts");

  DiscreteSemantics sem(sys);
  Trace trace;
  bool found = false;
  for (auto &c : sem.initial_configs()) {
    if (std::equal(c.locations.begin(), c.locations.end(), path.initial.begin())) {
      trace.initial = std::move(c);
      found = true;
      break;
    }
  }
  if (!found)
    throw Error("VASS path does not start in an initial configuration");

  auto apply = [&](const Step &step) {
    const GlobalConfig &cur = trace.final_config();
    for (auto &s : sem.successors(cur)) {
      if (s.step == step) {
        trace.steps.push_back({std::move(s.step), std::move(s.config)});
        return;
      }
    }
    throw Error("reconstructed step '" + sem.format_step(step) + "' is not enabled");
  };

  const auto order = sender_first_order(sys.topology);
  for (std::size_t r = 0; r <= k; ++r) {
    for (auto p : order)
      for (auto ti : rounds[p][r])
        apply(Step{{p}, {ti}, false});
    if (r == k)
      break;
    Step tick;
    tick.tick = true;
    for (ProcessId p = 0; p < n; ++p) {
      tick.processes.push_back(p);
      tick.transitions.push_back(ticks[p][r]);
    }
    apply(tick);
  }
  return trace;
}

VassAcceptance vass_acceptance(const System &sys, const TickVass &tv, const VassReachOptions &opts) {
  auto r = vass_reach(tv.vass, opts);
  VassAcceptance out;
  out.verdict = r.verdict;
  out.certificate = r.certificate;
  out.stats = r.stats;
  out.path = std::move(r.path);
  if (out.verdict == VassVerdict::Accepting)
    out.trace = vass_path_to_trace(sys, tv, *out.path);
  return out;
}

std::string counter_channel_name(const System &counters, ProcessId p, CounterId x) {
  std::string base = "ch_" + counters.topology.processes.at(p) + "_" + counters.automata.at(p).counters.at(x);
  std::string name = base;
  for (int k = 0; counters.topology.find_channel(name); ++k)
    name = base + "_" + std::to_string(k);
  return name;
}

System counters_to_channels(const System &cnt) {
  if (cnt.delay != DelayKind::None)
    throw Error("counter encoding expects a counter system (delay none)");
  if (!cnt.topology.channels.empty() && cnt.acceptance.empty_channels != cnt.acceptance.zero_counters)
    throw Error("counter encoding cannot separate channel and counter acceptance");

  System out = cnt;
  out.delay = DelayKind::Tick;
  out.acceptance.empty_channels = cnt.acceptance.zero_counters;
  out.acceptance.zero_counters = true;

  std::string token = "tok";
  for (int k = 0; cnt.topology.find_message(token); ++k)
    token = "tok" + std::to_string(k);
  const auto tok = static_cast<MessageId>(out.topology.messages.size());
  out.topology.messages.push_back(token);

  for (ProcessId p = 0; p < cnt.process_count(); ++p) {
    auto &a = out.automata[p];
    std::vector<ChannelId> chan(a.counters.size());
    for (CounterId x = 0; x < a.counters.size(); ++x) {
      chan[x] = static_cast<ChannelId>(out.topology.channels.size());
      bool tested = std::any_of(a.transitions.begin(), a.transitions.end(), [&](const Transition &t) {
        return t.action.kind == ActionKind::ZeroTest && t.action.counter == x;
      });
      out.topology.channels.push_back({counter_channel_name(cnt, p, x), p, p, tested, {}});
    }
    for (auto &t : a.transitions) {
      switch (t.action.kind) {
      case ActionKind::Inc:
        t.action = Action::send(chan[t.action.counter], tok);
        break;
      case ActionKind::Dec:
        t.action = Action::recv(chan[t.action.counter], tok);
        break;
      case ActionKind::ZeroTest:
        t.action = Action::test_empty(chan[t.action.counter]);
        break;
      default:
        break;
      }
    }
    a.counters.clear();
    for (LocationId l = 0; l < a.locations.size(); ++l)
      a.transitions.push_back({l, l, Action::tick(), {}, {}, {}});
  }
  canonicalize(out);
  return out;
}

} // namespace ctp
