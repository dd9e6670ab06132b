#include "ctp/dense.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace ctp {

std::string format_rational(const Rational &r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

namespace {

void require_dense(const System &sys, const char *what) {
  if (sys.delay != DelayKind::Dense)
    throw Error(std::string(what) + " requires a dense-time system");
}

bool any_target(const TargetSet &targets, const std::vector<LocationId> &locs) {
  return std::any_of(targets.begin(), targets.end(),
                     [&](const LocationPattern &t) { return t.matches(locs); });
}

// ---------------------------------------------------------------------------
// zone graph

struct ClockLayout {
  std::vector<std::size_t> offset;  // matrix index of the first clock of each process
  std::size_t count = 0;
  std::vector<std::int64_t> max_bounds;  // per matrix index

  explicit ClockLayout(const System &sys) {
    for (const auto &a : sys.automata) {
      offset.push_back(count + 1);
      count += a.clocks.size();
    }
    max_bounds.assign(count + 1, 0);
    for (ProcessId p = 0; p < sys.process_count(); ++p)
      for (const auto &t : sys.automata[p].transitions)
        for (const auto &g : t.guard) {
          auto &m = max_bounds[offset[p] + g.clock];
          m = std::max(m, g.constant);
        }
  }
};

struct ZoneNode {
  std::vector<LocationId> locations;
  std::vector<std::vector<MessageId>> channels;
  Dbm zone;
  std::size_t parent = SIZE_MAX;
  ProcessId process = 0;
  std::uint32_t transition = 0;
};

std::string discrete_key(const std::vector<LocationId> &locs,
                         const std::vector<std::vector<MessageId>> &chans) {
  std::string k;
  for (auto l : locs)
    k.append(reinterpret_cast<const char *>(&l), sizeof l);
  for (const auto &w : chans) {
    k.push_back('|');
    for (auto m : w)
      k.append(reinterpret_cast<const char *>(&m), sizeof m);
  }
  return k;
}

// Applies guard and resets of one transition; the result is not delayed.
Dbm edge_post(const Dbm &z, const Transition &t, std::size_t offset) {
  Dbm out = z;
  for (const auto &g : t.guard) {
    out.intersect(offset + g.clock, g.op, g.constant);
    if (out.is_empty())
      return out;
  }
  for (auto x : t.resets)
    out.reset(offset + x);
  return out;
}

// Channel effect of an action; false when the action is disabled.
enum class ChannelEffect { Ok, Disabled, OverBound };

ChannelEffect apply_channels(const Action &a, std::vector<std::vector<MessageId>> &chans,
                             std::optional<std::size_t> bound) {
  switch (a.kind) {
  case ActionKind::Send:
    if (bound && chans[a.channel].size() >= *bound)
      return ChannelEffect::OverBound;
    chans[a.channel].push_back(a.message);
    return ChannelEffect::Ok;
  case ActionKind::Recv:
    if (chans[a.channel].empty() || chans[a.channel].front() != a.message)
      return ChannelEffect::Disabled;
    chans[a.channel].erase(chans[a.channel].begin());
    return ChannelEffect::Ok;
  case ActionKind::TestEmpty:
    return chans[a.channel].empty() ? ChannelEffect::Ok : ChannelEffect::Disabled;
  case ActionKind::Internal:
    return ChannelEffect::Ok;
  default:
    return ChannelEffect::Disabled;
  }
}

// Zone of every clock equal to zero, over `clocks` clocks plus `extra`
// unconstrained trailing ones.
Dbm acceptance_zone(const System &sys, std::size_t clocks, std::size_t extra) {
  Dbm z = Dbm::universe(clocks + extra);
  if (sys.acceptance.zero_clocks)
    for (std::size_t i = 1; i <= clocks; ++i)
      z.intersect(i, Cmp::Eq, 0);
  return z;
}

// Smallest convenient delay d >= 0 with v + d inside z.
std::optional<Rational> pick_delay(const std::vector<Rational> &v, const Dbm &z) {
  Rational lo = 0, hi = 0;
  bool lo_strict = false, hi_inf = true, hi_strict = false;
  const std::size_t n = z.dimension();
  for (std::size_t j = 1; j < n; ++j) {
    Bound b = z.at(0, j);  // -(v_j + d) <= c  =>  d >= -c - v_j
    Rational cand = Rational(-bound_value(b)) - v[j];
    if (cand > lo || (cand == lo && bound_strict(b))) {
      lo_strict = cand > lo ? bound_strict(b) : (lo_strict || bound_strict(b));
      lo = cand;
    }
    Bound u = z.at(j, 0);  // v_j + d <= c
    if (u == kInfinity)
      continue;
    Rational top = Rational(bound_value(u)) - v[j];
    if (hi_inf || top < hi || (top == hi && bound_strict(u))) {
      hi_strict = (!hi_inf && top == hi) ? (hi_strict || bound_strict(u)) : bound_strict(u);
      hi = top;
      hi_inf = false;
    }
  }
  Rational d;
  if (!lo_strict)
    d = lo;
  else if (hi_inf)
    d = lo + Rational(1, 2);
  else
    d = lo + std::min(Rational(1), hi - lo) / 2;
  auto moved = v;
  for (std::size_t i = 1; i < n; ++i)
    moved[i] += d;
  if (d < 0 || !z.contains(moved))
    return std::nullopt;
  return d;
}

TimedTrace instantiate(const System &sys, const ClockLayout &layout, const std::vector<ZoneNode> &nodes,
                       std::size_t last) {
  std::vector<std::size_t> path;
  for (std::size_t i = last; i != SIZE_MAX; i = nodes[i].parent)
    path.push_back(i);
  std::reverse(path.begin(), path.end());
  const std::size_t n = path.size() - 1;  // edges
  const std::size_t global = layout.count + 1;  // extra clock holding global time

  // exact forward zones without extrapolation
  std::vector<Dbm> delayed;  // Z_i
  std::vector<Dbm> entered;  // P_i, right after edge i (P_0: the origin)
  entered.push_back(Dbm::zero(layout.count + 1));
  delayed.push_back(Dbm(entered.back()).delay_closure());
  std::vector<const Transition *> edges{nullptr};
  for (std::size_t i = 1; i <= n; ++i) {
    const auto &nd = nodes[path[i]];
    const auto &t = sys.automata[nd.process].transitions[nd.transition];
    edges.push_back(&t);
    entered.push_back(edge_post(delayed.back(), t, layout.offset[nd.process]));
    if (entered.back().is_empty())
      throw std::logic_error("zone witness is not feasible without extrapolation");
    delayed.push_back(Dbm(entered.back()).delay_closure());
  }

  // backward: B_i = points of Z_i that still lead to acceptance
  std::vector<Dbm> back(n + 1, Dbm::zero(0));
  back[n] = delayed[n];
  back[n].intersect(acceptance_zone(sys, layout.count, 1));
  for (std::size_t i = n; i >= 1; --i) {
    Dbm a = back[i];
    a.down();
    a.intersect(entered[i]);
    const auto &nd = nodes[path[i]];
    const auto off = layout.offset[nd.process];
    for (auto x : edges[i]->resets)
      a.intersect(off + x, Cmp::Eq, 0);
    for (auto x : edges[i]->resets)
      a.free(off + x);
    for (const auto &g : edges[i]->guard)
      a.intersect(off + g.clock, g.op, g.constant);
    a.intersect(delayed[i - 1]);
    if (a.is_empty())
      throw std::logic_error("zone witness lost during backward refinement");
    back[i - 1] = a;
  }

  TimedTrace tr;
  tr.initial = nodes[path[0]].locations;
  std::vector<Rational> v(global + 1, Rational(0));
  for (std::size_t i = 1; i <= n; ++i) {
    auto d = pick_delay(v, back[i - 1]);
    if (!d)
      throw std::logic_error("no delay reaches the refined zone");
    for (std::size_t c = 1; c <= global; ++c)
      v[c] += *d;
    const auto &nd = nodes[path[i]];
    tr.steps.push_back({nd.process, nd.transition, v[global]});
    for (auto x : edges[i]->resets)
      v[layout.offset[nd.process] + x] = 0;
  }
  auto d = pick_delay(v, back[n]);
  if (!d)
    throw std::logic_error("no delay reaches acceptance");
  tr.end_time = v[global] + *d;
  return tr;
}

} // namespace

ZoneResult zone_reach(const System &sys, const TargetSet &targets, const ZoneOptions &opts) {
  require_dense(sys, "zone_reach");
  ClockLayout layout(sys);
  ZoneResult res;
  auto &stats = res.stats;
  std::vector<ZoneNode> nodes;
  std::unordered_map<std::string, std::vector<std::size_t>> passed;
  const Dbm origin_ok = acceptance_zone(sys, layout.count, 0);

  auto accepting = [&](const ZoneNode &nd) {
    if (!any_target(targets, nd.locations))
      return false;
    if (sys.acceptance.empty_channels)
      for (const auto &w : nd.channels)
        if (!w.empty())
          return false;
    Dbm z = nd.zone;
    return !z.intersect(origin_ok).is_empty();
  };

  // true when stored; false when subsumed
  auto store = [&](ZoneNode nd) {
    auto &bucket = passed[discrete_key(nd.locations, nd.channels)];
    for (auto idx : bucket)
      if (nodes[idx].zone.includes(nd.zone)) {
        ++stats.subsumed;
        return false;
      }
    bucket.push_back(nodes.size());
    nodes.push_back(std::move(nd));
    return true;
  };

  // initial states: every combination of initial locations
  std::vector<std::vector<LocationId>> inits{{}};
  for (const auto &a : sys.automata) {
    std::vector<std::vector<LocationId>> next;
    for (const auto &prefix : inits)
      for (auto l : a.initial) {
        next.push_back(prefix);
        next.back().push_back(l);
      }
    inits = std::move(next);
  }
  for (const auto &locs : inits) {
    ZoneNode nd;
    nd.locations = locs;
    nd.channels.assign(sys.topology.channels.size(), {});
    nd.zone = Dbm::zero(layout.count).delay_closure();
    nd.zone.extrapolate(layout.max_bounds);
    if (store(std::move(nd)) && accepting(nodes.back())) {
      res.status = ReachStatus::Reachable;
      res.witness = instantiate(sys, layout, nodes, nodes.size() - 1);
      stats.states = nodes.size();
      return res;
    }
  }

  for (std::size_t head = 0; head < nodes.size(); ++head) {
    for (ProcessId p = 0; p < sys.process_count(); ++p) {
      const auto &a = sys.automata[p];
      for (std::uint32_t ti = 0; ti < a.transitions.size(); ++ti) {
        const auto &t = a.transitions[ti];
        if (t.from != nodes[head].locations[p])
          continue;
        Dbm z = edge_post(nodes[head].zone, t, layout.offset[p]);
        if (z.is_empty())
          continue;
        auto chans = nodes[head].channels;
        auto eff = apply_channels(t.action, chans, opts.channel_bound);
        if (eff == ChannelEffect::OverBound)
          stats.bound_pruned = true;
        if (eff != ChannelEffect::Ok)
          continue;
        z.delay_closure();
        z.extrapolate(layout.max_bounds);
        ++stats.transitions;
        if (nodes.size() >= opts.state_budget) {
          stats.budget_hit = true;
          break;
        }
        ZoneNode nd;
        nd.locations = nodes[head].locations;
        nd.locations[p] = t.to;
        nd.channels = std::move(chans);
        nd.zone = std::move(z);
        nd.parent = head;
        nd.process = p;
        nd.transition = ti;
        if (!store(std::move(nd)))
          continue;
        if (accepting(nodes.back())) {
          res.status = ReachStatus::Reachable;
          res.witness = instantiate(sys, layout, nodes, nodes.size() - 1);
          stats.states = nodes.size();
          return res;
        }
      }
      if (stats.budget_hit)
        break;
    }
    if (stats.budget_hit)
      break;
  }
  stats.states = nodes.size();
  res.status = stats.pruned() ? ReachStatus::BoundExhausted : ReachStatus::Unreachable;
  return res;
}

// ---------------------------------------------------------------------------
// timed traces

TimedReplay replay_timed(const System &sys, const TimedTrace &trace, const TargetSet &targets) {
  require_dense(sys, "replay_timed");
  ClockLayout layout(sys);
  TimedReplay out;
  auto fail = [&](std::optional<std::size_t> at, std::string why) {
    out.valid = false;
    out.first_invalid = at;
    out.reason = std::move(why);
    return out;
  };
  if (trace.initial.size() != sys.process_count())
    return fail(std::nullopt, "initial location vector has the wrong size");
  for (ProcessId p = 0; p < sys.process_count(); ++p)
    if (!sys.automata[p].is_initial(trace.initial[p]))
      return fail(std::nullopt, "process " + sys.topology.processes[p] + " does not start in an initial location");

  auto locs = trace.initial;
  std::vector<std::vector<MessageId>> chans(sys.topology.channels.size());
  std::vector<Rational> reset_at(layout.count + 1, Rational(0));
  Rational now = 0;
  auto valuation = [&](const Rational &t) {
    std::vector<Rational> v(layout.count + 1, Rational(0));
    for (std::size_t i = 1; i <= layout.count; ++i)
      v[i] = t - reset_at[i];
    return v;
  };

  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto &st = trace.steps[i];
    if (st.time < now)
      return fail(i, "timestamp decreases");
    if (st.process >= sys.process_count())
      return fail(i, "unknown process");
    const auto &a = sys.automata[st.process];
    if (st.transition >= a.transitions.size())
      return fail(i, "unknown transition");
    const auto &t = a.transitions[st.transition];
    if (t.from != locs[st.process])
      return fail(i, "transition does not leave the current location");
    now = st.time;
    auto v = valuation(now);
    out.valuations.push_back(v);
    const auto off = layout.offset[st.process];
    for (const auto &g : t.guard) {
      const Rational &x = v[off + g.clock];
      Rational c = g.constant;
      bool ok = g.op == Cmp::Lt ? x < c : g.op == Cmp::Le ? x <= c : g.op == Cmp::Eq ? x == c
                : g.op == Cmp::Ge ? x >= c : x > c;
      if (!ok)
        return fail(i, "guard " + a.clocks[g.clock] + std::string(to_string(g.op)) +
                           std::to_string(g.constant) + " fails at " + format_rational(x));
    }
    if (apply_channels(t.action, chans, std::nullopt) != ChannelEffect::Ok)
      return fail(i, "channel action disabled");
    for (auto x : t.resets)
      reset_at[off + x] = now;
    locs[st.process] = t.to;
  }
  if (trace.end_time < now)
    return fail(std::nullopt, "end time precedes the last step");
  out.valuations.push_back(valuation(trace.end_time));
  out.final_locations = locs;
  out.final_channels = chans;
  if (targets.empty())
    return out;
  if (!any_target(targets, locs))
    return fail(std::nullopt, "final locations miss the target");
  if (sys.acceptance.empty_channels)
    for (const auto &w : chans)
      if (!w.empty())
        return fail(std::nullopt, "channels are not empty at the end");
  if (sys.acceptance.zero_clocks)
    for (const auto &x : out.valuations.back())
      if (x != 0)
        return fail(std::nullopt, "clocks are not zero at the end");
  return out;
}

std::string format_timed_trace(const System &sys, const TimedTrace &trace) {
  std::ostringstream os;
  os << "init: [";
  for (ProcessId p = 0; p < sys.process_count(); ++p)
    os << (p ? "," : "") << sys.topology.processes[p] << "=" << sys.automata[p].locations.at(trace.initial[p]);
  os << "]\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto &st = trace.steps[i];
    os << "step " << i + 1 << " @ " << format_rational(st.time) << ": [" << sys.topology.processes[st.process]
       << "] " << format_transition(sys, st.process, sys.automata[st.process].transitions.at(st.transition))
       << "\n";
  }
  os << "end @ " << format_rational(trace.end_time) << "\n";
  return os.str();
}

std::string timed_trace_to_json(const System &sys, const TimedTrace &trace) {
  using nlohmann::json;
  json out;
  out["system"] = sys.name;
  json init = json::object();
  for (ProcessId p = 0; p < sys.process_count(); ++p)
    init[sys.topology.processes[p]] = sys.automata[p].locations.at(trace.initial[p]);
  out["initial"] = init;
  json steps = json::array();
  for (const auto &st : trace.steps)
    steps.push_back({{"process", sys.topology.processes[st.process]},
                     {"transition", format_transition(sys, st.process,
                                                      sys.automata[st.process].transitions.at(st.transition))},
                     {"time", format_rational(st.time)}});
  out["steps"] = steps;
  out["end_time"] = format_rational(trace.end_time);
  return out.dump(2);
}

// ---------------------------------------------------------------------------
// regions

namespace {

// Regions over n process clocks followed by tau (n) and tau' (n + 1).
struct RegionOps {
  std::size_t clocks = 0;
  std::int64_t cmax = 0;

  std::size_t tau() const { return clocks; }
  std::size_t tau2() const { return clocks + 1; }

  static void normalize(Region &r) {
    std::set<std::uint8_t> used;
    for (auto f : r.fracs)
      if (f != 0 && f != Region::kAbove)
        used.insert(f);
    std::map<std::uint8_t, std::uint8_t> rank;
    std::uint8_t k = 1;
    for (auto f : used)
      rank[f] = k++;
    for (auto &f : r.fracs)
      if (f != 0 && f != Region::kAbove)
        f = rank[f];
  }

  Region initial() const {
    Region r;
    r.ints.assign(clocks + 2, 0);
    r.fracs.assign(clocks + 2, 0);
    r.fracs[tau2()] = 1;
    return r;
  }

  // Time successor; `tick` reports whether tau or tau' changes integrality.
  Region successor(const Region &r, bool &tick) const {
    Region s = r;
    bool any_zero = false;
    for (auto f : r.fracs)
      any_zero = any_zero || f == 0;
    if (any_zero) {
      tick = r.fracs[tau()] == 0 || r.fracs[tau2()] == 0;
      for (std::size_t c = 0; c < s.fracs.size(); ++c) {
        auto &f = s.fracs[c];
        if (f == Region::kAbove)
          continue;
        if (f == 0) {
          if (c < clocks && s.ints[c] >= cmax) {
            f = Region::kAbove;
            s.ints[c] = static_cast<std::uint8_t>(cmax + 1);
          } else {
            f = 1;
          }
        } else {
          ++f;
        }
      }
    } else {
      std::uint8_t top = 0;
      for (auto f : r.fracs)
        if (f != Region::kAbove)
          top = std::max(top, f);
      tick = r.fracs[tau()] == top || r.fracs[tau2()] == top;
      for (std::size_t c = 0; c < s.fracs.size(); ++c)
        if (s.fracs[c] == top) {
          s.fracs[c] = 0;
          if (c < clocks)
            ++s.ints[c];
        }
    }
    normalize(s);
    return s;
  }

  static bool satisfies(const Region &r, const ClockConstraint &g) {
    const auto i = static_cast<std::int64_t>(r.ints[g.clock]);
    const auto f = r.fracs[g.clock];
    const auto c = g.constant;
    if (f == Region::kAbove)
      return g.op == Cmp::Ge || g.op == Cmp::Gt;
    const bool exact = f == 0;
    switch (g.op) {
    case Cmp::Lt:
      return i < c;
    case Cmp::Le:
      return exact ? i <= c : i < c;
    case Cmp::Eq:
      return exact && i == c;
    case Cmp::Ge:
      return i >= c;
    case Cmp::Gt:
      return exact ? i > c : i >= c;
    }
    return false;
  }

  static void reset(Region &r, ClockId x) {
    r.ints[x] = 0;
    r.fracs[x] = 0;
    normalize(r);
  }

  bool final_ok(const Region &r, bool zero_clocks) const {
    if (!zero_clocks)
      return true;
    for (std::size_t c = 0; c < clocks; ++c)
      if (r.ints[c] != 0 || r.fracs[c] != 0)
        return false;
    return r.fracs[tau()] == 0 || r.fracs[tau2()] == 0;
  }

  // Region of concrete values: process clocks, then global time and the
  // phase fraction f.
  Region of(const std::vector<Rational> &clock_values, const Rational &time, const Rational &phase) const {
    auto frac = [](const Rational &v) {
      Rational fl = Rational(numerator(v) / denominator(v));
      if (fl > v)
        fl -= 1;
      return std::pair{fl, v - fl};
    };
    std::vector<std::pair<Rational, bool>> fr(clocks + 2);  // (fraction, tracked)
    Region r;
    r.ints.assign(clocks + 2, 0);
    r.fracs.assign(clocks + 2, 0);
    for (std::size_t c = 0; c < clocks; ++c) {
      if (clock_values[c] > cmax) {
        r.ints[c] = static_cast<std::uint8_t>(cmax + 1);
        r.fracs[c] = Region::kAbove;
        fr[c] = {0, false};
        continue;
      }
      auto [fl, f] = frac(clock_values[c]);
      r.ints[c] = static_cast<std::uint8_t>(fl.convert_to<long>());
      fr[c] = {f, true};
    }
    fr[tau()] = {frac(time).second, true};
    fr[tau2()] = {frac(time + 1 - phase).second, true};
    std::set<Rational> positives;
    for (const auto &[f, tracked] : fr)
      if (tracked && f > 0)
        positives.insert(f);
    for (std::size_t c = 0; c < fr.size(); ++c)
      if (fr[c].second && fr[c].first > 0)
        r.fracs[c] = static_cast<std::uint8_t>(std::distance(positives.begin(), positives.find(fr[c].first)) + 1);
    return r;
  }
};

std::string region_key(const Region &r) {
  std::string k(r.ints.begin(), r.ints.end());
  k.append(r.fracs.begin(), r.fracs.end());
  return k;
}

std::string format_region(const Automaton &a, const Region &r) {
  const std::size_t n = a.clocks.size();
  auto name = [&](std::size_t c) {
    return c < n ? a.clocks[c] : c == n ? std::string("tau") : std::string("tau'");
  };
  std::ostringstream os;
  for (std::size_t c = 0; c < n; ++c) {
    os << (c ? " " : "") << a.clocks[c];
    if (r.fracs[c] == Region::kAbove)
      os << ">" << static_cast<int>(r.ints[c]) - 1;
    else if (r.fracs[c] == 0)
      os << "=" << static_cast<int>(r.ints[c]);
    else
      os << " in (" << static_cast<int>(r.ints[c]) << "," << static_cast<int>(r.ints[c]) + 1 << ")";
  }
  std::uint8_t top = 0;
  for (auto f : r.fracs)
    if (f != Region::kAbove)
      top = std::max(top, f);
  os << (n ? " | " : "| ");
  for (std::uint8_t k = 0; k <= top; ++k) {
    os << (k ? " < " : "") << "{";
    bool first = true;
    for (std::size_t c = 0; c < r.fracs.size(); ++c)
      if (r.fracs[c] == k) {
        os << (first ? "" : ",") << name(c);
        first = false;
      }
    os << "}";
  }
  return os.str();
}

} // namespace

std::string DiscretizedProcess::describe(const System &dense, ProcessId p, LocationId s) const {
  const auto &a = dense.automata.at(p);
  const auto &st = states.at(s);
  if (!timed)
    return a.locations.at(st.location);
  return a.locations.at(st.location) + " [" + format_region(a, st.region) + "]";
}

DiscretizedProcess discretize(const System &sys, ProcessId p) {
  require_dense(sys, "discretize");
  const auto &a = sys.automata.at(p);
  DiscretizedProcess out;
  out.max_constant = a.max_constant();
  auto &da = out.automaton;

  if (a.clocks.empty()) {
    da.locations = a.locations;
    da.initial = a.initial;
    da.final_locations = a.final_locations;
    for (LocationId l = 0; l < a.locations.size(); ++l)
      out.states.push_back({l, Region{}});
    for (std::uint32_t i = 0; i < a.transitions.size(); ++i) {
      Transition t = a.transitions[i];
      t.guard.clear();
      t.resets.clear();
      t.span.reset();
      da.transitions.push_back(t);
      out.origin.push_back(i);
    }
    for (LocationId l = 0; l < a.locations.size(); ++l) {
      da.transitions.push_back({l, l, Action::tick(), {}, {}, {}});
      out.origin.push_back(DiscretizedProcess::kDelay);
    }
    return out;
  }

  out.timed = true;
  RegionOps ops{a.clocks.size(), out.max_constant};
  std::map<std::pair<LocationId, std::string>, LocationId> index;
  std::deque<LocationId> work;
  auto intern = [&](LocationId l, const Region &r) {
    auto key = std::pair{l, region_key(r)};
    auto it = index.find(key);
    if (it != index.end())
      return it->second;
    auto id = static_cast<LocationId>(out.states.size());
    index.emplace(key, id);
    out.states.push_back({l, r});
    da.locations.push_back(a.locations[l] + "_" + std::to_string(id));
    work.push_back(id);
    return id;
  };
  for (auto l : a.initial)
    da.initial.push_back(intern(l, ops.initial()));

  while (!work.empty()) {
    auto s = work.front();
    work.pop_front();
    const auto st = out.states[s];
    bool tick = false;
    Region next = ops.successor(st.region, tick);
    auto to = intern(st.location, next);
    da.transitions.push_back({s, to, tick ? Action::tick() : Action::internal("delay"), {}, {}, {}});
    out.origin.push_back(DiscretizedProcess::kDelay);
    for (std::uint32_t i = 0; i < a.transitions.size(); ++i) {
      const auto &t = a.transitions[i];
      if (t.from != st.location)
        continue;
      if (!std::all_of(t.guard.begin(), t.guard.end(),
                       [&](const ClockConstraint &g) { return RegionOps::satisfies(st.region, g); }))
        continue;
      Region r = st.region;
      for (auto x : t.resets)
        RegionOps::reset(r, x);
      auto target = intern(t.to, r);
      da.transitions.push_back({s, target, t.action, {}, {}, {}});
      out.origin.push_back(i);
    }
  }
  for (LocationId s = 0; s < out.states.size(); ++s)
    if (a.is_final(out.states[s].location) && ops.final_ok(out.states[s].region, sys.acceptance.zero_clocks))
      da.final_locations.push_back(s);
  return out;
}

Discretized discretize_system(const System &sys) {
  require_dense(sys, "discretize");
  Discretized d;
  d.system.name = sys.name + "_ticks";
  d.system.delay = DelayKind::Tick;
  d.system.topology = sys.topology;
  for (auto &c : d.system.topology.channels)
    c.span.reset();
  d.system.acceptance = sys.acceptance;
  d.zero_clocks = sys.acceptance.zero_clocks;
  for (ProcessId p = 0; p < sys.process_count(); ++p) {
    d.processes.push_back(discretize(sys, p));
    d.system.automata.push_back(d.processes.back().automaton);
  }
  return d;
}

LocationPattern lift_target(const Discretized &d, const LocationPattern &pattern) {
  LocationPattern out;
  out.allowed.resize(d.processes.size());
  for (std::size_t p = 0; p < d.processes.size(); ++p) {
    const auto &dp = d.processes[p];
    const bool free = p >= pattern.allowed.size() || pattern.allowed[p].empty();
    std::vector<LocationId> ok;
    for (LocationId s = 0; s < dp.states.size(); ++s) {
      const auto &st = dp.states[s];
      if (!free && std::find(pattern.allowed[p].begin(), pattern.allowed[p].end(), st.location) ==
                       pattern.allowed[p].end())
        continue;
      if (dp.timed) {
        RegionOps ops{st.region.ints.size() - 2, dp.max_constant};
        if (!ops.final_ok(st.region, d.zero_clocks))
          continue;
      }
      ok.push_back(s);
    }
    if (free && ok.size() == dp.states.size())
      continue;
    if (ok.empty())
      ok.push_back(static_cast<LocationId>(dp.states.size()));  // matches nothing
    out.allowed[p] = ok;
  }
  return out;
}

Trace lift_timed_trace(const System &dense, const Discretized &d, const TimedTrace &trace) {
  Rational end_frac = trace.end_time - Rational(numerator(trace.end_time) / denominator(trace.end_time));
  const Rational phase = end_frac == 0 ? Rational(1, 2) : end_frac;
  auto phase_of = [&](const Rational &t) -> std::uint64_t {
    auto k = Rational(numerator(t) / denominator(t)).convert_to<std::uint64_t>();
    Rational r = t - k;
    return 4 * k + (r == 0 ? 0 : r < phase ? 1 : r == phase ? 2 : 3);
  };

  const std::size_t n = dense.process_count();
  DiscreteSemantics sem(d.system);
  Trace out;
  out.initial.locations.resize(n);
  out.initial.channels.assign(dense.topology.channels.size(), {});
  out.initial.counters.assign(n, {});
  out.initial.local_ticks.assign(n, 0);

  // discretized transition lookup
  std::vector<std::vector<std::vector<std::uint32_t>>> from(n);
  for (ProcessId p = 0; p < n; ++p) {
    const auto &da = d.processes[p].automaton;
    from[p].resize(da.locations.size());
    for (std::uint32_t i = 0; i < da.transitions.size(); ++i)
      from[p][da.transitions[i].from].push_back(i);
  }
  std::vector<std::vector<Rational>> reset_at(n);
  for (ProcessId p = 0; p < n; ++p) {
    reset_at[p].assign(dense.automata[p].clocks.size(), Rational(0));
    const auto &dp = d.processes[p];
    LocationId init = 0;
    bool found = false;
    for (auto s : dp.automaton.initial)
      if (dp.states[s].location == trace.initial.at(p)) {
        init = s;
        found = true;
      }
    if (!found)
      throw Error("initial location has no discretized counterpart");
    out.initial.locations[p] = init;
  }

  GlobalConfig cfg = out.initial;
  auto delay_edge = [&](ProcessId p) -> std::uint32_t {
    for (auto i : from[p][cfg.locations[p]])
      if (d.processes[p].origin[i] == DiscretizedProcess::kDelay)
        return i;
    throw Error("discretized state without a time successor");
  };
  auto take = [&](Step step) {
    for (auto &s : sem.successors(cfg))
      if (s.step == step) {
        cfg = s.config;
        out.steps.push_back({step, cfg});
        return;
      }
    throw Error("lifted step is not enabled: " + sem.format_step(step));
  };
  auto advance_to = [&](ProcessId p, const Rational &t) {
    const auto &dp = d.processes[p];
    if (!dp.timed)
      return;
    RegionOps ops{dense.automata[p].clocks.size(), dp.max_constant};
    std::vector<Rational> vals;
    for (const auto &r : reset_at[p])
      vals.push_back(t - r);
    Region want = ops.of(vals, t, phase);
    for (int guard = 0; dp.states[cfg.locations[p]].region != want; ++guard) {
      auto e = delay_edge(p);
      if (dp.automaton.transitions[e].action.kind == ActionKind::Tick || guard > 10000)
        throw Error("region of the timed run is not reachable inside its phase");
      take(Step{{p}, {e}, false});
    }
  };
  std::uint64_t ticks = 0;
  auto move_to_phase = [&](std::uint64_t target) {
    while (ticks < target) {
      Step tick;
      tick.tick = true;
      for (ProcessId p = 0; p < n; ++p) {
        const auto &dp = d.processes[p];
        if (dp.timed) {
          int guard = 0;
          while (dp.automaton.transitions[delay_edge(p)].action.kind != ActionKind::Tick) {
            if (++guard > 10000)
              throw Error("no tick reachable");
            take(Step{{p}, {delay_edge(p)}, false});
          }
          tick.processes.push_back(p);
          tick.transitions.push_back(delay_edge(p));
        } else {
          bool ok = false;
          for (auto i : from[p][cfg.locations[p]])
            if (dp.automaton.transitions[i].action.kind == ActionKind::Tick) {
              tick.processes.push_back(p);
              tick.transitions.push_back(i);
              ok = true;
              break;
            }
          if (!ok)
            throw Error("clock-free process cannot tick");
        }
      }
      take(tick);
      ++ticks;
    }
  };

  for (const auto &st : trace.steps) {
    move_to_phase(phase_of(st.time));
    advance_to(st.process, st.time);
    const auto &dp = d.processes[st.process];
    std::optional<std::uint32_t> edge;
    for (auto i : from[st.process][cfg.locations[st.process]])
      if (dp.origin[i] == st.transition)
        edge = i;
    if (!edge)
      throw Error("timed step has no discretized counterpart");
    take(Step{{st.process}, {*edge}, false});
    for (auto x : dense.automata[st.process].transitions[st.transition].resets)
      reset_at[st.process][x] = st.time;
  }
  move_to_phase(phase_of(trace.end_time));
  for (ProcessId p = 0; p < n; ++p)
    advance_to(p, trace.end_time);
  return out;
}

} // namespace ctp
