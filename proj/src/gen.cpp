#include "ctp/gen.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <set>

namespace ctp {

std::string_view to_string(Shape s) {
  switch (s) {
  case Shape::Polytree:
    return "polytree";
  case Shape::Polyforest:
    return "polyforest";
  case Shape::Cycle:
    return "cycle";
  case Shape::StarIn:
    return "star-in";
  case Shape::StarOut:
    return "star-out";
  case Shape::Free:
    return "free";
  }
  return "?";
}

std::optional<Shape> parse_shape(std::string_view s) {
  for (auto sh : {Shape::Polytree, Shape::Polyforest, Shape::Cycle, Shape::StarIn, Shape::StarOut,
                  Shape::Free})
    if (to_string(sh) == s)
      return sh;
  return std::nullopt;
}

namespace {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint32_t below(std::uint32_t n) { return n == 0 ? 0 : static_cast<std::uint32_t>(eng_() % n); }
  std::uint32_t in(Range r) { return r.lo + below(r.hi - r.lo + 1); }
  bool chance(double p) {
    if (p <= 0)
      return false;
    if (p >= 1)
      return true;
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53 < p;
  }
  std::mt19937_64 &engine() { return eng_; }

private:
  std::mt19937_64 eng_;
};

std::uint32_t parse_uint(std::string_view s, std::string_view key) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error("profile: bad number '" + std::string(s) + "' for " + std::string(key));
  return v;
}

Range parse_range(std::string_view s, std::string_view key) {
  auto dots = s.find("..");
  if (dots == std::string_view::npos) {
    auto v = parse_uint(s, key);
    return {v, v};
  }
  return {parse_uint(s.substr(0, dots), key), parse_uint(s.substr(dots + 2), key)};
}

void check_profile(const GenProfile &p) {
  auto bad = [](const std::string &why) { throw Error("infeasible profile: " + why); };
  if (p.processes.lo == 0 || p.processes.lo > p.processes.hi)
    bad("process range must be non-empty and start at 1 or more");
  if (p.locations.lo == 0 || p.locations.lo > p.locations.hi)
    bad("location range must be non-empty and start at 1 or more");
  if (p.tick_loop_density < 0 || p.tick_loop_density > 1)
    bad("tick-loop density must lie in [0, 1]");
  if (p.guard_max < 0)
    bad("guard constants must be natural numbers");
  bool needs_channels = p.shape == Shape::Cycle ||
                        ((p.shape == Shape::StarIn || p.shape == Shape::StarOut ||
                          p.shape == Shape::Polytree) &&
                         p.processes.lo >= 2);
  if (needs_channels && p.messages == 0)
    bad(std::string(to_string(p.shape)) + " topology needs channels but no messages are allowed");
}

Topology make_topology(const GenProfile &prof, Rng &rng) {
  Topology topo;
  const std::uint32_t n = rng.in(prof.processes);
  for (std::uint32_t i = 0; i < n; ++i)
    topo.processes.push_back("p" + std::to_string(i));
  for (std::uint32_t i = 0; i < prof.messages; ++i)
    topo.messages.push_back("m" + std::to_string(i));

  auto add = [&](ProcessId a, ProcessId b) {
    ChannelId id = static_cast<ChannelId>(topo.channels.size());
    topo.channels.push_back({"c" + std::to_string(id), a, b, false, {}});
  };
  auto add_oriented = [&](ProcessId a, ProcessId b) {
    if (rng.below(2))
      add(a, b);
    else
      add(b, a);
  };

  switch (prof.shape) {
  case Shape::Polytree:
    for (ProcessId i = 1; i < n; ++i)
      add_oriented(i, rng.below(i));
    break;
  case Shape::Polyforest:
    for (ProcessId i = 1; i < n; ++i)
      if (rng.chance(0.6))
        add_oriented(i, rng.below(i));
    break;
  case Shape::Cycle:
    if (n == 1) {
      add(0, 0);
    } else {
      // a random permutation arranged in a ring
      std::vector<ProcessId> ring(n);
      for (ProcessId i = 0; i < n; ++i)
        ring[i] = i;
      for (std::uint32_t i = n - 1; i > 0; --i)
        std::swap(ring[i], ring[rng.below(i + 1)]);
      for (std::uint32_t i = 0; i < n; ++i)
        add_oriented(ring[i], ring[(i + 1) % n]);
    }
    break;
  case Shape::StarIn:
    for (ProcessId i = 1; i < n; ++i)
      add(i, 0);
    break;
  case Shape::StarOut:
    for (ProcessId i = 1; i < n; ++i)
      add(0, i);
    break;
  case Shape::Free: {
    std::uint32_t m = rng.below(n + 2);
    for (std::uint32_t k = 0; k < m; ++k)
      add(rng.below(n), rng.below(n));
    break;
  }
  }
  if (prof.messages == 0 && !topo.channels.empty())
    throw Error("infeasible profile: channels drawn but no messages are allowed");

  // choose exactly min(budget, #channels) testable channels
  std::vector<ChannelId> ids(topo.channels.size());
  for (ChannelId c = 0; c < ids.size(); ++c)
    ids[c] = c;
  for (std::size_t i = 0; i < ids.size() && i < prof.testable_budget; ++i) {
    std::size_t j = i + rng.below(static_cast<std::uint32_t>(ids.size() - i));
    std::swap(ids[i], ids[j]);
    topo.channels[ids[i]].testable = true;
  }
  return topo;
}

std::vector<ClockConstraint> random_guard(const GenProfile &prof, std::uint32_t clocks, Rng &rng) {
  std::vector<ClockConstraint> g;
  if (clocks == 0)
    return g;
  std::uint32_t atoms = rng.below(3);
  for (std::uint32_t i = 0; i < atoms; ++i) {
    static constexpr Cmp closed[] = {Cmp::Le, Cmp::Eq, Cmp::Ge};
    static constexpr Cmp all[] = {Cmp::Lt, Cmp::Le, Cmp::Eq, Cmp::Ge, Cmp::Gt};
    Cmp op = prof.strict_guards ? all[rng.below(5)] : closed[rng.below(3)];
    auto c = static_cast<std::int64_t>(rng.below(static_cast<std::uint32_t>(prof.guard_max) + 1));
    g.push_back({rng.below(clocks), op, c});
  }
  return g;
}

Automaton make_automaton(const GenProfile &prof, const Topology &topo, ProcessId p, Rng &rng) {
  Automaton a;
  const std::uint32_t nl = rng.in(prof.locations);
  for (std::uint32_t i = 0; i < nl; ++i)
    a.locations.push_back("l" + std::to_string(i));
  a.initial = {0};
  a.final_locations = {rng.below(nl)};
  if (nl > 2 && rng.chance(0.3))
    a.final_locations.push_back(rng.below(nl));

  const bool dense = prof.flavor == DelayKind::Dense;
  const bool counters = prof.flavor == DelayKind::None;
  const std::uint32_t nclocks = dense ? prof.clocks : 0;
  const std::uint32_t ncounters = counters ? prof.counters : 0;
  for (std::uint32_t i = 0; i < nclocks; ++i)
    a.clocks.push_back("x" + std::to_string(i));
  for (std::uint32_t i = 0; i < ncounters; ++i)
    a.counters.push_back("k" + std::to_string(i));

  auto out = topo.outgoing(p);
  auto in = topo.incoming(p);
  std::vector<ChannelId> testable_in;
  for (auto c : in)
    if (topo.channels[c].testable)
      testable_in.push_back(c);
  const auto nmsg = static_cast<std::uint32_t>(topo.messages.size());

  auto random_action = [&]() -> Action {
    // weighted by the kinds available to this process
    std::vector<int> kinds;
    if (!out.empty())
      kinds.insert(kinds.end(), {0, 0, 0});
    if (!in.empty())
      kinds.insert(kinds.end(), {1, 1, 1});
    if (!testable_in.empty())
      kinds.push_back(2);
    kinds.push_back(3);
    if (prof.flavor == DelayKind::Tick)
      kinds.insert(kinds.end(), {7, 7});  // ticks that change location make timing matter
    if (ncounters)
      kinds.insert(kinds.end(), {4, 4, 5, 5, 6});
    switch (kinds[rng.below(static_cast<std::uint32_t>(kinds.size()))]) {
    case 0:
      return Action::send(out[rng.below(static_cast<std::uint32_t>(out.size()))], rng.below(nmsg));
    case 1:
      return Action::recv(in[rng.below(static_cast<std::uint32_t>(in.size()))], rng.below(nmsg));
    case 2:
      return Action::test_empty(
          testable_in[rng.below(static_cast<std::uint32_t>(testable_in.size()))]);
    case 4:
      return Action::inc(rng.below(ncounters));
    case 5:
      return Action::dec(rng.below(ncounters));
    case 6:
      return Action::zero_test(rng.below(ncounters));
    case 7:
      return Action::tick();
    default:
      return Action::internal();
    }
  };

  auto add = [&](LocationId from, LocationId to) {
    Transition t;
    t.from = from;
    t.to = to;
    t.action = random_action();
    if (dense) {
      t.guard = random_guard(prof, nclocks, rng);
      bool into_final = a.is_final(to);
      for (ClockId x = 0; x < nclocks; ++x)
        if (rng.chance(into_final ? 0.7 : 0.3))
          t.resets.push_back(x);
    }
    a.transitions.push_back(std::move(t));
  };

  // a spanning tree from the initial location keeps every location reachable
  for (LocationId l = 1; l < nl; ++l)
    add(rng.below(l), l);
  std::uint32_t extra = rng.below(prof.extra_transitions + 1);
  for (std::uint32_t i = 0; i < extra; ++i)
    add(rng.below(nl), rng.below(nl));

  if (prof.flavor == DelayKind::Tick)
    for (LocationId l = 0; l < nl; ++l)
      if (rng.chance(prof.tick_loop_density))
        a.transitions.push_back({l, l, Action::tick(), {}, {}, {}});
  return a;
}

void dedupe_transitions(Automaton &a) {
  std::vector<Transition> unique;
  for (auto &t : a.transitions)
    if (std::find(unique.begin(), unique.end(), t) == unique.end())
      unique.push_back(std::move(t));
  a.transitions = std::move(unique);
}

} // namespace

GenProfile parse_profile(std::string_view text) {
  GenProfile prof;
  std::string norm(text);
  for (auto &ch : norm)
    if (ch == ',' || ch == ';' || ch == '\t' || ch == '\n')
      ch = ' ';
  std::size_t pos = 0;
  while (pos < norm.size()) {
    while (pos < norm.size() && norm[pos] == ' ')
      ++pos;
    std::size_t end = norm.find(' ', pos);
    if (end == std::string::npos)
      end = norm.size();
    std::string_view item(norm.data() + pos, end - pos);
    pos = end;
    if (item.empty())
      continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      if (item == "tick") {
        prof.flavor = DelayKind::Tick;
      } else if (item == "dense") {
        prof.flavor = DelayKind::Dense;
      } else if (item == "counter") {
        prof.flavor = DelayKind::None;
      } else if (item == "minsky") {
        prof.flavor = DelayKind::None;
        prof.processes = {1, 1};
        prof.counters = 2;
        prof.locations = {3, 5};
        prof.extra_transitions = 3;
      } else {
        throw Error("profile: unknown preset '" + std::string(item) + "'");
      }
      continue;
    }
    auto key = item.substr(0, eq);
    auto val = item.substr(eq + 1);
    if (key == "flavor" || key == "delay") {
      if (val == "discrete" || val == "tick")
        prof.flavor = DelayKind::Tick;
      else if (val == "dense")
        prof.flavor = DelayKind::Dense;
      else if (val == "none" || val == "counter")
        prof.flavor = DelayKind::None;
      else
        throw Error("profile: unknown flavor '" + std::string(val) + "'");
    } else if (key == "shape") {
      auto s = parse_shape(val);
      if (!s)
        throw Error("profile: unknown shape '" + std::string(val) + "'");
      prof.shape = *s;
    } else if (key == "processes") {
      prof.processes = parse_range(val, key);
    } else if (key == "locations") {
      prof.locations = parse_range(val, key);
    } else if (key == "messages") {
      prof.messages = parse_uint(val, key);
    } else if (key == "tests" || key == "testable") {
      prof.testable_budget = parse_uint(val, key);
    } else if (key == "tick-density") {
      try {
        prof.tick_loop_density = std::stod(std::string(val));
      } catch (const std::exception &) {
        throw Error("profile: bad number '" + std::string(val) + "' for tick-density");
      }
    } else if (key == "guard-max") {
      prof.guard_max = parse_uint(val, key);
    } else if (key == "clocks") {
      prof.clocks = parse_uint(val, key);
    } else if (key == "counters") {
      prof.counters = parse_uint(val, key);
    } else if (key == "strict") {
      prof.strict_guards = val == "1" || val == "yes" || val == "true";
    } else if (key == "extra") {
      prof.extra_transitions = parse_uint(val, key);
    } else {
      throw Error("profile: unknown key '" + std::string(key) + "'");
    }
  }
  check_profile(prof);
  return prof;
}

Topology generate_topology(const GenProfile &profile, std::uint64_t seed) {
  check_profile(profile);
  Rng rng(seed);
  return make_topology(profile, rng);
}

System generate(const GenProfile &profile, std::uint64_t seed) {
  check_profile(profile);
  Rng rng(seed);
  System sys;
  sys.name = "gen" + std::to_string(seed);
  sys.delay = profile.flavor;
  sys.topology = make_topology(profile, rng);
  for (ProcessId p = 0; p < sys.topology.processes.size(); ++p) {
    sys.automata.push_back(make_automaton(profile, sys.topology, p, rng));
    dedupe_transitions(sys.automata.back());
  }
  canonicalize(sys);
  auto diags = validate_system(sys);
  if (!diags.empty())
    throw Error("generator produced an invalid system: " + diags.front().message);
  return sys;
}

std::optional<Topology> mutate(const Topology &topo, Mutation m, std::uint64_t seed) {
  Rng rng(seed);
  Topology out = topo;
  auto pick = [&](const std::vector<ChannelId> &cs) {
    return cs[rng.below(static_cast<std::uint32_t>(cs.size()))];
  };
  switch (m) {
  case Mutation::AddTest:
  case Mutation::RemoveTest: {
    bool want = m == Mutation::RemoveTest;
    std::vector<ChannelId> cand;
    for (ChannelId c = 0; c < topo.channels.size(); ++c)
      if (topo.channels[c].testable == want)
        cand.push_back(c);
    if (cand.empty())
      return std::nullopt;
    out.channels[pick(cand)].testable = !want;
    return out;
  }
  case Mutation::AddCycleEdge: {
    // any channel between two processes of one weak component closes a cycle
    const auto n = static_cast<std::uint32_t>(topo.processes.size());
    if (n == 0)
      return std::nullopt;
    std::vector<std::uint32_t> comp(n);
    for (std::uint32_t i = 0; i < n; ++i)
      comp[i] = i;
    auto find = [&](std::uint32_t i) {
      while (comp[i] != i)
        i = comp[i];
      return i;
    };
    for (const auto &c : topo.channels)
      comp[find(c.source)] = find(c.target);
    std::vector<std::pair<ProcessId, ProcessId>> pairs;
    for (ProcessId a = 0; a < n; ++a)
      for (ProcessId b = 0; b < n; ++b)
        if (find(a) == find(b))
          pairs.emplace_back(a, b);
    auto [a, b] = pairs[rng.below(static_cast<std::uint32_t>(pairs.size()))];
    std::string name = "cyc";
    for (int k = 0; topo.find_channel(name); ++k)
      name = "cyc" + std::to_string(k);
    out.channels.push_back({name, a, b, false, {}});
    return out;
  }
  }
  return std::nullopt;
}

} // namespace ctp
