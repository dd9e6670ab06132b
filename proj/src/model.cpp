#include "ctp/model.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace ctp {

std::string_view to_string(DelayKind kind) {
  switch (kind) {
  case DelayKind::None:
    return "none";
  case DelayKind::Tick:
    return "discrete";
  case DelayKind::Dense:
    return "dense";
  }
  return "?";
}

std::string_view to_string(Cmp op) {
  switch (op) {
  case Cmp::Lt:
    return "<";
  case Cmp::Le:
    return "<=";
  case Cmp::Eq:
    return "==";
  case Cmp::Ge:
    return ">=";
  case Cmp::Gt:
    return ">";
  }
  return "?";
}

namespace {

template <class T>
std::optional<std::uint32_t> index_of(const std::vector<T> &v, std::string_view name) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == name)
      return static_cast<std::uint32_t>(i);
  return std::nullopt;
}

} // namespace

std::optional<ProcessId> Topology::find_process(std::string_view name) const {
  return index_of(processes, name);
}

std::optional<ChannelId> Topology::find_channel(std::string_view name) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i].name == name)
      return static_cast<ChannelId>(i);
  return std::nullopt;
}

std::optional<MessageId> Topology::find_message(std::string_view name) const {
  return index_of(messages, name);
}

std::vector<ChannelId> Topology::outgoing(ProcessId p) const {
  std::vector<ChannelId> out;
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i].source == p)
      out.push_back(static_cast<ChannelId>(i));
  return out;
}

std::vector<ChannelId> Topology::incoming(ProcessId p) const {
  std::vector<ChannelId> out;
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i].target == p)
      out.push_back(static_cast<ChannelId>(i));
  return out;
}

std::optional<LocationId> Automaton::find_location(std::string_view name) const {
  return index_of(locations, name);
}

bool Automaton::is_initial(LocationId l) const {
  return std::find(initial.begin(), initial.end(), l) != initial.end();
}

bool Automaton::is_final(LocationId l) const {
  return std::find(final_locations.begin(), final_locations.end(), l) != final_locations.end();
}

std::int64_t Automaton::max_constant() const {
  std::int64_t m = 0;
  for (const auto &t : transitions)
    for (const auto &g : t.guard)
      m = std::max(m, g.constant);
  return m;
}

bool is_identifier(std::string_view s) {
  if (s.empty())
    return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s[0]))
    return false;
  return std::all_of(s.begin(), s.end(), [&](char c) { return alpha(c) || digit(c); });
}

namespace {

class Validator {
public:
  explicit Validator(const System &sys) : sys_(sys) {}

  std::vector<Diagnostic> run() {
    const auto &topo = sys_.topology;
    check_names("process", topo.processes, std::nullopt);
    check_names("message", topo.messages, std::nullopt);

    std::set<std::string> seen;
    for (const auto &c : topo.channels) {
      if (!is_identifier(c.name))
        add("invalid channel name '" + c.name + "'", c.span);
      if (!seen.insert(c.name).second)
        add("duplicate channel '" + c.name + "'", c.span);
      if (c.source >= topo.processes.size() || c.target >= topo.processes.size())
        add("channel '" + c.name + "' has an undeclared endpoint", c.span);
    }

    if (sys_.automata.size() != topo.processes.size()) {
      add("system declares " + std::to_string(topo.processes.size()) + " processes but " +
              std::to_string(sys_.automata.size()) + " automata",
          std::nullopt);
      return std::move(out_);
    }
    for (std::size_t p = 0; p < sys_.automata.size(); ++p)
      check_automaton(static_cast<ProcessId>(p));
    return std::move(out_);
  }

private:
  void add(std::string msg, std::optional<SourceSpan> span) {
    out_.push_back({std::move(msg), span});
  }

  void check_names(const std::string &what, const std::vector<std::string> &names,
                   std::optional<SourceSpan> span) {
    std::set<std::string> seen;
    for (const auto &n : names) {
      if (!is_identifier(n))
        add("invalid " + what + " name '" + n + "'", span);
      if (!seen.insert(n).second)
        add("duplicate " + what + " '" + n + "'", span);
    }
  }

  std::string channel_name(ChannelId c) const {
    const auto &chs = sys_.topology.channels;
    return c < chs.size() ? chs[c].name : "#" + std::to_string(c);
  }

  void check_automaton(ProcessId p) {
    const auto &a = sys_.automata[p];
    const auto &topo = sys_.topology;
    const std::string pname = topo.processes[p];
    const std::string where = "process '" + pname + "'";

    check_names("location in " + where, a.locations, a.span);
    check_names("clock in " + where, a.clocks, a.span);
    check_names("counter in " + where, a.counters, a.span);

    for (auto l : a.initial)
      if (l >= a.locations.size())
        add(where + ": initial location out of range", a.span);
    for (auto l : a.final_locations)
      if (l >= a.locations.size())
        add(where + ": final location out of range", a.span);

    if (!a.clocks.empty() && sys_.delay != DelayKind::Dense)
      add(where + " declares clocks but the system is not dense-time", a.span);
    if (!a.counters.empty() && sys_.delay != DelayKind::None)
      add(where + " declares counters but the system has a non-empty delay domain", a.span);

    for (const auto &t : a.transitions) {
      if (t.from >= a.locations.size() || t.to >= a.locations.size())
        add(where + ": transition endpoint out of range", t.span);
      check_action(p, where, t);
      if (!t.guard.empty() || !t.resets.empty()) {
        if (sys_.delay != DelayKind::Dense)
          add(where + ": clock guard or reset in a system without dense time", t.span);
        for (const auto &g : t.guard) {
          if (g.clock >= a.clocks.size())
            add(where + ": guard on undeclared clock", t.span);
          if (g.constant < 0)
            add(where + ": guard constant must be a natural number", t.span);
        }
        for (auto x : t.resets)
          if (x >= a.clocks.size())
            add(where + ": reset of undeclared clock", t.span);
      }
    }
  }

  void check_action(ProcessId p, const std::string &where, const Transition &t) {
    const auto &topo = sys_.topology;
    const auto &act = t.action;
    if (act.uses_channel()) {
      if (act.channel >= topo.channels.size()) {
        add(where + ": action on undeclared channel", t.span);
        return;
      }
      const auto &ch = topo.channels[act.channel];
      if (act.kind == ActionKind::Send && ch.source != p)
        add(where + " sends on channel '" + ch.name + "' but is not its source", t.span);
      if (act.kind != ActionKind::Send && ch.target != p)
        add(where + " reads channel '" + ch.name + "' but is not its target", t.span);
      if (act.kind != ActionKind::TestEmpty && act.message >= topo.messages.size())
        add(where + ": undeclared message on channel '" + ch.name + "'", t.span);
      if (act.kind == ActionKind::TestEmpty && !ch.testable)
        add(where + " tests channel '" + ch.name + "' for emptiness but it is not testable",
            t.span);
    }
    if (act.kind == ActionKind::Tick && sys_.delay != DelayKind::Tick)
      add(where + ": tick action requires discrete time (delay mismatch)", t.span);
    if (act.uses_counter()) {
      if (sys_.delay != DelayKind::None)
        add(where + ": counter operation in a system with a non-empty delay domain", t.span);
      const auto &a = sys_.automata[p];
      if (act.counter >= a.counters.size())
        add(where + ": operation on undeclared counter", t.span);
    }
    if (act.kind == ActionKind::Internal && !act.label.empty() && !is_identifier(act.label))
      add(where + ": invalid internal action label '" + act.label + "'", t.span);
  }

  const System &sys_;
  std::vector<Diagnostic> out_;
};

// permutation[i] = old index placed at new position i; returns old->new map
template <class T, class Key>
std::vector<std::uint32_t> sorted_order(const std::vector<T> &v, Key key) {
  std::vector<std::uint32_t> perm(v.size());
  std::iota(perm.begin(), perm.end(), 0u);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return key(v[a]) < key(v[b]); });
  std::vector<std::uint32_t> remap(v.size());
  for (std::uint32_t i = 0; i < perm.size(); ++i)
    remap[perm[i]] = i;
  return remap;
}

template <class T> void apply_remap(std::vector<T> &v, const std::vector<std::uint32_t> &remap) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[remap[i]] = std::move(v[i]);
  v = std::move(out);
}

std::uint32_t remapped(const std::vector<std::uint32_t> &remap, std::uint32_t i) {
  return i < remap.size() ? remap[i] : i;
}

} // namespace

std::vector<Diagnostic> validate_system(const System &sys) { return Validator(sys).run(); }

UndirectedGraph underlying_graph(const Topology &topo) {
  UndirectedGraph g;
  g.vertex_count = topo.processes.size();
  for (std::size_t i = 0; i < topo.channels.size(); ++i) {
    const auto &c = topo.channels[i];
    g.edges.push_back({static_cast<ChannelId>(i), c.source, c.target});
  }
  return g;
}

void canonicalize(System &sys) {
  auto &topo = sys.topology;
  auto ident = [](const std::string &s) -> const std::string & { return s; };

  auto proc_map = sorted_order(topo.processes, ident);
  auto msg_map = sorted_order(topo.messages, ident);
  auto chan_map = sorted_order(topo.channels, [](const Channel &c) -> const std::string & {
    return c.name;
  });

  for (auto &c : topo.channels) {
    c.source = remapped(proc_map, c.source);
    c.target = remapped(proc_map, c.target);
  }
  apply_remap(topo.processes, proc_map);
  apply_remap(topo.messages, msg_map);
  apply_remap(topo.channels, chan_map);
  if (sys.automata.size() == proc_map.size())
    apply_remap(sys.automata, proc_map);

  for (auto &a : sys.automata) {
    auto loc_map = sorted_order(a.locations, ident);
    auto clock_map = sorted_order(a.clocks, ident);
    auto counter_map = sorted_order(a.counters, ident);
    apply_remap(a.locations, loc_map);
    apply_remap(a.clocks, clock_map);
    apply_remap(a.counters, counter_map);

    auto fix_set = [&](std::vector<LocationId> &v) {
      for (auto &l : v)
        l = remapped(loc_map, l);
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    fix_set(a.initial);
    fix_set(a.final_locations);

    for (auto &t : a.transitions) {
      t.from = remapped(loc_map, t.from);
      t.to = remapped(loc_map, t.to);
      if (t.action.uses_channel())
        t.action.channel = remapped(chan_map, t.action.channel);
      if (t.action.kind == ActionKind::Send || t.action.kind == ActionKind::Recv)
        t.action.message = remapped(msg_map, t.action.message);
      if (t.action.uses_counter())
        t.action.counter = remapped(counter_map, t.action.counter);
      for (auto &g : t.guard)
        g.clock = remapped(clock_map, g.clock);
      std::sort(t.guard.begin(), t.guard.end());
      t.guard.erase(std::unique(t.guard.begin(), t.guard.end()), t.guard.end());
      for (auto &x : t.resets)
        x = remapped(clock_map, x);
      std::sort(t.resets.begin(), t.resets.end());
      t.resets.erase(std::unique(t.resets.begin(), t.resets.end()), t.resets.end());
    }
    auto key = [](const Transition &t) {
      return std::tie(t.from, t.to, t.action.kind, t.action.channel, t.action.message,
                      t.action.counter, t.action.label, t.guard, t.resets);
    };
    std::stable_sort(a.transitions.begin(), a.transitions.end(),
                     [&](const Transition &x, const Transition &y) { return key(x) < key(y); });
  }
}

std::string format_action(const System &sys, ProcessId p, const Action &a) {
  const auto &topo = sys.topology;
  auto chan = [&](ChannelId c) {
    return c < topo.channels.size() ? topo.channels[c].name : "#" + std::to_string(c);
  };
  auto msg = [&](MessageId m) {
    return m < topo.messages.size() ? topo.messages[m] : "#" + std::to_string(m);
  };
  auto counter = [&](CounterId x) {
    const auto &cs = sys.automata.at(p).counters;
    return x < cs.size() ? cs[x] : "#" + std::to_string(x);
  };
  switch (a.kind) {
  case ActionKind::Send:
    return "send(" + chan(a.channel) + ", " + msg(a.message) + ")";
  case ActionKind::Recv:
    return "recv(" + chan(a.channel) + ", " + msg(a.message) + ")";
  case ActionKind::TestEmpty:
    return "empty(" + chan(a.channel) + ")";
  case ActionKind::Internal:
    return a.label.empty() ? "tau" : "internal(" + a.label + ")";
  case ActionKind::Tick:
    return "tick";
  case ActionKind::Inc:
    return "inc " + counter(a.counter);
  case ActionKind::Dec:
    return "dec " + counter(a.counter);
  case ActionKind::ZeroTest:
    return "ztest " + counter(a.counter);
  }
  return "?";
}

std::string format_transition(const System &sys, ProcessId p, const Transition &t) {
  const auto &a = sys.automata.at(p);
  std::ostringstream os;
  auto loc = [&](LocationId l) {
    return l < a.locations.size() ? a.locations[l] : "#" + std::to_string(l);
  };
  auto clock = [&](ClockId x) {
    return x < a.clocks.size() ? a.clocks[x] : "#" + std::to_string(x);
  };
  os << loc(t.from) << " -> " << loc(t.to) << " : " << format_action(sys, p, t.action);
  if (!t.guard.empty()) {
    os << " when ";
    for (std::size_t i = 0; i < t.guard.size(); ++i) {
      if (i)
        os << " && ";
      os << clock(t.guard[i].clock) << ' ' << to_string(t.guard[i].op) << ' '
         << t.guard[i].constant;
    }
  }
  if (!t.resets.empty()) {
    os << " reset {";
    for (std::size_t i = 0; i < t.resets.size(); ++i)
      os << (i ? ", " : " ") << clock(t.resets[i]);
    os << " }";
  }
  return os.str();
}

} // namespace ctp
