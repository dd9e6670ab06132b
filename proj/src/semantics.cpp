#include "ctp/semantics.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ctp/topology.hpp"

namespace ctp {

namespace {

void put_u64(std::string &out, std::uint64_t v) {
  // LEB128: short, and unambiguous inside the concatenated encoding
  do {
    unsigned char byte = v & 0x7f;
    v >>= 7;
    if (v)
      byte |= 0x80;
    out.push_back(static_cast<char>(byte));
  } while (v);
}

std::string word_to_string(const System &sys, const std::vector<MessageId> &word) {
  std::string s;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i)
      s += '.';
    s += word[i] < sys.topology.messages.size() ? sys.topology.messages[word[i]] : "?";
  }
  return s;
}

} // namespace

std::string GlobalConfig::key() const {
  std::string out;
  out.reserve(locations.size() * 2 + channels.size() * 4);
  put_u64(out, locations.size());
  for (auto l : locations)
    put_u64(out, l);
  put_u64(out, channels.size());
  for (const auto &w : channels) {
    put_u64(out, w.size());
    for (auto m : w)
      put_u64(out, m);
  }
  put_u64(out, counters.size());
  for (const auto &cs : counters) {
    put_u64(out, cs.size());
    for (auto v : cs)
      put_u64(out, v);
  }
  return out;
}

std::string GlobalConfig::full_key() const {
  std::string out = key();
  put_u64(out, ticks);
  for (auto t : local_ticks)
    put_u64(out, t);
  return out;
}

bool LocationPattern::matches(const std::vector<LocationId> &locs) const {
  for (std::size_t p = 0; p < allowed.size(); ++p) {
    if (allowed[p].empty())
      continue;
    if (p >= locs.size() ||
        std::find(allowed[p].begin(), allowed[p].end(), locs[p]) == allowed[p].end())
      return false;
  }
  return true;
}

LocationPattern final_pattern(const System &sys) {
  LocationPattern pat;
  for (const auto &a : sys.automata) {
    pat.allowed.push_back(a.final_locations);
    // a process without final locations can never be accepting
    if (a.final_locations.empty())
      pat.allowed.back().push_back(static_cast<LocationId>(a.locations.size()));
  }
  return pat;
}

LocationPattern parse_target(const System &sys, std::string_view text) {
  LocationPattern pat;
  pat.allowed.resize(sys.process_count());
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                 : comma - pos);
    pos = comma == std::string_view::npos ? text.size() + 1 : comma + 1;
    auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
      return s;
    };
    item = trim(item);
    if (item.empty())
      continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw Error("target item '" + std::string(item) + "' is not of the form process=location");
    auto pname = trim(item.substr(0, eq));
    auto lname = trim(item.substr(eq + 1));
    auto p = sys.topology.find_process(pname);
    if (!p)
      throw Error("unknown process '" + std::string(pname) + "' in target");
    auto l = sys.automata[*p].find_location(lname);
    if (!l)
      throw Error("unknown location '" + std::string(lname) + "' of process '" +
                  std::string(pname) + "' in target");
    pat.allowed[*p].push_back(*l);
  }
  return pat;
}

DiscreteSemantics::DiscreteSemantics(const System &sys) : sys_(sys) {
  if (sys.delay == DelayKind::Dense)
    throw Error("discrete semantics requires a tick or counter system (flavor mismatch)");
  out_.resize(sys.automata.size());
  for (std::size_t p = 0; p < sys.automata.size(); ++p) {
    const auto &a = sys.automata[p];
    out_[p].resize(a.locations.size());
    for (std::uint32_t i = 0; i < a.transitions.size(); ++i)
      if (a.transitions[i].from < a.locations.size())
        out_[p][a.transitions[i].from].push_back(i);
  }
}

std::vector<GlobalConfig> DiscreteSemantics::initial_configs() const {
  const std::size_t n = sys_.process_count();
  GlobalConfig base;
  base.locations.assign(n, 0);
  base.channels.resize(sys_.topology.channels.size());
  base.counters.resize(n);
  for (std::size_t p = 0; p < n; ++p)
    base.counters[p].assign(sys_.automata[p].counters.size(), 0);
  base.local_ticks.assign(n, 0);

  std::vector<GlobalConfig> out;
  for (const auto &a : sys_.automata)
    if (a.initial.empty())
      return out;
  // odometer over the initial-location product
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    GlobalConfig c = base;
    for (std::size_t p = 0; p < n; ++p)
      c.locations[p] = sys_.automata[p].initial[idx[p]];
    out.push_back(std::move(c));
    std::size_t p = 0;
    while (p < n && ++idx[p] == sys_.automata[p].initial.size())
      idx[p++] = 0;
    if (p == n)
      break;
  }
  return out;
}

void DiscreteSemantics::check_config(const GlobalConfig &cfg) const {
  const std::size_t n = sys_.process_count();
  if (cfg.locations.size() != n || cfg.channels.size() != sys_.topology.channels.size() ||
      cfg.counters.size() != n || cfg.local_ticks.size() != n)
    throw Error("malformed configuration: wrong dimensions");
  for (std::size_t p = 0; p < n; ++p) {
    if (cfg.locations[p] >= sys_.automata[p].locations.size())
      throw Error("malformed configuration: location out of range");
    if (cfg.counters[p].size() != sys_.automata[p].counters.size())
      throw Error("malformed configuration: counter vector size");
  }
  for (const auto &w : cfg.channels)
    for (auto m : w)
      if (m >= sys_.topology.messages.size())
        throw Error("malformed configuration: unknown message in channel");
}

void DiscreteSemantics::async_moves(const GlobalConfig &cfg, std::vector<Successor> &out) const {
  for (ProcessId p = 0; p < sys_.process_count(); ++p) {
    const auto &a = sys_.automata[p];
    for (auto ti : out_[p][cfg.locations[p]]) {
      const auto &t = a.transitions[ti];
      const auto &act = t.action;
      if (act.kind == ActionKind::Tick)
        continue;
      GlobalConfig next = cfg;
      switch (act.kind) {
      case ActionKind::Send:
        next.channels[act.channel].push_back(act.message);
        break;
      case ActionKind::Recv: {
        auto &w = next.channels[act.channel];
        if (w.empty() || w.front() != act.message)
          continue;
        w.erase(w.begin());
        break;
      }
      case ActionKind::TestEmpty:
        if (!cfg.channels[act.channel].empty())
          continue;
        break;
      case ActionKind::Inc:
        ++next.counters[p][act.counter];
        break;
      case ActionKind::Dec:
        if (next.counters[p][act.counter] == 0)
          continue;
        --next.counters[p][act.counter];
        break;
      case ActionKind::ZeroTest:
        if (cfg.counters[p][act.counter] != 0)
          continue;
        break;
      default:
        break;
      }
      next.locations[p] = t.to;
      out.push_back({Step{{p}, {ti}, false}, std::move(next)});
    }
  }
}

void DiscreteSemantics::tick_moves(const GlobalConfig &cfg, std::vector<Successor> &out) const {
  const std::size_t n = sys_.process_count();
  if (n == 0)
    return;
  std::vector<std::vector<std::uint32_t>> choices(n);
  for (ProcessId p = 0; p < n; ++p) {
    for (auto ti : out_[p][cfg.locations[p]])
      if (sys_.automata[p].transitions[ti].action.kind == ActionKind::Tick)
        choices[p].push_back(ti);
    if (choices[p].empty())
      return;  // one process blocks global time
  }
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    Step step;
    step.tick = true;
    GlobalConfig next = cfg;
    for (ProcessId p = 0; p < n; ++p) {
      auto ti = choices[p][idx[p]];
      step.processes.push_back(p);
      step.transitions.push_back(ti);
      next.locations[p] = sys_.automata[p].transitions[ti].to;
      ++next.local_ticks[p];
    }
    ++next.ticks;
    out.push_back({std::move(step), std::move(next)});
    std::size_t p = n;
    while (p > 0) {
      --p;
      if (++idx[p] < choices[p].size())
        break;
      idx[p] = 0;
      if (p == 0)
        return;
    }
  }
}

std::vector<Successor> DiscreteSemantics::successors(const GlobalConfig &cfg) const {
  check_config(cfg);
  std::vector<Successor> out;
  async_moves(cfg, out);
  tick_moves(cfg, out);
  return out;
}

bool DiscreteSemantics::accepting(const GlobalConfig &cfg, const TargetSet &targets) const {
  bool hit = std::any_of(targets.begin(), targets.end(),
                         [&](const LocationPattern &t) { return t.matches(cfg.locations); });
  if (!hit)
    return false;
  if (sys_.acceptance.empty_channels)
    for (const auto &w : cfg.channels)
      if (!w.empty())
        return false;
  if (sys_.acceptance.zero_counters)
    for (const auto &cs : cfg.counters)
      for (auto v : cs)
        if (v != 0)
          return false;
  return true;
}

std::string DiscreteSemantics::format_step(const Step &step) const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < step.processes.size(); ++i)
    os << (i ? "," : "") << sys_.topology.processes.at(step.processes[i]);
  os << "] ";
  if (step.tick) {
    os << "tick";
  } else if (!step.processes.empty()) {
    auto p = step.processes.front();
    os << format_action(sys_, p, sys_.automata.at(p).transitions.at(step.transitions.front()).action);
  }
  return os.str();
}

std::vector<Successor> successors(const System &sys, const GlobalConfig &cfg) {
  return DiscreteSemantics(sys).successors(cfg);
}

std::string_view to_string(ReachStatus s) {
  switch (s) {
  case ReachStatus::Reachable:
    return "Reachable";
  case ReachStatus::Unreachable:
    return "Unreachable";
  case ReachStatus::BoundExhausted:
    return "BoundExhausted";
  }
  return "?";
}

namespace {

void check_targets(const System &sys, const TargetSet &targets) {
  for (const auto &t : targets) {
    if (t.allowed.size() > sys.process_count())
      throw Error("target names more processes than the system has");
    for (std::size_t p = 0; p < t.allowed.size(); ++p)
      for (auto l : t.allowed[p])
        if (l > sys.automata[p].locations.size())
          throw Error("target names an unknown location of process '" +
                      sys.topology.processes[p] + "'");
  }
}

struct Node {
  GlobalConfig config;
  std::size_t parent;
  Step step;
  std::size_t depth;
};

constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

Trace build_trace(const std::vector<Node> &nodes, std::size_t at) {
  std::vector<std::size_t> chain;
  for (std::size_t i = at; i != kNoParent; i = nodes[i].parent)
    chain.push_back(i);
  std::reverse(chain.begin(), chain.end());
  Trace t;
  t.initial = nodes[chain.front()].config;
  for (std::size_t k = 1; k < chain.size(); ++k)
    t.steps.push_back({nodes[chain[k]].step, nodes[chain[k]].config});
  return t;
}

bool exceeds(const GlobalConfig &c, const std::optional<std::size_t> &bound) {
  if (!bound)
    return false;
  return std::any_of(c.channels.begin(), c.channels.end(),
                     [&](const auto &w) { return w.size() > *bound; });
}

} // namespace

ReachResult reach_explicit(const System &sys, const TargetSet &targets, const ReachOptions &opts) {
  check_targets(sys, targets);
  DiscreteSemantics sem(sys);
  ReachResult res;
  auto &stats = res.stats;

  std::vector<Node> nodes;
  std::unordered_set<std::string> seen;
  std::size_t stored_messages = 0;
  for (auto &c : sem.initial_configs()) {
    if (!seen.insert(c.key()).second)
      continue;
    nodes.push_back({std::move(c), kNoParent, {}, 0});
    if (sem.accepting(nodes.back().config, targets)) {
      res.status = ReachStatus::Reachable;
      res.witness = build_trace(nodes, nodes.size() - 1);
      stats.states = nodes.size();
      return res;
    }
  }

  for (std::size_t head = 0; head < nodes.size(); ++head) {
    const std::size_t depth = nodes[head].depth;
    stats.max_depth = std::max(stats.max_depth, depth);
    auto succs = sem.successors(nodes[head].config);
    if (opts.depth && depth >= *opts.depth) {
      for (const auto &s : succs)
        if (!exceeds(s.config, opts.channel_bound) && !seen.count(s.config.key()))
          stats.depth_pruned = true;
      continue;
    }
    for (auto &s : succs) {
      ++stats.transitions;
      if (exceeds(s.config, opts.channel_bound)) {
        stats.bound_pruned = true;
        continue;
      }
      auto k = s.config.key();
      if (seen.count(k))
        continue;
      if (nodes.size() >= opts.state_budget || stored_messages >= opts.message_budget) {
        stats.budget_hit = true;
        break;
      }
      for (const auto &w : s.config.channels)
        stored_messages += w.size();
      seen.insert(std::move(k));
      nodes.push_back({std::move(s.config), head, std::move(s.step), depth + 1});
      if (sem.accepting(nodes.back().config, targets)) {
        res.status = ReachStatus::Reachable;
        res.witness = build_trace(nodes, nodes.size() - 1);
        stats.states = nodes.size();
        return res;
      }
    }
    if (stats.budget_hit)
      break;
  }
  stats.states = nodes.size();
  res.status = stats.pruned() ? ReachStatus::BoundExhausted : ReachStatus::Unreachable;
  return res;
}

ReplayResult replay(const System &sys, const Trace &trace) {
  ReplayResult r;
  std::optional<DiscreteSemantics> sem;
  try {
    sem.emplace(sys);
    sem->check_config(trace.initial);
  } catch (const Error &e) {
    return {false, std::nullopt, e.what()};
  }
  const auto &init = trace.initial;
  for (ProcessId p = 0; p < sys.process_count(); ++p) {
    if (!sys.automata[p].is_initial(init.locations[p]))
      return {false, std::nullopt, "process '" + sys.topology.processes[p] + "' not initial"};
    for (auto v : init.counters[p])
      if (v != 0)
        return {false, std::nullopt, "initial counters must be zero"};
    if (init.local_ticks[p] != 0)
      return {false, std::nullopt, "initial tick count must be zero"};
  }
  if (init.ticks != 0)
    return {false, std::nullopt, "initial tick count must be zero"};
  for (const auto &w : init.channels)
    if (!w.empty())
      return {false, std::nullopt, "initial channels must be empty"};

  const GlobalConfig *cur = &trace.initial;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto &st = trace.steps[i];
    std::vector<Successor> succs;
    try {
      succs = sem->successors(*cur);
    } catch (const Error &e) {
      return {false, i, e.what()};
    }
    bool step_enabled = false;
    bool matched = false;
    for (const auto &s : succs) {
      if (s.step == st.step) {
        step_enabled = true;
        if (s.config == st.config) {
          matched = true;
          break;
        }
      }
    }
    if (!matched)
      return {false, i,
              step_enabled ? "resulting configuration does not match the step"
                           : "step " + std::to_string(i + 1) + " is not enabled"};
    cur = &st.config;
  }
  return r;
}

Trace simulate(const System &sys, std::size_t steps, std::uint64_t seed,
               const SimulationPolicy &policy) {
  DiscreteSemantics sem(sys);
  auto inits = sem.initial_configs();
  Trace t;
  if (inits.empty()) {
    t.deadlocked = true;
    return t;
  }
  std::mt19937_64 rng(seed);
  t.initial = inits[rng() % inits.size()];
  const GlobalConfig *cur = &t.initial;
  for (std::size_t i = 0; i < steps; ++i) {
    auto succs = sem.successors(*cur);
    if (succs.empty()) {
      t.deadlocked = true;
      break;
    }
    std::size_t pick = 0;
    if (const auto *script = std::get_if<ScriptPolicy>(&policy)) {
      if (i >= script->choices.size() || script->choices[i] >= succs.size())
        break;
      pick = script->choices[i];
    } else {
      pick = static_cast<std::size_t>(rng() % succs.size());
    }
    t.steps.push_back({std::move(succs[pick].step), std::move(succs[pick].config)});
    cur = &t.steps.back().config;
  }
  return t;
}

std::vector<std::string> reachable_within(const System &sys, std::size_t depth,
                                          Scheduler scheduler) {
  DiscreteSemantics sem(sys);
  std::vector<std::size_t> position(sys.process_count(), 0);
  if (scheduler == Scheduler::SlotNormalized) {
    auto order = sender_first_order(sys.topology);
    for (std::size_t i = 0; i < order.size(); ++i)
      position[order[i]] = i;
  }

  struct Item {
    GlobalConfig config;
    std::size_t slot;
  };
  std::set<std::string> configs;
  std::unordered_set<std::string> visited;
  std::vector<Item> frontier;
  auto visit = [&](GlobalConfig c, std::size_t slot, std::vector<Item> &into) {
    std::string k = c.full_key();
    std::string vk = k;
    put_u64(vk, slot);
    if (!visited.insert(vk).second)
      return;
    configs.insert(std::move(k));
    into.push_back({std::move(c), slot});
  };
  for (auto &c : sem.initial_configs())
    visit(std::move(c), 0, frontier);

  for (std::size_t d = 0; d < depth && !frontier.empty(); ++d) {
    std::vector<Item> next;
    for (const auto &item : frontier) {
      for (auto &s : sem.successors(item.config)) {
        std::size_t slot = 0;
        if (!s.step.tick) {
          std::size_t pos = position[s.step.processes.front()];
          if (scheduler == Scheduler::SlotNormalized && pos < item.slot)
            continue;
          slot = scheduler == Scheduler::SlotNormalized ? pos : 0;
        }
        visit(std::move(s.config), slot, next);
      }
    }
    frontier = std::move(next);
  }
  return {configs.begin(), configs.end()};
}

std::string format_trace(const System &sys, const Trace &trace) {
  DiscreteSemantics sem(sys);
  std::ostringstream os;
  auto channels = [&](const GlobalConfig &c) {
    std::string s;
    for (std::size_t i = 0; i < c.channels.size(); ++i)
      s += (i ? " " : "") + sys.topology.channels[i].name + "=" + word_to_string(sys, c.channels[i]);
    return s;
  };
  os << "init: [";
  for (ProcessId p = 0; p < sys.process_count(); ++p)
    os << (p ? "," : "") << sys.topology.processes[p] << "="
       << sys.automata[p].locations.at(trace.initial.locations[p]);
  os << "] ; channels: " << channels(trace.initial) << " ; ticks=" << trace.initial.ticks << "\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto &st = trace.steps[i];
    os << "step " << i + 1 << ": " << sem.format_step(st.step) << " ; channels: "
       << channels(st.config) << " ; ticks=" << st.config.ticks << "\n";
  }
  if (trace.deadlocked)
    os << "deadlock\n";
  return os.str();
}

std::string trace_to_json(const System &sys, const Trace &trace) {
  using nlohmann::json;
  DiscreteSemantics sem(sys);
  auto config = [&](const GlobalConfig &c) {
    json j;
    json locs = json::object();
    for (ProcessId p = 0; p < sys.process_count(); ++p)
      locs[sys.topology.processes[p]] = sys.automata[p].locations.at(c.locations[p]);
    j["locations"] = locs;
    json chans = json::object();
    for (std::size_t i = 0; i < c.channels.size(); ++i) {
      json w = json::array();
      for (auto m : c.channels[i])
        w.push_back(sys.topology.messages.at(m));
      chans[sys.topology.channels[i].name] = w;
    }
    j["channels"] = chans;
    json ctrs = json::object();
    for (ProcessId p = 0; p < sys.process_count(); ++p)
      for (std::size_t x = 0; x < c.counters[p].size(); ++x)
        ctrs[sys.topology.processes[p] + "." + sys.automata[p].counters[x]] = c.counters[p][x];
    if (!ctrs.empty())
      j["counters"] = ctrs;
    j["ticks"] = c.ticks;
    return j;
  };
  json out;
  out["system"] = sys.name;
  out["initial"] = config(trace.initial);
  json steps = json::array();
  for (const auto &st : trace.steps) {
    json s;
    s["tick"] = st.step.tick;
    json procs = json::array();
    for (std::size_t i = 0; i < st.step.processes.size(); ++i) {
      auto p = st.step.processes[i];
      procs.push_back({{"process", sys.topology.processes[p]},
                       {"transition",
                        format_transition(sys, p, sys.automata[p].transitions.at(st.step.transitions[i]))}});
    }
    s["moves"] = procs;
    s["config"] = config(st.config);
    steps.push_back(s);
  }
  out["steps"] = steps;
  out["deadlocked"] = trace.deadlocked;
  return out.dump(2);
}

} // namespace ctp
