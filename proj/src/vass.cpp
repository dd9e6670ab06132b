#include "ctp/vass.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ctp {

std::vector<std::int64_t> Vass::start_marking() const {
  if (initial_marking.empty())
    return std::vector<std::int64_t>(counters.size(), 0);
  return initial_marking;
}

namespace {

class ExplicitControl final : public VassControl {
public:
  ExplicitControl(std::size_t dim, std::vector<std::string> names, std::vector<std::uint32_t> initial,
                  std::vector<std::uint32_t> finals, std::vector<ExplicitTransition> ts)
      : dim_(dim), names_(std::move(names)), initial_(std::move(initial)),
        finals_(std::move(finals)), ts_(std::move(ts)) {
    for (const auto &t : ts_) {
      if (t.from >= names_.size() || t.to >= names_.size())
        throw Error("explicit VASS transition refers to an unknown state");
      if (t.delta.size() != dim_)
        throw Error("explicit VASS transition has a delta of the wrong dimension");
    }
  }

  std::vector<ControlState> initial_states() const override {
    std::vector<ControlState> out;
    for (auto s : initial_)
      out.push_back({s});
    return out;
  }

  std::vector<VassTransition> transitions(const ControlState &q) const override {
    std::vector<VassTransition> out;
    for (const auto &t : ts_)
      if (t.from == q.at(0))
        out.push_back({t.delta, {t.to}, t.label, {}});
    return out;
  }

  bool is_final(const ControlState &q) const override {
    return std::find(finals_.begin(), finals_.end(), q.at(0)) != finals_.end();
  }

  std::string describe(const ControlState &q) const override { return names_.at(q.at(0)); }

private:
  std::size_t dim_;
  std::vector<std::string> names_;
  std::vector<std::uint32_t> initial_;
  std::vector<std::uint32_t> finals_;
  std::vector<ExplicitTransition> ts_;
};

// The control graph reachable from the initial states, counters ignored.
struct ControlGraph {
  struct Edge {
    std::uint32_t from;
    std::uint32_t to;
    VassTransition transition;
  };
  std::vector<ControlState> states;
  std::map<ControlState, std::uint32_t> index;
  std::vector<Edge> edges;
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::vector<std::uint32_t>> in;
  std::vector<std::uint32_t> initial;
  std::vector<bool> final_state;
  bool complete = true;
};

ControlGraph materialize(const Vass &v, std::size_t budget) {
  if (!v.control)
    throw Error("VASS has no control");
  ControlGraph g;
  auto intern = [&](const ControlState &q) -> std::optional<std::uint32_t> {
    auto it = g.index.find(q);
    if (it != g.index.end())
      return it->second;
    if (g.states.size() >= budget) {
      g.complete = false;
      return std::nullopt;
    }
    auto id = static_cast<std::uint32_t>(g.states.size());
    g.index.emplace(q, id);
    g.states.push_back(q);
    g.out.emplace_back();
    g.in.emplace_back();
    g.final_state.push_back(v.control->is_final(q));
    return id;
  };
  for (const auto &q : v.control->initial_states())
    if (auto id = intern(q))
      if (std::find(g.initial.begin(), g.initial.end(), *id) == g.initial.end())
        g.initial.push_back(*id);
  for (std::uint32_t s = 0; s < g.states.size(); ++s) {
    for (auto &t : v.control->transitions(g.states[s])) {
      if (t.delta.size() != v.dimension())
        throw Error("VASS transition delta has the wrong dimension");
      auto to = intern(t.target);
      if (!to)
        continue;
      auto e = static_cast<std::uint32_t>(g.edges.size());
      g.edges.push_back({s, *to, std::move(t)});
      g.out[s].push_back(e);
      g.in[*to].push_back(e);
    }
  }
  return g;
}

std::string marking_key(std::uint32_t state, const std::vector<std::int64_t> &m) {
  std::string k(reinterpret_cast<const char *>(&state), sizeof state);
  k.append(reinterpret_cast<const char *>(m.data()), m.size() * sizeof(std::int64_t));
  return k;
}

struct KmRun {
  std::vector<KmNode> nodes;
  bool complete = true;
};

// Karp–Miller over the control graph. `backward` walks edges in reverse with
// negated deltas.
KmRun run_km(const ControlGraph &g, bool backward, const std::vector<std::uint32_t> &starts,
             const OmegaMarking &start, std::size_t budget) {
  KmRun run;
  std::unordered_set<std::string> seen;
  std::deque<std::size_t> work;
  for (auto s : starts) {
    run.nodes.push_back({s, start, std::nullopt, {}, false});
    work.push_back(run.nodes.size() - 1);
  }
  std::vector<std::int64_t> delta;
  while (!work.empty()) {
    std::size_t n = work.front();
    work.pop_front();
    if (!seen.insert(marking_key(run.nodes[n].state, run.nodes[n].marking.values)).second) {
      run.nodes[n].duplicate = true;
      continue;
    }
    const auto state = run.nodes[n].state;
    for (auto e : backward ? g.in[state] : g.out[state]) {
      const auto &edge = g.edges[e];
      delta = edge.transition.delta;
      if (backward)
        for (auto &d : delta)
          d = -d;
      auto next = run.nodes[n].marking.fire(delta);
      if (!next)
        continue;
      const std::uint32_t to = backward ? edge.from : edge.to;
      // accelerate against every ancestor with the same state that is covered
      for (std::optional<std::size_t> a = n; a; a = run.nodes[*a].parent) {
        const auto &anc = run.nodes[*a];
        if (anc.state != to || !anc.marking.covered_by(*next) || anc.marking == *next)
          continue;
        for (std::size_t i = 0; i < next->values.size(); ++i)
          if (anc.marking.values[i] < next->values[i])
            next->values[i] = kOmega;
      }
      if (run.nodes.size() >= budget) {
        run.complete = false;
        return run;
      }
      run.nodes.push_back({to, std::move(*next), n, edge.transition.label, false});
      work.push_back(run.nodes.size() - 1);
    }
  }
  return run;
}

struct Boundedness {
  std::vector<bool> bounded;
  std::optional<std::vector<std::int64_t>> bound;
};

Boundedness boundedness(const std::vector<KmNode> &nodes, std::size_t dim) {
  Boundedness b;
  b.bounded.assign(dim, true);
  std::vector<std::int64_t> max(dim, 0);
  for (const auto &n : nodes)
    for (std::size_t i = 0; i < dim; ++i) {
      if (n.marking.is_omega(i))
        b.bounded[i] = false;
      else
        max[i] = std::max(max[i], n.marking.values[i]);
    }
  if (std::all_of(b.bounded.begin(), b.bounded.end(), [](bool x) { return x; }))
    b.bound = max;
  return b;
}

std::string format_vector(const std::vector<std::int64_t> &v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      s += ",";
    s += v[i] == kOmega ? "w" : std::to_string(v[i]);
  }
  return s + ")";
}

struct Search {
  std::optional<std::vector<std::uint32_t>> edges;  // accepting path, in walk order
  std::uint32_t start_state = 0;
  bool pruned = false;
  bool budget_hit = false;
  std::size_t states = 0;
};

// Breadth-first search over (state, marking). `cap` limits every counter;
// `keep` can discard configurations proven useless (this is not pruning).
Search bfs(const ControlGraph &g, bool backward, const std::vector<std::uint32_t> &starts,
           const std::vector<std::int64_t> &start,
           const std::function<bool(std::uint32_t, const std::vector<std::int64_t> &)> &accept,
           std::optional<std::int64_t> cap,
           const std::function<bool(std::uint32_t, const std::vector<std::int64_t> &)> &keep,
           std::size_t budget) {
  struct Node {
    std::uint32_t state;
    std::vector<std::int64_t> marking;
    std::size_t parent;
    std::uint32_t edge;
  };
  constexpr std::size_t kRoot = static_cast<std::size_t>(-1);
  Search out;
  std::vector<Node> nodes;
  std::unordered_set<std::string> seen;
  auto finish = [&](std::size_t at) {
    std::vector<std::uint32_t> path;
    for (std::size_t i = at; nodes[i].parent != kRoot; i = nodes[i].parent)
      path.push_back(nodes[i].edge);
    std::reverse(path.begin(), path.end());
    std::size_t root = at;
    while (nodes[root].parent != kRoot)
      root = nodes[root].parent;
    out.start_state = nodes[root].state;
    out.edges = std::move(path);
    out.states = nodes.size();
  };
  for (auto s : starts) {
    if (keep && !keep(s, start))
      continue;
    if (!seen.insert(marking_key(s, start)).second)
      continue;
    nodes.push_back({s, start, kRoot, 0});
    if (accept(s, start)) {
      finish(nodes.size() - 1);
      return out;
    }
  }
  std::vector<std::int64_t> next;
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    const auto state = nodes[head].state;
    for (auto e : backward ? g.in[state] : g.out[state]) {
      const auto &edge = g.edges[e];
      next = nodes[head].marking;
      bool ok = true;
      bool over = false;
      for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] += backward ? -edge.transition.delta[i] : edge.transition.delta[i];
        if (next[i] < 0)
          ok = false;
        else if (cap && next[i] > *cap)
          over = true;
      }
      if (!ok)
        continue;
      const std::uint32_t to = backward ? edge.from : edge.to;
      if (keep && !keep(to, next))
        continue;
      if (over) {
        out.pruned = true;
        continue;
      }
      auto k = marking_key(to, next);
      if (seen.count(k))
        continue;
      if (nodes.size() >= budget) {
        out.budget_hit = true;
        out.states = nodes.size();
        return out;
      }
      seen.insert(std::move(k));
      nodes.push_back({to, next, head, e});
      if (accept(to, next)) {
        finish(nodes.size() - 1);
        return out;
      }
    }
  }
  out.states = nodes.size();
  return out;
}

VassPath build_path(const ControlGraph &g, const Vass &v, std::uint32_t start,
                    const std::vector<std::uint32_t> &edges) {
  VassPath p;
  p.initial = g.states[start];
  p.initial_marking = v.start_marking();
  auto m = p.initial_marking;
  for (auto e : edges) {
    const auto &edge = g.edges[e];
    for (std::size_t i = 0; i < m.size(); ++i)
      m[i] += edge.transition.delta[i];
    p.steps.push_back({edge.transition, g.states[edge.to], m});
  }
  return p;
}

bool accepting_marking(const Vass &v, const std::vector<std::int64_t> &m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (v.zero_checked[i] && m[i] != 0)
      return false;
  return true;
}

} // namespace

Vass make_explicit_vass(std::vector<std::string> counters, std::vector<std::string> states,
                        std::vector<std::uint32_t> initial, std::vector<std::uint32_t> final_states,
                        std::vector<ExplicitTransition> transitions) {
  Vass v;
  v.zero_checked.assign(counters.size(), true);
  v.control = std::make_shared<ExplicitControl>(counters.size(), std::move(states), std::move(initial),
                                                std::move(final_states), std::move(transitions));
  v.counters = std::move(counters);
  return v;
}

bool OmegaMarking::has_omega() const {
  return std::any_of(values.begin(), values.end(), [](auto x) { return x == kOmega; });
}

bool OmegaMarking::covered_by(const OmegaMarking &other) const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (other.values[i] != kOmega && (values[i] == kOmega || values[i] > other.values[i]))
      return false;
  return true;
}

std::optional<OmegaMarking> OmegaMarking::fire(const std::vector<std::int64_t> &delta) const {
  OmegaMarking out = *this;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == kOmega)
      continue;
    out.values[i] = values[i] + delta[i];
    if (out.values[i] < 0)
      return std::nullopt;
  }
  return out;
}

std::string OmegaMarking::format() const { return format_vector(values); }

KarpMillerResult karp_miller(const Vass &v, const KmOptions &opts) {
  auto g = materialize(v, opts.control_budget);
  KarpMillerResult res;
  res.states = g.states;
  auto run = run_km(g, false, g.initial, OmegaMarking{v.start_marking()}, opts.node_budget);
  res.nodes = std::move(run.nodes);
  res.complete = run.complete && g.complete;
  auto b = boundedness(res.nodes, v.dimension());
  res.bounded = b.bounded;
  if (res.complete)
    res.bound = b.bound;
  return res;
}

std::string format_tree(const Vass &v, const KarpMillerResult &km) {
  std::vector<std::size_t> depth(km.nodes.size(), 0);
  std::vector<std::vector<std::size_t>> children(km.nodes.size());
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < km.nodes.size(); ++i) {
    if (km.nodes[i].parent)
      children[*km.nodes[i].parent].push_back(i);
    else
      roots.push_back(i);
  }
  std::ostringstream os;
  std::function<void(std::size_t, std::size_t)> emit = [&](std::size_t n, std::size_t d) {
    const auto &node = km.nodes[n];
    os << std::string(2 * d, ' ');
    if (!node.label.empty())
      os << "--" << node.label << "--> ";
    os << v.control->describe(km.states[node.state]) << ' ' << node.marking.format();
    if (node.duplicate)
      os << " (seen)";
    os << '\n';
    for (auto c : children[n])
      emit(c, d + 1);
  };
  for (auto r : roots)
    emit(r, 0);
  if (!km.complete)
    os << "(budget exceeded: tree incomplete)\n";
  return os.str();
}

std::string format_boundedness(const Vass &v, const KarpMillerResult &km) {
  std::ostringstream os;
  if (!km.complete) {
    os << "budget exceeded: boundedness unknown\n";
    return os.str();
  }
  std::vector<std::int64_t> max(v.dimension(), 0);
  for (const auto &n : km.nodes)
    for (std::size_t i = 0; i < max.size(); ++i)
      if (!n.marking.is_omega(i))
        max[i] = std::max(max[i], n.marking.values[i]);
  for (std::size_t i = 0; i < v.dimension(); ++i) {
    os << v.counters[i] << ": ";
    if (km.bounded[i])
      os << "bounded by " << max[i] << '\n';
    else
      os << "unbounded\n";
  }
  return os.str();
}

std::string_view to_string(VassVerdict v) {
  switch (v) {
  case VassVerdict::Accepting:
    return "Accepting";
  case VassVerdict::Rejecting:
    return "Rejecting";
  case VassVerdict::Unknown:
    return "Unknown";
  }
  return "?";
}

VassReachResult vass_reach(const Vass &v, const VassReachOptions &opts) {
  VassReachResult res;
  const std::size_t dim = v.dimension();
  if (v.zero_checked.size() != dim)
    throw Error("VASS zero-check mask has the wrong dimension");
  auto g = materialize(v, opts.state_budget);
  res.stats.control_states = g.states.size();
  if (!g.complete) {
    res.certificate = "control state budget exceeded";
    return res;
  }
  const auto start = v.start_marking();

  auto accept = [&](std::uint32_t s, const std::vector<std::int64_t> &m) {
    return g.final_state[s] && accepting_marking(v, m);
  };
  auto found = [&](const Search &s) {
    res.verdict = VassVerdict::Accepting;
    res.path = build_path(g, v, s.start_state, *s.edges);
    return res;
  };

  // control states that can reach a final one, counters ignored
  std::vector<bool> useful(g.states.size(), false);
  std::deque<std::uint32_t> queue;
  std::vector<std::uint32_t> finals;
  for (std::uint32_t s = 0; s < g.states.size(); ++s)
    if (g.final_state[s]) {
      useful[s] = true;
      queue.push_back(s);
      finals.push_back(s);
    }
  while (!queue.empty()) {
    auto s = queue.front();
    queue.pop_front();
    for (auto e : g.in[s])
      if (!useful[g.edges[e].from]) {
        useful[g.edges[e].from] = true;
        queue.push_back(g.edges[e].from);
      }
  }
  if (std::none_of(g.initial.begin(), g.initial.end(), [&](auto s) { return useful[s]; })) {
    res.verdict = VassVerdict::Rejecting;
    res.certificate = "no final control state is reachable";
    return res;
  }

  // Backward coverability from the accepting markings: a configuration can
  // only reach acceptance if some backward label covers it.
  OmegaMarking target;
  bool target_finite = true;
  for (std::size_t i = 0; i < dim; ++i) {
    target.values.push_back(v.zero_checked[i] ? 0 : kOmega);
    target_finite = target_finite && v.zero_checked[i];
  }
  auto back = run_km(g, true, finals, target, opts.node_budget);
  res.stats.backward_tree_nodes = back.nodes.size();
  std::vector<std::vector<const OmegaMarking *>> back_labels(g.states.size());
  if (back.complete)
    for (const auto &n : back.nodes)
      back_labels[n.state].push_back(&n.marking);
  auto can_accept = [&](std::uint32_t s, const std::vector<std::int64_t> &m) {
    if (!useful[s])
      return false;
    if (!back.complete)
      return true;
    OmegaMarking om{m};
    return std::any_of(back_labels[s].begin(), back_labels[s].end(),
                       [&](const OmegaMarking *l) { return om.covered_by(*l); });
  };

  if (opts.bounded) {
    auto s = bfs(g, false, g.initial, start, accept, opts.bounded, can_accept, opts.state_budget);
    res.stats.states = s.states;
    res.stats.cap = *opts.bounded;
    if (s.edges)
      return found(s);
    if (!s.pruned && !s.budget_hit) {
      res.verdict = VassVerdict::Rejecting;
      res.certificate = "exhaustive search, counters never exceeded " + std::to_string(*opts.bounded);
    } else {
      res.certificate = s.budget_hit ? "state budget exceeded" : "bounded search inconclusive";
    }
    return res;
  }

  if (back.complete) {
    bool initial_covered = std::any_of(g.initial.begin(), g.initial.end(),
                                       [&](auto s) { return can_accept(s, start); });
    if (!initial_covered) {
      res.verdict = VassVerdict::Rejecting;
      res.certificate = "initial marking cannot reach an accepting one (backward coverability)";
      return res;
    }
  }

  auto fwd = run_km(g, false, g.initial, OmegaMarking{start}, opts.node_budget);
  res.stats.tree_nodes = fwd.nodes.size();
  if (fwd.complete) {
    bool final_coverable = std::any_of(fwd.nodes.begin(), fwd.nodes.end(), [&](const KmNode &n) {
      return g.final_state[n.state];
    });
    if (!final_coverable) {
      res.verdict = VassVerdict::Rejecting;
      res.certificate = "final control states uncoverable (Karp-Miller)";
      return res;
    }
    auto b = boundedness(fwd.nodes, dim);
    if (b.bound) {
      auto s = bfs(g, false, g.initial, start, accept, std::nullopt, can_accept, opts.state_budget);
      res.stats.states = s.states;
      if (s.edges)
        return found(s);
      if (!s.budget_hit) {
        res.verdict = VassVerdict::Rejecting;
        res.certificate = "bounded by " + format_vector(*b.bound) + ", exhaustive";
        return res;
      }
    }
  }

  if (back.complete && target_finite && boundedness(back.nodes, dim).bound.has_value()) {
    // finitely many configurations can reach acceptance: search them all
    auto is_start = [&](std::uint32_t s, const std::vector<std::int64_t> &m) {
      return m == start && std::find(g.initial.begin(), g.initial.end(), s) != g.initial.end();
    };
    std::vector<std::int64_t> zero(dim, 0);
    auto s = bfs(g, true, finals, zero, is_start, std::nullopt, nullptr, opts.state_budget);
    res.stats.states = s.states;
    if (s.edges) {
      // walk order is backward from a final state: reverse it
      std::vector<std::uint32_t> edges(s.edges->rbegin(), s.edges->rend());
      std::uint32_t from = edges.empty() ? s.start_state : g.edges[edges.front()].from;
      res.verdict = VassVerdict::Accepting;
      res.path = build_path(g, v, from, edges);
      return res;
    }
    if (!s.budget_hit) {
      res.verdict = VassVerdict::Rejecting;
      res.certificate = "configurations reaching acceptance are bounded, exhaustive backward search";
      return res;
    }
  }

  for (std::int64_t cap = 1; cap <= opts.max_cap; cap *= 2) {
    auto s = bfs(g, false, g.initial, start, accept, cap, can_accept, opts.state_budget);
    res.stats.states = s.states;
    res.stats.cap = cap;
    if (s.edges)
      return found(s);
    if (s.budget_hit)
      break;
    if (!s.pruned) {
      res.verdict = VassVerdict::Rejecting;
      res.certificate = "exhaustive search, counters never exceeded " + std::to_string(cap);
      return res;
    }
  }
  res.certificate = "unbounded counters; bounded search up to " + std::to_string(res.stats.cap) +
                    " found no accepting path";
  return res;
}

bool replay_vass_path(const Vass &v, const VassPath &path, std::string *why) {
  auto fail = [&](std::string msg) {
    if (why)
      *why = std::move(msg);
    return false;
  };
  auto inits = v.control->initial_states();
  if (std::find(inits.begin(), inits.end(), path.initial) == inits.end())
    return fail("path does not start in an initial control state");
  if (path.initial_marking != v.start_marking())
    return fail("path does not start in the initial marking");
  ControlState q = path.initial;
  auto m = path.initial_marking;
  for (std::size_t i = 0; i < path.steps.size(); ++i) {
    const auto &st = path.steps[i];
    bool matched = false;
    for (const auto &t : v.control->transitions(q))
      if (t.target == st.state && t.delta == st.transition.delta && t.label == st.transition.label)
        matched = true;
    if (!matched)
      return fail("step " + std::to_string(i + 1) + " is not a transition of the VASS");
    for (std::size_t k = 0; k < m.size(); ++k) {
      m[k] += st.transition.delta[k];
      if (m[k] < 0)
        return fail("step " + std::to_string(i + 1) + " drives counter " + v.counters[k] +
                    " negative");
    }
    if (m != st.marking)
      return fail("step " + std::to_string(i + 1) + " records a wrong marking");
    q = st.state;
  }
  if (!v.control->is_final(q))
    return fail("path ends outside the final control states");
  if (!accepting_marking(v, m))
    return fail("path ends with a non-zero counter");
  return true;
}

std::string export_vass(const Vass &v, std::size_t control_budget) {
  auto g = materialize(v, control_budget);
  std::ostringstream os;
  os << "vass " << v.dimension() << " counters " << g.states.size() << " states "
     << g.edges.size() << " transitions\n";
  for (std::size_t i = 0; i < v.dimension(); ++i)
    os << "counter " << i << ' ' << v.counters[i] << (v.zero_checked[i] ? " zero" : " free") << '\n';
  for (std::uint32_t s = 0; s < g.states.size(); ++s) {
    os << "state " << s << ' ' << v.control->describe(g.states[s]);
    if (std::find(g.initial.begin(), g.initial.end(), s) != g.initial.end())
      os << " init";
    if (g.final_state[s])
      os << " final";
    os << '\n';
  }
  for (const auto &e : g.edges) {
    os << "trans " << e.from << " -> " << e.to << " [";
    for (std::size_t i = 0; i < e.transition.delta.size(); ++i)
      os << (i ? "," : "") << e.transition.delta[i];
    os << "] " << e.transition.label << '\n';
  }
  if (!g.complete)
    os << "# truncated: control state budget exceeded\n";
  return os.str();
}

} // namespace ctp
