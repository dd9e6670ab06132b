#include "ctp/topology.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace ctp {

std::string_view to_string(VerdictStatus s) {
  switch (s) {
  case VerdictStatus::Decidable:
    return "Decidable";
  case VerdictStatus::Undecidable:
    return "Undecidable";
  case VerdictStatus::Open:
    return "Open";
  }
  return "?";
}

std::string_view to_string(Rule r) {
  switch (r) {
  case Rule::UndirectedCycle:
    return "undirected-cycle";
  case Rule::MultipleTests:
    return "multiple-tests-per-component";
  case Rule::PolyforestTestFree:
    return "polyforest-test-free";
  case Rule::PolyforestSingleTest:
    return "polyforest-single-test";
  case Rule::DenseTestsOpen:
    return "dense-tests-open";
  case Rule::CounterZeroTests:
    return "counter-zero-tests";
  }
  return "?";
}

namespace {

class UnionFind {
public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t i) {
    while (parent_[i] != i)
      i = parent_[i] = parent_[parent_[i]];
    return i;
  }

  /// false when i and j were already joined
  bool unite(std::uint32_t i, std::uint32_t j) {
    i = find(i);
    j = find(j);
    if (i == j)
      return false;
    if (size_[i] < size_[j])
      std::swap(i, j);
    parent_[j] = i;
    size_[i] += size_[j];
    return true;
  }

private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

struct CycleScan {
  // first cycle found, keyed by the process where the closing edge starts
  std::vector<std::vector<ChannelId>> cycles;
};

// Channel path between u and v in the forest spanned by `tree` edges.
std::vector<ChannelId> forest_path(const std::vector<std::vector<std::pair<ProcessId, ChannelId>>> &adj,
                                   ProcessId u, ProcessId v) {
  std::vector<std::optional<std::pair<ProcessId, ChannelId>>> via(adj.size());
  std::vector<bool> seen(adj.size(), false);
  std::deque<ProcessId> queue{u};
  seen[u] = true;
  while (!queue.empty()) {
    ProcessId x = queue.front();
    queue.pop_front();
    if (x == v)
      break;
    for (auto [y, c] : adj[x]) {
      if (seen[y])
        continue;
      seen[y] = true;
      via[y] = std::make_pair(x, c);
      queue.push_back(y);
    }
  }
  std::vector<ChannelId> path;
  for (ProcessId x = v; x != u && via[x]; x = via[x]->first)
    path.push_back(via[x]->second);
  std::reverse(path.begin(), path.end());
  return path;
}

CycleScan scan_cycles(const Topology &topo) {
  const std::size_t n = topo.processes.size();
  UnionFind uf(n);
  std::vector<std::vector<std::pair<ProcessId, ChannelId>>> adj(n);
  CycleScan scan;
  std::set<std::uint32_t> cyclic_roots;
  std::vector<std::pair<std::vector<ChannelId>, ProcessId>> found;
  for (const auto &e : underlying_graph(topo).edges) {
    if (e.a >= n || e.b >= n)
      continue;
    if (uf.unite(e.a, e.b)) {
      adj[e.a].push_back({e.b, e.channel});
      adj[e.b].push_back({e.a, e.channel});
      continue;
    }
    auto cycle = e.a == e.b ? std::vector<ChannelId>{} : forest_path(adj, e.a, e.b);
    cycle.push_back(e.channel);
    found.emplace_back(std::move(cycle), e.a);
  }
  // keep the first cycle of every component (components may merge later)
  for (auto &[cycle, p] : found) {
    if (cyclic_roots.insert(uf.find(p)).second)
      scan.cycles.push_back(std::move(cycle));
  }
  return scan;
}

} // namespace

ForestCheck is_polyforest(const Topology &topo) {
  auto scan = scan_cycles(topo);
  if (scan.cycles.empty())
    return {};
  return {false, scan.cycles.front()};
}

std::vector<WeakComponent> weak_components(const Topology &topo) {
  const std::size_t n = topo.processes.size();
  UnionFind uf(n);
  for (const auto &c : topo.channels)
    if (c.source < n && c.target < n)
      uf.unite(c.source, c.target);

  std::map<std::uint32_t, std::size_t> index;
  std::vector<WeakComponent> out;
  for (ProcessId p = 0; p < n; ++p) {
    auto [it, fresh] = index.emplace(uf.find(p), out.size());
    if (fresh)
      out.emplace_back();
    out[it->second].processes.push_back(p);
  }
  for (ChannelId c = 0; c < topo.channels.size(); ++c) {
    const auto &ch = topo.channels[c];
    if (ch.source >= n)
      continue;
    auto &comp = out[index.at(uf.find(ch.source))];
    comp.channels.push_back(c);
    if (ch.testable)
      comp.testable.push_back(c);
  }
  return out;
}

Verdict classify(const Topology &topo, DelayKind flavor) {
  Verdict v;
  auto comps = weak_components(topo);
  auto scan = scan_cycles(topo);

  // map every cycle to the component containing its first channel
  std::map<std::size_t, std::vector<ChannelId>> cycle_of;
  for (const auto &cycle : scan.cycles) {
    ProcessId p = topo.channels[cycle.front()].source;
    for (std::size_t i = 0; i < comps.size(); ++i)
      if (std::binary_search(comps[i].processes.begin(), comps[i].processes.end(), p))
        cycle_of.emplace(i, cycle);
  }

  const bool dense = flavor == DelayKind::Dense;
  auto worse = [](VerdictStatus a, VerdictStatus b) {
    auto rank = [](VerdictStatus s) {
      return s == VerdictStatus::Undecidable ? 2 : s == VerdictStatus::Open ? 1 : 0;
    };
    return rank(a) >= rank(b) ? a : b;
  };

  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto &comp = comps[i];
    ComponentVerdict cv{comp, VerdictStatus::Decidable};
    bool cyclic = cycle_of.count(i) > 0;
    if (cyclic) {
      cv.status = VerdictStatus::Undecidable;
      v.reasons.push_back({Rule::UndirectedCycle, cycle_of[i], i,
                           "topology is not a polyforest: undirected cycle"});
    }
    if (comp.testable.size() >= 2) {
      cv.status = VerdictStatus::Undecidable;
      v.reasons.push_back({Rule::MultipleTests, comp.testable, i,
                           "weakly-connected component tests " +
                               std::to_string(comp.testable.size()) +
                               " channels for emptiness"});
    }
    if (cv.status != VerdictStatus::Undecidable) {
      if (comp.testable.empty()) {
        v.reasons.push_back({Rule::PolyforestTestFree, {}, i, "test-free polyforest component"});
      } else if (dense) {
        cv.status = VerdictStatus::Open;
        v.reasons.push_back({Rule::DenseTestsOpen, comp.testable, i,
                             "dense time with one testable channel: decidability open"});
      } else {
        v.reasons.push_back({Rule::PolyforestSingleTest, comp.testable, i,
                             "polyforest component with a single testable channel"});
      }
    }
    v.status = worse(v.status, cv.status);
    v.components.push_back(std::move(cv));
  }
  return v;
}

Verdict classify(const System &sys) {
  Verdict v = classify(sys.topology, sys.delay);
  if (sys.delay == DelayKind::None) {
    for (ProcessId p = 0; p < sys.automata.size(); ++p) {
      const auto &ts = sys.automata[p].transitions;
      bool zt = std::any_of(ts.begin(), ts.end(), [](const Transition &t) {
        return t.action.kind == ActionKind::ZeroTest;
      });
      if (zt)
        v.reasons.push_back({Rule::CounterZeroTests, {}, std::nullopt,
                             "process '" + sys.topology.processes[p] +
                                 "' uses counter zero tests (informational)"});
    }
  }
  return v;
}

bool witnesses_valid(const Topology &topo, const Verdict &v) {
  auto comps = weak_components(topo);
  auto component_of = [&](ProcessId p) -> std::size_t {
    for (std::size_t i = 0; i < comps.size(); ++i)
      if (std::binary_search(comps[i].processes.begin(), comps[i].processes.end(), p))
        return i;
    return comps.size();
  };
  for (const auto &r : v.reasons) {
    if (r.rule == Rule::UndirectedCycle) {
      const auto &cyc = r.witness;
      if (cyc.empty())
        return false;
      std::set<ChannelId> distinct(cyc.begin(), cyc.end());
      if (distinct.size() != cyc.size())
        return false;
      for (auto c : cyc)
        if (c >= topo.channels.size())
          return false;
      // walk the cycle: each edge must share the current endpoint
      const auto &first = topo.channels[cyc.front()];
      if (cyc.size() == 1) {
        if (first.source != first.target)
          return false;
        continue;
      }
      bool ok = false;
      for (ProcessId start : {first.source, first.target}) {
        ProcessId at = start == first.source ? first.target : first.source;
        bool walk = true;
        for (std::size_t i = 1; i < cyc.size() && walk; ++i) {
          const auto &ch = topo.channels[cyc[i]];
          if (ch.source == at)
            at = ch.target;
          else if (ch.target == at)
            at = ch.source;
          else
            walk = false;
        }
        if (walk && at == start)
          ok = true;
      }
      if (!ok)
        return false;
    } else if (r.rule == Rule::MultipleTests) {
      if (r.witness.size() < 2)
        return false;
      std::size_t comp = component_of(topo.channels.at(r.witness.front()).source);
      for (auto c : r.witness) {
        const auto &ch = topo.channels.at(c);
        if (!ch.testable || component_of(ch.source) != comp)
          return false;
      }
    }
  }
  if (v.status == VerdictStatus::Undecidable) {
    return std::any_of(v.reasons.begin(), v.reasons.end(), [](const Reason &r) {
      return r.rule == Rule::UndirectedCycle || r.rule == Rule::MultipleTests;
    });
  }
  return true;
}

std::vector<ProcessId> sender_first_order(const Topology &topo) {
  const std::size_t n = topo.processes.size();
  std::vector<std::size_t> indegree(n, 0);
  for (const auto &c : topo.channels)
    ++indegree[c.target];
  std::set<ProcessId> ready;
  for (ProcessId p = 0; p < n; ++p)
    if (indegree[p] == 0)
      ready.insert(p);
  std::vector<ProcessId> order;
  while (!ready.empty()) {
    ProcessId p = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(p);
    for (const auto &c : topo.channels)
      if (c.source == p && --indegree[c.target] == 0)
        ready.insert(c.target);
  }
  if (order.size() != n)
    throw Error("topology has a directed cycle; no sender-first order exists");
  return order;
}

std::string format_verdict(const Topology &topo, const Verdict &v) {
  std::ostringstream os;
  os << "verdict: " << to_string(v.status) << "\n";
  auto channels = [&](const std::vector<ChannelId> &cs) {
    std::string s;
    for (std::size_t i = 0; i < cs.size(); ++i)
      s += (i ? "," : "") + topo.channels[cs[i]].name;
    return s;
  };
  for (std::size_t i = 0; i < v.components.size(); ++i) {
    const auto &cv = v.components[i];
    os << "component " << i << " {";
    for (std::size_t k = 0; k < cv.component.processes.size(); ++k)
      os << (k ? "," : "") << topo.processes[cv.component.processes[k]];
    os << "}: " << to_string(cv.status) << ", testable=" << cv.component.testable.size() << "\n";
  }
  for (const auto &r : v.reasons) {
    os << "reason " << to_string(r.rule);
    if (r.component)
      os << " [component " << *r.component << "]";
    if (!r.witness.empty())
      os << " witness=" << channels(r.witness);
    os << ": " << r.text << "\n";
  }
  return os.str();
}

} // namespace ctp
