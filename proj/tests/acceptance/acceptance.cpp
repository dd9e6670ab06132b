// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ctp/cli.hpp"
#include "ctp/dbm.hpp"
#include "ctp/dense.hpp"
#include "ctp/dsl.hpp"
#include "ctp/gen.hpp"
#include "ctp/reductions.hpp"
#include "ctp/topology.hpp"
#include "ctp/vass.hpp"

using namespace ctp;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failures;

  void fail(std::string why) {
    pass = false;
    if (failures.size() < 5)
      failures.push_back(std::move(why));
  }
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

bool conflict(ReachStatus a, ReachStatus b) {
  return (a == ReachStatus::Reachable && b == ReachStatus::Unreachable) ||
         (a == ReachStatus::Unreachable && b == ReachStatus::Reachable);
}

fs::path scratch_dir() {
  auto d = fs::temp_directory_path() / "ctp_acceptance";
  fs::create_directories(d);
  return d;
}

// ---------------------------------------------------------------------------
// 1. verdict table

std::string topology_system(const std::string &name, const std::string &delay,
                            const std::vector<std::string> &procs, const std::string &channels) {
  std::string s = "system " + name + " { delay " + delay + "; msgs { m };\n";
  for (const auto &p : procs)
    s += "process " + p + " { init a; final a; }\n";
  return s + channels + "}\n";
}

Outcome verdict_table() {
  Outcome o;
  struct Row {
    std::string label, delay;
    std::vector<std::string> procs;
    std::string channels;
    int expect;
  };
  const std::vector<std::string> pqr{"p", "q", "r"};
  const std::vector<Row> rows{
      {"p->q->r none discrete", "discrete", pqr, "channel a : p -> q; channel b : q -> r;", cli::kOk},
      {"p->q->r both discrete", "discrete", pqr, "channel a : p -> q testable; channel b : q -> r testable;",
       cli::kUndecidable},
      {"p->q->r one discrete", "discrete", pqr, "channel a : p -> q; channel b : q -> r testable;", cli::kOk},
      {"p->q<-r both dense", "dense", pqr, "channel a : p -> q testable; channel b : r -> q testable;",
       cli::kUndecidable},
      {"p<-q->r both dense", "dense", pqr, "channel a : q -> p testable; channel b : q -> r testable;",
       cli::kUndecidable},
      {"p->q,q->p none discrete", "discrete", {"p", "q"}, "channel a : p -> q; channel b : q -> p;",
       cli::kUndecidable},
      {"p->q,q->p none dense", "dense", {"p", "q"}, "channel a : p -> q; channel b : q -> p;", cli::kUndecidable},
      {"p->q,q->p none untimed", "none", {"p", "q"}, "channel a : p -> q; channel b : q -> p;", cli::kUndecidable},
      {"p->q->r none dense", "dense", pqr, "channel a : p -> q; channel b : q -> r;", cli::kOk},
      {"p->q one dense", "dense", {"p", "q"}, "channel a : p -> q testable;", cli::kOpen},
  };
  auto dir = scratch_dir() / "table";
  fs::create_directories(dir);
  auto t0 = Clock::now();
  int i = 0;
  for (const auto &r : rows) {
    auto path = dir / ("row" + std::to_string(i++) + ".ctp");
    std::ofstream(path) << topology_system("row", r.delay, r.procs, r.channels);
    std::ostringstream out, err;
    int code = cli::run({"classify", path.string()}, out, err);
    if (code != r.expect)
      o.fail(r.label + ": exit " + std::to_string(code) + ", expected " + std::to_string(r.expect));
    if (code == cli::kUndecidable && r.label.find("both") != std::string::npos &&
        (out.str().find("witness=a,b") == std::string::npos))
      o.fail(r.label + ": witness does not list both channels");
  }
  double t = seconds_since(t0);
  if (t >= 1.0)
    o.fail("took " + std::to_string(t) + " s");
  o.detail = std::to_string(rows.size()) + " rows in " + std::to_string(t) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. VASS reduction vs explicit oracle

Outcome vass_agreement() {
  Outcome o;
  GenProfile prof;
  prof.flavor = DelayKind::Tick;
  prof.shape = Shape::Polytree;
  prof.processes = {1, 3};
  prof.locations = {2, 4};
  prof.messages = 2;
  prof.tick_loop_density = 0.5;
  prof.extra_transitions = 3;
  auto t0 = Clock::now();
  std::map<std::string, int> tally;
  int definite = 0, replayed = 0;
  const int n = 220;
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    auto sys = generate(prof, seed);
    ReachOptions ro;
    ro.state_budget = 200'000;
    auto e = reach_explicit(sys, {final_pattern(sys)}, ro);
    auto acc = vass_acceptance(sys, tick_to_vass(sys));
    tally[std::string(to_string(e.status)) + "/" + std::string(to_string(acc.verdict))]++;
    if ((e.status == ReachStatus::Reachable && acc.verdict == VassVerdict::Rejecting) ||
        (e.status == ReachStatus::Unreachable && acc.verdict == VassVerdict::Accepting))
      o.fail("seed " + std::to_string(seed) + ": explicit " + std::string(to_string(e.status)) + ", vass " +
             std::string(to_string(acc.verdict)));
    if (e.status != ReachStatus::BoundExhausted || acc.verdict != VassVerdict::Unknown)
      ++definite;
    if (acc.verdict == VassVerdict::Accepting) {
      if (!acc.trace || !replay(sys, *acc.trace).valid ||
          !DiscreteSemantics(sys).accepting(acc.trace->final_config(), {final_pattern(sys)}))
        o.fail("seed " + std::to_string(seed) + ": accepting VASS path does not replay");
      else
        ++replayed;
    }
  }
  double t = seconds_since(t0);
  if (t > 600)
    o.fail("took " + std::to_string(t) + " s");
  std::ostringstream d;
  d << n << " systems, " << definite << " with a definite answer, " << replayed << " paths replayed, " << t
    << " s;";
  for (const auto &[k, c] : tally)
    d << " " << k << "=" << c;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 3. counters <-> channels

Outcome counters_round_trip() {
  Outcome o;
  auto prof = parse_profile("minsky");
  std::map<std::string, int> tally;
  const int n = 150;
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    auto m = generate(prof, seed);
    auto enc = counters_to_channels(m);
    ReachOptions ro;
    ro.depth = 20;
    auto a = reach_explicit(m, {final_pattern(m)}, ro).status;
    auto b = reach_explicit(enc, {final_pattern(enc)}, ro).status;
    tally[std::string(to_string(a))]++;
    if (a != b)
      o.fail("seed " + std::to_string(seed) + ": machine " + std::string(to_string(a)) + ", channels " +
             std::string(to_string(b)));
  }
  std::ostringstream d;
  d << n << " machines at run length <= 20;";
  for (const auto &[k, c] : tally)
    d << " " << k << "=" << c;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 4. tick synchronisation and FIFO under random runs

Outcome tick_fuzz() {
  Outcome o;
  std::size_t steps = 0, systems = 0, ticks = 0;
  const std::vector<std::string> profiles{"tick,shape=free,processes=1..4,tests=1,tick-density=0.8",
                                          "tick,shape=polytree,processes=2..4,tick-density=1",
                                          "tick,shape=cycle,processes=2..3,tick-density=0.6",
                                          "counter,shape=star-in,processes=2..3"};
  for (std::uint64_t seed = 0; steps < 100'000; ++seed) {
    auto sys = generate(parse_profile(profiles[seed % profiles.size()]), seed);
    ++systems;
    auto t = simulate(sys, 600, seed);
    if (!replay(sys, t).valid)
      o.fail("seed " + std::to_string(seed) + ": simulated run does not replay");
    std::vector<std::vector<MessageId>> sent(sys.topology.channels.size());
    std::vector<std::size_t> received(sys.topology.channels.size(), 0);
    for (const auto &st : t.steps) {
      ++steps;
      for (auto lt : st.config.local_ticks)
        if (lt != st.config.ticks)
          o.fail("seed " + std::to_string(seed) + ": unequal tick counts");
      if (st.step.tick) {
        ++ticks;
        if (st.step.processes.size() != sys.process_count())
          o.fail("seed " + std::to_string(seed) + ": tick without every process");
      } else {
        const auto &act = sys.automata[st.step.processes[0]].transitions[st.step.transitions[0]].action;
        if (act.kind == ActionKind::Send)
          sent[act.channel].push_back(act.message);
        if (act.kind == ActionKind::Recv) {
          auto c = act.channel;
          if (received[c] >= sent[c].size() || sent[c][received[c]] != act.message)
            o.fail("seed " + std::to_string(seed) + ": receive out of FIFO order");
          ++received[c];
        }
      }
      for (std::size_t c = 0; c < sent.size(); ++c) {
        std::vector<MessageId> rest(sent[c].begin() + static_cast<long>(std::min(received[c], sent[c].size())),
                                    sent[c].end());
        if (rest != st.config.channels[c])
          o.fail("seed " + std::to_string(seed) + ": channel content differs from sent minus received");
      }
    }
  }
  o.detail = std::to_string(steps) + " steps over " + std::to_string(systems) + " systems, " +
             std::to_string(ticks) + " ticks";
  return o;
}

// ---------------------------------------------------------------------------
// 5. slot normalisation

Outcome slot_normalisation() {
  Outcome o;
  GenProfile prof;
  prof.shape = Shape::Polytree;
  prof.processes = {2, 3};
  prof.locations = {2, 3};
  prof.messages = 2;
  const int n = 120;
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    auto sys = generate(prof, seed);
    auto free = reachable_within(sys, 8, Scheduler::Free);
    auto slot = reachable_within(sys, 8, Scheduler::SlotNormalized);
    total += free.size();
    if (free != slot)
      o.fail("seed " + std::to_string(seed) + ": " + std::to_string(free.size()) + " vs " +
             std::to_string(slot.size()) + " configurations");
  }
  o.detail = std::to_string(n) + " systems at depth 8, " + std::to_string(total) + " configurations compared";
  return o;
}

// ---------------------------------------------------------------------------
// 6. intro example

System intro(std::size_t k) {
  std::string q;
  for (std::size_t i = 0; i < k; ++i)
    q += "q" + std::to_string(i) + " -> q" + std::to_string(i + 1) + " : recv(c, m) when y >= 1;\n";
  return dsl::parse_or_throw(
      "system intro { delay dense; accept { channels empty; clocks any; } msgs { m };\n"
      "process p { init p0; final p0; clocks { x }; p0 -> p0 : send(c, m) when x < 1; }\n"
      "process q { init q0; final q" + std::to_string(k) + "; clocks { y };\n" + q + "}\n"
      "channel c : p -> q; }");
}

Outcome intro_example() {
  Outcome o;
  auto t0 = Clock::now();
  std::ostringstream d;
  for (std::size_t k = 1; k <= 4; ++k) {
    auto sys = intro(k);
    ZoneOptions zo;
    zo.channel_bound = k;
    auto r = zone_reach(sys, {final_pattern(sys)}, zo);
    if (r.status != ReachStatus::Reachable)
      o.fail("k=" + std::to_string(k) + " bound k: " + std::string(to_string(r.status)));
    else if (!replay_timed(sys, *r.witness, {final_pattern(sys)}).valid)
      o.fail("k=" + std::to_string(k) + ": witness does not replay");
    zo.channel_bound = k - 1;
    auto s = zone_reach(sys, {final_pattern(sys)}, zo);
    if (s.status != ReachStatus::BoundExhausted)
      o.fail("k=" + std::to_string(k) + " bound k-1: " + std::string(to_string(s.status)));
    d << "k=" << k << ": " << to_string(r.status) << "/" << to_string(s.status) << "; ";
  }
  double t = seconds_since(t0);
  if (t >= 60)
    o.fail("took " + std::to_string(t) + " s");
  d << t << " s";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 7. DBM laws and Karp-Miller

// Valuations scaled by 8; constraint x_i - x_j (<|<=) c.
struct Atom {
  std::size_t i, j;
  std::int64_t c;
  bool strict;
};
constexpr std::int64_t kScale = 8;
constexpr std::int64_t kC = 2;

bool holds(const std::vector<Atom> &atoms, const std::vector<std::int64_t> &v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] < 0)
      return false;
  for (const auto &a : atoms) {
    auto d = v[a.i] - v[a.j];
    if (a.strict ? d >= a.c * kScale : d > a.c * kScale)
      return false;
  }
  return true;
}

bool in_zone(const Dbm &z, const std::vector<std::int64_t> &v) {
  std::vector<Rational> r;
  for (auto x : v)
    r.emplace_back(x, kScale);
  return z.contains(r);
}

Outcome dbm_and_km() {
  Outcome o;
  std::mt19937_64 rng(1);
  std::size_t zones = 0, nonempty = 0, points = 0;
  for (; zones < 10'000; ++zones) {
    const std::size_t n = 1 + rng() % 3;
    const std::int64_t top = static_cast<std::int64_t>(n) * kC + 2;  // grid range that suffices
    Dbm z = Dbm::universe(n);
    std::vector<Atom> atoms;
    for (std::size_t k = rng() % 6; k > 0; --k) {
      Atom a{rng() % (n + 1), rng() % (n + 1), static_cast<std::int64_t>(rng() % (2 * kC + 1)) - kC, rng() % 2 == 0};
      if (a.i == a.j)
        continue;
      atoms.push_back(a);
      z.constrain(a.i, a.j, a.strict ? bound_lt(a.c) : bound_le(a.c));
    }
    Dbm c1 = z;
    c1.canonicalize();
    Dbm c2 = c1;
    c2.canonicalize();
    if (!(c1 == c2) || !(c1 == z))
      o.fail("zone " + std::to_string(zones) + ": canonicalize not idempotent");

    // emptiness against the 1/(n+1) grid
    const std::int64_t step = kScale / static_cast<std::int64_t>(n + 1);
    bool found = false;
    std::vector<std::int64_t> v(n + 1, 0);
    std::function<void(std::size_t)> walk = [&](std::size_t k) {
      if (found)
        return;
      if (k > n) {
        found = holds(atoms, v);
        return;
      }
      for (v[k] = 0; v[k] <= top * kScale && !found; v[k] += step)
        walk(k + 1);
    };
    walk(1);
    if (found == z.is_empty())
      o.fail("zone " + std::to_string(zones) + ": emptiness disagrees with the grid");
    if (!found)
      continue;
    ++nonempty;

    Dbm up = z;
    up.delay_closure();
    if (!up.includes(z))
      o.fail("zone " + std::to_string(zones) + ": delay_closure not monotone");
    const std::size_t x = 1 + rng() % n;
    Dbm rs = z;
    rs.reset(x);
    Dbm rs0 = rs;
    rs0.intersect(x, Cmp::Eq, 0);
    if (!(rs0 == rs))
      o.fail("zone " + std::to_string(zones) + ": reset then x = 0 changes the zone");

    for (int k = 0; k < 12; ++k) {
      ++points;
      std::vector<std::int64_t> p(n + 1, 0);
      for (std::size_t i = 1; i <= n; ++i)
        p[i] = static_cast<std::int64_t>(rng() % (top * kScale / 2 + 1)) * 2;
      const bool inside = holds(atoms, p);
      if (inside != in_zone(z, p))
        o.fail("zone " + std::to_string(zones) + ": membership disagrees");
      // p in up(Z) iff p - d in Z for some d >= 0 (d on the 1/8 grid suffices)
      bool pre = false;
      const auto vmin = *std::min_element(p.begin() + 1, p.end());
      for (std::int64_t d = 0; d <= vmin && !pre; ++d) {
        auto w = p;
        for (std::size_t i = 1; i <= n; ++i)
          w[i] -= d;
        pre = holds(atoms, w);
      }
      if (pre != in_zone(up, p))
        o.fail("zone " + std::to_string(zones) + ": delay_closure disagrees with the oracle");
      // p in reset(Z, x) iff p_x = 0 and p[x := y] in Z for some y
      bool some = false;
      for (std::int64_t y = 0; y <= 2 * top * kScale && !some; ++y) {
        auto w = p;
        w[x] = y;
        some = holds(atoms, w);
      }
      if ((some && p[x] == 0) != in_zone(rs, p))
        o.fail("zone " + std::to_string(zones) + ": reset disagrees with the oracle");
      auto p0 = p;
      p0[x] = 0;
      if (some != in_zone(rs, p0))
        o.fail("zone " + std::to_string(zones) + ": reset disagrees with the oracle at x = 0");
    }
  }

  // Karp-Miller on nets bounded by place invariants: counter x_i has a
  // complement c_i and every transition keeps x_i + c_i = K_i.
  int nets = 0;
  for (; nets < 50; ++nets) {
    const std::size_t dim = 1 + rng() % 3;
    const std::uint32_t states = 1 + static_cast<std::uint32_t>(rng() % 4);
    std::vector<std::string> counters, names;
    std::vector<std::int64_t> init;
    for (std::size_t i = 0; i < dim; ++i) {
      counters.push_back("x" + std::to_string(i));
      init.push_back(0);
    }
    for (std::size_t i = 0; i < dim; ++i) {
      counters.push_back("c" + std::to_string(i));
      init.push_back(1 + static_cast<std::int64_t>(rng() % 3));
    }
    for (std::uint32_t s = 0; s < states; ++s)
      names.push_back("s" + std::to_string(s));
    std::vector<ExplicitTransition> ts;
    for (std::uint32_t k = 0, m = 2 + static_cast<std::uint32_t>(rng() % 6); k < m; ++k) {
      ExplicitTransition t;
      t.from = static_cast<std::uint32_t>(rng() % states);
      t.to = static_cast<std::uint32_t>(rng() % states);
      t.delta.assign(2 * dim, 0);
      for (std::size_t i = 0; i < dim; ++i) {
        t.delta[i] = static_cast<std::int64_t>(rng() % 3) - 1;
        t.delta[dim + i] = -t.delta[i];
      }
      t.label = "t" + std::to_string(k);
      ts.push_back(t);
    }
    auto v = make_explicit_vass(counters, names, {0}, {0}, ts);
    v.initial_marking = init;
    auto km = karp_miller(v);

    // explicit BFS over (state, marking)
    std::set<std::pair<std::uint32_t, std::vector<std::int64_t>>> seen{{0, init}};
    std::vector<std::pair<std::uint32_t, std::vector<std::int64_t>>> work{{0, init}};
    std::vector<std::int64_t> max = init;
    while (!work.empty()) {
      auto [s, m] = work.back();
      work.pop_back();
      for (const auto &t : ts) {
        if (t.from != s)
          continue;
        auto next = m;
        bool ok = true;
        for (std::size_t i = 0; i < next.size(); ++i)
          ok = (next[i] += t.delta[i]) >= 0 && ok;
        if (ok && seen.insert({t.to, next}).second) {
          work.push_back({t.to, next});
          for (std::size_t i = 0; i < next.size(); ++i)
            max[i] = std::max(max[i], next[i]);
        }
      }
    }
    if (!km.all_bounded())
      o.fail("net " + std::to_string(nets) + ": Karp-Miller misses boundedness");
    else if (*km.bound != max)
      o.fail("net " + std::to_string(nets) + ": bound vector differs from explicit BFS");
    for (const auto &nd : km.nodes)
      if (!seen.count({km.states[nd.state][0], nd.marking.values}))
        o.fail("net " + std::to_string(nets) + ": tree label not reachable");
  }

  auto pump = make_explicit_vass({"x"}, {"s"}, {0}, {0}, {{0, {1}, 0, "inc"}});
  auto km = karp_miller(pump);
  bool omega = km.complete && !km.bounded[0] &&
               std::any_of(km.nodes.begin(), km.nodes.end(), [](const KmNode &n) { return n.marking.is_omega(0); });
  if (!omega)
    o.fail("pump does not yield omega");

  o.detail = std::to_string(zones) + " zones (" + std::to_string(nonempty) + " nonempty, " +
             std::to_string(points) + " sampled points), " + std::to_string(nets) +
             " invariant-bounded nets, pump " + (omega ? "omega" : "no omega");
  return o;
}

// ---------------------------------------------------------------------------
// 8. discretizer vs zone explorer

Outcome discretizer_agreement() {
  Outcome o;
  GenProfile prof;
  prof.flavor = DelayKind::Dense;
  prof.shape = Shape::Polyforest;
  prof.processes = {1, 2};
  prof.locations = {2, 4};
  prof.messages = 2;
  prof.guard_max = 3;
  std::map<std::string, int> tally;
  const int n = 300;
  auto gaps = scratch_dir() / "known_gaps";
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    prof.clocks = 1 + static_cast<std::uint32_t>(seed % 2);
    auto sys = generate(prof, seed);
    ZoneOptions zo;
    zo.channel_bound = 3;
    auto z = zone_reach(sys, {final_pattern(sys)}, zo);
    auto d = discretize_system(sys);
    ReachOptions ro;
    ro.channel_bound = 3;
    auto e = reach_explicit(d.system, {lift_target(d, final_pattern(sys))}, ro);
    tally[std::string(to_string(z.status)) + "/" + std::string(to_string(e.status))]++;
    if (conflict(z.status, e.status)) {
      fs::create_directories(gaps);
      auto path = gaps / ("dense_seed" + std::to_string(seed) + ".ctp");
      std::ofstream(path) << dsl::serialize(sys);
      o.fail("seed " + std::to_string(seed) + ": zone " + std::string(to_string(z.status)) + ", discretized " +
             std::string(to_string(e.status)) + " (archived " + path.string() + ")");
    }
  }
  std::ostringstream d;
  d << n << " systems (zone/discretized):";
  for (const auto &[k, c] : tally)
    d << " " << k << "=" << c;
  o.detail = d.str();
  return o;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 verdict table", verdict_table},
      {"2 VASS reduction agrees with the explicit oracle", vass_agreement},
      {"3 counters/channels round trip", counters_round_trip},
      {"4 tick synchronisation and FIFO fuzz", tick_fuzz},
      {"5 slot normalisation", slot_normalisation},
      {"6 intro example", intro_example},
      {"7 DBM laws and Karp-Miller", dbm_and_km},
      {"8 discretizer agrees with the zone explorer", discretizer_agreement},
  };
  int failed = 0;
  for (const auto &[name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception &e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << name << " -- " << o.detail << "\n";
    for (const auto &f : o.failures)
      std::cout << "    " << f << "\n";
    std::cout.flush();
    failed += !o.pass;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << (8 - failed) << "/8\n";
  return failed ? 1 : 0;
}
