#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "ctp/vass.hpp"

using namespace ctp;

namespace {

Vass random_net(std::mt19937_64 &rng, std::uint32_t states, std::size_t dim, std::uint32_t transitions,
                int max_delta = 1) {
  std::vector<std::string> counters, names;
  for (std::size_t i = 0; i < dim; ++i)
    counters.push_back("x" + std::to_string(i));
  for (std::uint32_t s = 0; s < states; ++s)
    names.push_back("s" + std::to_string(s));
  std::vector<ExplicitTransition> ts;
  for (std::uint32_t i = 0; i < transitions; ++i) {
    ExplicitTransition t;
    t.from = static_cast<std::uint32_t>(rng() % states);
    t.to = static_cast<std::uint32_t>(rng() % states);
    for (std::size_t k = 0; k < dim; ++k)
      t.delta.push_back(static_cast<std::int64_t>(rng() % (2 * max_delta + 1)) - max_delta);
    t.label = "t" + std::to_string(i);
    ts.push_back(t);
  }
  return make_explicit_vass(counters, names, {0}, {static_cast<std::uint32_t>(rng() % states)}, ts);
}

// Every (state, marking) reachable with all counters <= cap; `hit` reports
// whether the cap cut anything off.
std::set<std::pair<std::uint32_t, std::vector<std::int64_t>>> explore(const Vass &v, std::int64_t cap,
                                                                       bool &hit) {
  std::set<std::pair<std::uint32_t, std::vector<std::int64_t>>> seen;
  std::vector<std::pair<ControlState, std::vector<std::int64_t>>> work;
  for (const auto &q : v.control->initial_states()) {
    work.push_back({q, v.start_marking()});
    seen.insert({q[0], v.start_marking()});
  }
  hit = false;
  while (!work.empty()) {
    auto [q, m] = work.back();
    work.pop_back();
    for (const auto &t : v.control->transitions(q)) {
      auto next = m;
      bool ok = true;
      for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] += t.delta[i];
        ok = ok && next[i] >= 0;
      }
      if (!ok)
        continue;
      if (std::any_of(next.begin(), next.end(), [&](auto x) { return x > cap; })) {
        hit = true;
        continue;
      }
      if (seen.insert({t.target[0], next}).second)
        work.push_back({t.target, next});
    }
  }
  return seen;
}

bool covered_by_tree(const KarpMillerResult &km, std::uint32_t state, const std::vector<std::int64_t> &m) {
  OmegaMarking om{m};
  for (const auto &n : km.nodes)
    if (km.states[n.state][0] == state && om.covered_by(n.marking))
      return true;
  return false;
}

} // namespace

TEST_CASE("omega markings absorb and order") {
  OmegaMarking a{{1, kOmega}};
  OmegaMarking b{{2, kOmega}};
  CHECK(a.covered_by(b));
  CHECK_FALSE(b.covered_by(a));
  auto c = a.fire({5, -100});
  REQUIRE(c);
  CHECK(c->values[1] == kOmega);
  CHECK_FALSE(a.fire({-2, 0}).has_value());
  CHECK(a.format() == "(1,w)");
}

TEST_CASE("karp-miller examples") {
  auto pump = make_explicit_vass({"x"}, {"s"}, {0}, {0}, {{0, {1}, 0, "inc"}});
  auto km = karp_miller(pump);
  CHECK(km.complete);
  CHECK_FALSE(km.bounded[0]);
  CHECK_FALSE(km.bound.has_value());
  CHECK(format_boundedness(pump, km) == "x: unbounded\n");

  auto loop = make_explicit_vass({"x"}, {"s0", "s1"}, {0}, {0},
                                 {{0, {1}, 1, "up"}, {1, {-1}, 0, "down"}});
  auto km2 = karp_miller(loop);
  CHECK(km2.nodes.size() == 3);
  REQUIRE(km2.bound);
  CHECK(*km2.bound == std::vector<std::int64_t>{1});
  CHECK(km2.nodes[2].duplicate);
  CHECK(format_tree(loop, km2) == "s0 (0)\n  --up--> s1 (1)\n    --down--> s0 (0) (seen)\n");

  auto none = make_explicit_vass({"x", "y"}, {"s"}, {0}, {0}, {});
  none.initial_marking = {3, 1};
  auto km3 = karp_miller(none);
  CHECK(km3.nodes.size() == 1);
  REQUIRE(km3.bound);
  CHECK(*km3.bound == std::vector<std::int64_t>{3, 1});
}

TEST_CASE("karp-miller budget is reported, not guessed") {
  std::vector<ExplicitTransition> ts;
  for (std::uint32_t s = 0; s < 50; ++s)
    ts.push_back({s, {1}, s + 1, "a"});
  std::vector<std::string> names;
  for (int s = 0; s <= 50; ++s)
    names.push_back("s" + std::to_string(s));
  auto v = make_explicit_vass({"x"}, names, {0}, {50}, ts);
  KmOptions o;
  o.node_budget = 10;
  auto km = karp_miller(v, o);
  CHECK_FALSE(km.complete);
  CHECK_FALSE(km.bound.has_value());
  CHECK(format_boundedness(v, km).find("budget") != std::string::npos);
}

TEST_CASE("vass_reach examples") {
  auto updown = make_explicit_vass({"x"}, {"s0", "s1", "s2"}, {0}, {2},
                                   {{0, {1}, 1, "up"}, {1, {-1}, 2, "down"}});
  auto r = vass_reach(updown);
  REQUIRE(r.verdict == VassVerdict::Accepting);
  CHECK(r.path->steps.size() == 2);
  std::string why;
  CHECK(replay_vass_path(updown, *r.path, &why));

  auto mandatory = make_explicit_vass({"x"}, {"s0", "s1"}, {0}, {1},
                                      {{0, {1}, 1, "first"}, {1, {1}, 1, "pump"}});
  auto rm = vass_reach(mandatory);
  CHECK(rm.verdict == VassVerdict::Rejecting);
  CHECK_FALSE(rm.certificate.empty());

  auto trivial = make_explicit_vass({}, {"s"}, {0}, {0}, {});
  auto rt = vass_reach(trivial);
  REQUIRE(rt.verdict == VassVerdict::Accepting);
  CHECK(rt.path->steps.empty());

  // parity keeps the counter odd in s1, but no coverability argument sees it
  auto parity = make_explicit_vass({"x"}, {"s0", "s1"}, {0}, {1},
                                   {{0, {2}, 0, "twice"}, {0, {1}, 1, "odd"}, {1, {-2}, 1, "drain"}});
  VassReachOptions small;
  small.max_cap = 16;
  auto rp = vass_reach(parity, small);
  CHECK(rp.verdict == VassVerdict::Unknown);

  auto bounded = make_explicit_vass({"x"}, {"s0", "s1"}, {0}, {1},
                                    {{0, {1}, 0, "inc"}, {0, {0}, 1, "go"}, {1, {-1}, 1, "dec"}});
  VassReachOptions k;
  k.bounded = 3;
  auto rk = vass_reach(bounded, k);
  REQUIRE(rk.verdict == VassVerdict::Accepting);
  CHECK(rk.path->steps.size() == 1);
}

TEST_CASE("bounded nets are decided exactly") {
  // conservative transfers between two counters starting at (2, 0)
  auto v = make_explicit_vass({"a", "b"}, {"s", "t"}, {0}, {1},
                              {{0, {-1, 1}, 0, "ab"}, {0, {1, -1}, 0, "ba"}, {0, {0, -2}, 1, "out"}});
  v.initial_marking = {2, 0};
  auto r = vass_reach(v);
  REQUIRE(r.verdict == VassVerdict::Accepting);
  CHECK(replay_vass_path(v, *r.path));

  v.initial_marking = {3, 0};
  auto r2 = vass_reach(v);
  CHECK(r2.verdict == VassVerdict::Rejecting);
}

TEST_CASE("replay rejects tampered paths") {
  auto updown = make_explicit_vass({"x"}, {"s0", "s1", "s2"}, {0}, {2},
                                   {{0, {1}, 1, "up"}, {1, {-1}, 2, "down"}});
  auto r = vass_reach(updown);
  REQUIRE(r.path);
  auto bad = *r.path;
  bad.steps.pop_back();
  std::string why;
  CHECK_FALSE(replay_vass_path(updown, bad, &why));
  CHECK(why.find("final") != std::string::npos);
  bad = *r.path;
  bad.steps[0].marking = {5};
  CHECK_FALSE(replay_vass_path(updown, bad));
}

TEST_CASE("coverability tree covers exactly the reachable markings on bounded nets") {
  std::mt19937_64 rng(5);
  int bounded_nets = 0;
  for (int iter = 0; iter < 300; ++iter) {
    auto v = random_net(rng, 1 + static_cast<std::uint32_t>(rng() % 4), 1 + rng() % 3,
                        1 + static_cast<std::uint32_t>(rng() % 6));
    auto km = karp_miller(v);
    REQUIRE(km.complete);
    bool hit = false;
    auto reach = explore(v, 40, hit);
    // every reachable marking is covered
    for (const auto &[s, m] : reach)
      CHECK(covered_by_tree(km, s, m));
    if (km.bound) {
      ++bounded_nets;
      CHECK_FALSE(hit);
      // every label is reachable, and the bound vector is attained
      std::vector<std::int64_t> max(v.dimension(), 0);
      for (const auto &[s, m] : reach)
        for (std::size_t i = 0; i < m.size(); ++i)
          max[i] = std::max(max[i], m[i]);
      CHECK(max == *km.bound);
      for (const auto &n : km.nodes)
        CHECK(reach.count({km.states[n.state][0], n.marking.values}) == 1);
    } else {
      // some counter really grows past any small cap
      CHECK(hit);
    }
    // monotonicity: an uncoverable marking has no reachable marking above it
    std::vector<std::int64_t> probe(v.dimension());
    for (auto &x : probe)
      x = static_cast<std::int64_t>(rng() % 4);
    for (std::uint32_t s = 0; s < 4; ++s) {
      if (covered_by_tree(km, s, probe))
        continue;
      for (const auto &[rs, m] : reach) {
        if (rs != s)
          continue;
        bool above = true;
        for (std::size_t i = 0; i < m.size(); ++i)
          above = above && m[i] >= probe[i];
        CHECK_FALSE(above);
      }
    }
  }
  CHECK(bounded_nets > 30);
}

TEST_CASE("vass_reach agrees with exhaustive search where the latter is conclusive") {
  std::mt19937_64 rng(11);
  std::map<VassVerdict, int> seen;
  for (int iter = 0; iter < 300; ++iter) {
    auto v = random_net(rng, 1 + static_cast<std::uint32_t>(rng() % 4), 1 + rng() % 2,
                        1 + static_cast<std::uint32_t>(rng() % 6));
    bool hit = false;
    auto reach = explore(v, 30, hit);
    bool accept = false;
    for (const auto &[s, m] : reach)
      if (v.control->is_final({s}) && std::all_of(m.begin(), m.end(), [](auto x) { return x == 0; }))
        accept = true;
    auto r = vass_reach(v);
    ++seen[r.verdict];
    if (accept)
      CHECK(r.verdict == VassVerdict::Accepting);
    if (r.verdict == VassVerdict::Accepting)
      CHECK(replay_vass_path(v, *r.path));
    if (!hit && !accept)
      CHECK(r.verdict == VassVerdict::Rejecting);
    if (r.verdict == VassVerdict::Rejecting)
      CHECK_FALSE(accept);
  }
  CHECK(seen[VassVerdict::Accepting] > 0);
  CHECK(seen[VassVerdict::Rejecting] > 0);
}

TEST_CASE("trees and exports are deterministic") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    auto v = random_net(rng, 3, 2, 5);
    CHECK(format_tree(v, karp_miller(v)) == format_tree(v, karp_miller(v)));
    auto text = export_vass(v);
    CHECK(text == export_vass(v));
    CHECK(text.rfind("vass 2 counters", 0) == 0);
  }
}
