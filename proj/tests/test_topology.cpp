#include <doctest.h>

#include <algorithm>

#include "ctp/gen.hpp"
#include "ctp/topology.hpp"
#include "support.hpp"

using namespace ctp;

namespace {

Topology topo(std::vector<std::string> procs, std::vector<Channel> chans) {
  return {std::move(procs), std::move(chans), {"m"}};
}

Channel ch(std::string name, ProcessId s, ProcessId t, bool testable = false) {
  return {std::move(name), s, t, testable, {}};
}

// Reference forest test: a graph is a forest iff |E| = |V| - #components.
bool forest_by_counting(const Topology &t) {
  auto comps = weak_components(t);
  return t.channels.size() + comps.size() == t.processes.size();
}

} // namespace

TEST_CASE("is_polyforest examples") {
  CHECK(is_polyforest(topo({"p", "q", "r"}, {ch("a", 0, 1), ch("b", 1, 2)})).polyforest);

  auto two = is_polyforest(topo({"p", "q"}, {ch("c1", 0, 1), ch("c2", 1, 0)}));
  CHECK_FALSE(two.polyforest);
  CHECK(two.cycle == std::vector<ChannelId>{0, 1});

  auto tri = is_polyforest(topo({"p", "q", "r"}, {ch("a", 0, 1), ch("b", 2, 1), ch("c", 0, 2)}));
  CHECK_FALSE(tri.polyforest);
  auto sorted = tri.cycle;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<ChannelId>{0, 1, 2});

  auto self = is_polyforest(topo({"p"}, {ch("s", 0, 0)}));
  CHECK_FALSE(self.polyforest);
  CHECK(self.cycle.size() == 1);
}

TEST_CASE("weak component examples") {
  auto comps = weak_components(topo({"p", "q", "r"}, {ch("a", 0, 1)}));
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].processes == std::vector<ProcessId>{0, 1});
  CHECK(comps[1].processes == std::vector<ProcessId>{2});
  CHECK(comps[0].testable.empty());
  CHECK(comps[1].testable.empty());

  auto both = weak_components(topo({"p", "q", "r"}, {ch("a", 0, 1, true), ch("b", 1, 2, true)}));
  REQUIRE(both.size() == 1);
  CHECK(both[0].testable.size() == 2);

  auto single = weak_components(topo({"p"}, {}));
  REQUIRE(single.size() == 1);
  CHECK(single[0].testable.empty());
}

TEST_CASE("classification examples") {
  auto chain = [](bool ta, bool tb) {
    return topo({"p", "q", "r"}, {ch("a", 0, 1, ta), ch("b", 1, 2, tb)});
  };
  CHECK(classify(chain(true, true), DelayKind::Tick).status == VerdictStatus::Undecidable);
  CHECK(classify(chain(false, false), DelayKind::Dense).status == VerdictStatus::Decidable);
  CHECK(classify(chain(false, true), DelayKind::Tick).status == VerdictStatus::Decidable);
  CHECK(classify(topo({"p", "q"}, {ch("c1", 0, 1), ch("c2", 1, 0)}), DelayKind::Tick).status ==
        VerdictStatus::Undecidable);
  CHECK(classify(topo({"p", "q"}, {ch("c", 0, 1, true)}), DelayKind::Dense).status ==
        VerdictStatus::Open);
  for (auto f : {DelayKind::None, DelayKind::Tick, DelayKind::Dense})
    CHECK(classify(topo({}, {}), f).status == VerdictStatus::Decidable);
  // two independent components, one test each: still decidable in discrete time
  auto split = topo({"p", "q", "r", "s"}, {ch("a", 0, 1, true), ch("b", 2, 3, true)});
  CHECK(classify(split, DelayKind::Tick).status == VerdictStatus::Decidable);
  CHECK(classify(split, DelayKind::Dense).status == VerdictStatus::Open);
}

TEST_CASE("corpus files classify as documented") {
  auto v = [](const char *f) { return classify(testing::load_corpus(f)).status; };
  CHECK(v("chain_pqr.ctp") == VerdictStatus::Decidable);
  CHECK(v("chain_pqr_tests.ctp") == VerdictStatus::Undecidable);
  CHECK(v("chain_pqr_one_test.ctp") == VerdictStatus::Decidable);
  CHECK(v("converge_pqr_dense_tests.ctp") == VerdictStatus::Undecidable);
  CHECK(v("diverge_pqr_dense_tests.ctp") == VerdictStatus::Undecidable);
  CHECK(v("cycle_pq.ctp") == VerdictStatus::Undecidable);
  CHECK(v("cycle_pq_dense.ctp") == VerdictStatus::Undecidable);
  CHECK(v("chain_pqr_dense.ctp") == VerdictStatus::Decidable);
  CHECK(v("single_test_dense.ctp") == VerdictStatus::Open);

  auto minsky = classify(testing::load_corpus("minsky_ztest.ctp"));
  CHECK(minsky.status == VerdictStatus::Decidable);
  CHECK(std::any_of(minsky.reasons.begin(), minsky.reasons.end(),
                    [](const Reason &r) { return r.rule == Rule::CounterZeroTests; }));
}

TEST_CASE("undecidable witnesses name the offending channels") {
  auto t = topo({"p", "q", "r"}, {ch("a", 0, 1, true), ch("b", 1, 2, true)});
  auto v = classify(t, DelayKind::Tick);
  REQUIRE(v.status == VerdictStatus::Undecidable);
  auto it = std::find_if(v.reasons.begin(), v.reasons.end(),
                         [](const Reason &r) { return r.rule == Rule::MultipleTests; });
  REQUIRE(it != v.reasons.end());
  CHECK(it->witness == std::vector<ChannelId>{0, 1});
  CHECK(witnesses_valid(t, v));
  auto text = format_verdict(t, v);
  CHECK(text.find("witness=a,b") != std::string::npos);
}

TEST_CASE("random topologies: forest check, monotonicity, dense subsumes discrete") {
  int undecidable_seen = 0;
  for (auto shape : {Shape::Polytree, Shape::Polyforest, Shape::Cycle, Shape::StarIn,
                     Shape::StarOut, Shape::Free}) {
    GenProfile prof;
    prof.shape = shape;
    prof.processes = {1, 6};
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
      prof.testable_budget = static_cast<std::uint32_t>(seed % 4);
      auto t = generate_topology(prof, seed);
      CAPTURE(seed);
      CAPTURE(to_string(shape));
      auto fc = is_polyforest(t);
      CHECK(fc.polyforest == forest_by_counting(t));

      auto discrete = classify(t, DelayKind::Tick);
      auto dense = classify(t, DelayKind::Dense);
      CHECK(witnesses_valid(t, discrete));
      CHECK(witnesses_valid(t, dense));
      if (discrete.status == VerdictStatus::Undecidable) {
        ++undecidable_seen;
        CHECK(dense.status == VerdictStatus::Undecidable);
      }
      CHECK(classify(t, DelayKind::None).status == discrete.status);
      if (discrete.status == VerdictStatus::Open)
        FAIL("Open verdict outside dense time");

      // adding a test never leaves Undecidable
      for (std::uint64_t k = 0; k < 3; ++k) {
        auto more = mutate(t, Mutation::AddTest, seed * 7 + k);
        if (!more)
          break;
        for (auto f : {DelayKind::Tick, DelayKind::Dense})
          if (classify(t, f).status == VerdictStatus::Undecidable)
            CHECK(classify(*more, f).status == VerdictStatus::Undecidable);
      }
      // closing a cycle always makes it undecidable
      if (auto cyc = mutate(t, Mutation::AddCycleEdge, seed)) {
        CHECK_FALSE(is_polyforest(*cyc).polyforest);
        CHECK(classify(*cyc, DelayKind::Dense).status == VerdictStatus::Undecidable);
      }
    }
  }
  CHECK(undecidable_seen > 0);
}

TEST_CASE("sender-first order respects every channel") {
  GenProfile prof;
  prof.shape = Shape::Polyforest;
  prof.processes = {1, 7};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto t = generate_topology(prof, seed);
    auto order = sender_first_order(t);
    REQUIRE(order.size() == t.processes.size());
    std::vector<std::size_t> pos(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      pos[order[i]] = i;
    for (const auto &c : t.channels)
      CHECK(pos[c.source] < pos[c.target]);
  }
  CHECK_THROWS_AS(sender_first_order(topo({"p", "q"}, {ch("a", 0, 1), ch("b", 1, 0)})), Error);
}
