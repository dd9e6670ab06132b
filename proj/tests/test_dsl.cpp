#include <doctest.h>

#include <filesystem>
#include <random>

#include "ctp/dsl.hpp"
#include "ctp/gen.hpp"
#include "support.hpp"

using namespace ctp;

static const char *kGrammarExample = R"(
system demo { delay discrete;
  msgs { m1, m2 };
  process p { init l0; final l2;
    l0 -> l1 : send(c, m1);
    l1 -> l1 : tick;
    l1 -> l2 : send(c, m2);
  }
  process q { init k0; final k2;
    k0 -> k1 : recv(c, m1);
    k1 -> k2 : recv(c, m2);
    k0 -> k0 : tick;
    k1 -> k1 : tick;
    k1 -> k1 : empty(c);
  }
  channel c : p -> q testable;
}
)";

TEST_CASE("grammar example parses to a two-process tick system") {
  auto r = dsl::parse(kGrammarExample);
  REQUIRE(r.ok());
  const auto &sys = *r.system;
  CHECK(sys.delay == DelayKind::Tick);
  CHECK(sys.process_count() == 2);
  REQUIRE(sys.topology.channels.size() == 1);
  CHECK(sys.topology.channels[0].testable);
  CHECK(sys.automata[0].transitions.size() == 3);
  // spans retained for diagnostics
  REQUIRE(sys.topology.channels[0].span);
  CHECK(sys.topology.channels[0].span->line == 16);
}

TEST_CASE("undeclared channel is a semantic error naming it") {
  auto r = dsl::parse(R"(system s { delay discrete; msgs { m };
    process p { init l0; l0 -> l0 : send(c9, m); } })");
  REQUIRE_FALSE(r.ok());
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].kind == dsl::ErrorKind::Semantic);
  CHECK(r.errors[0].message.find("c9") != std::string::npos);
  CHECK(r.errors[0].span.line == 2);
}

TEST_CASE("empty input is a syntax error at offset 0") {
  auto r = dsl::parse("");
  REQUIRE_FALSE(r.ok());
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].kind == dsl::ErrorKind::Syntax);
  CHECK(r.errors[0].span.start == 0);
  CHECK(r.errors[0].expected == std::vector<std::string>{"'system'"});
}

TEST_CASE("syntax errors recover and report several problems") {
  auto r = dsl::parse(R"(system s { delay discrete; msgs { m };
    process p { init l0; l0 -> : tick; l0 -> l0 tick; }
    channel c p -> q;
  })");
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors.size() == 3);
  for (const auto &e : r.errors)
    CHECK_FALSE(e.expected.empty());
}

TEST_CASE("flavour mismatches surface as parse errors") {
  auto r = dsl::parse(R"(system s { delay discrete;
    process p { init l0; counters { x } l0 -> l0 : inc x; } })");
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors[0].kind == dsl::ErrorKind::Semantic);

  auto dense_tick = dsl::parse("system s { delay dense; process p { init l; l -> l : tick; } }");
  CHECK_FALSE(dense_tick.ok());
}

TEST_CASE("lexical errors are located") {
  auto r = dsl::parse("system s { delay discrete; $ }");
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors[0].kind == dsl::ErrorKind::Lexical);
  CHECK(r.errors[0].span.column == 28);
}

TEST_CASE("serializer output is canonical and sorted") {
  auto sys = dsl::parse_or_throw(R"(system s { delay discrete; msgs { zz, aa };
    channel k : q -> p;
    process q { init b; final a; b -> a : send(k, zz); }
    process p { init y; final x; y -> x : recv(k, zz); } })");
  auto text = dsl::serialize(sys);
  CHECK(text == "system s {\n"
                "  delay discrete;\n"
                "  msgs { aa, zz };\n"
                "  process p {\n"
                "    locations { x, y };\n"
                "    init y;\n"
                "    final x;\n"
                "    y -> x : recv(k, zz);\n"
                "  }\n"
                "  process q {\n"
                "    locations { a, b };\n"
                "    init b;\n"
                "    final a;\n"
                "    b -> a : send(k, zz);\n"
                "  }\n"
                "  channel k : q -> p;\n"
                "}\n");
}

TEST_CASE("guards are printed exactly") {
  auto sys = dsl::parse_or_throw(R"(system s { delay dense; msgs { };
    process p { init l0; final l1; clocks { x }
      l0 -> l1 : tau when x>=1 reset {x}; } })");
  auto text = dsl::serialize(sys);
  CHECK(text.find("l0 -> l1 : tau when x >= 1 reset { x };") != std::string::npos);
}

TEST_CASE("alternatives expand to one transition each") {
  auto sys = dsl::parse_or_throw(R"(system s { delay none; msgs { };
    process p { init l0; final l2; counters { x }
      l0 -> l2 : inc x | dec x | ztest x; } })");
  CHECK(sys.automata[0].transitions.size() == 3);
}

TEST_CASE("acceptance block round-trips") {
  auto sys = dsl::parse_or_throw(R"(system s { delay dense; msgs { };
    accept { clocks any; }
    process p { init l0; final l0; } })");
  CHECK(sys.acceptance.empty_channels);
  CHECK_FALSE(sys.acceptance.zero_clocks);
  CHECK(dsl::parse_or_throw(dsl::serialize(sys)) == sys);
}

TEST_CASE("keywords may name locations") {
  auto sys = dsl::parse_or_throw(R"(system s { delay discrete; msgs { };
    process p { init init; final final; init -> final : tick; } })");
  CHECK(sys.automata[0].locations.size() == 2);
}

TEST_CASE("parse-serialize-parse is a fixpoint on the corpus") {
  int files = 0;
  for (const auto &entry : std::filesystem::directory_iterator(CTP_CORPUS_DIR)) {
    if (entry.path().extension() != ".ctp")
      continue;
    ++files;
    CAPTURE(entry.path().string());
    auto sys = testing::load_corpus(entry.path().filename().string());
    auto text = dsl::serialize(sys);
    auto again = dsl::parse(text);
    REQUIRE(again.ok());
    CHECK(*again.system == sys);
    CHECK(dsl::serialize(*again.system) == text);
  }
  CHECK(files >= 10);
}

TEST_CASE("round-trip law on generated systems") {
  for (auto flavor : {DelayKind::Tick, DelayKind::None, DelayKind::Dense}) {
    for (auto shape : {Shape::Polytree, Shape::Cycle, Shape::Free, Shape::StarIn}) {
      GenProfile prof;
      prof.flavor = flavor;
      prof.shape = shape;
      prof.processes = {1, 4};
      prof.testable_budget = 2;
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        System sys;
        try {
          sys = generate(prof, seed);
        } catch (const Error &) {
          continue;  // infeasible combination for this seed
        }
        auto text = dsl::serialize(sys);
        auto back = dsl::parse(text);
        REQUIRE_MESSAGE(back.ok(), text);
        CHECK(*back.system == sys);
      }
    }
  }
}

TEST_CASE("parser never crashes on arbitrary bytes") {
  std::mt19937_64 rng(7);
  const std::string alphabet = "system{}();,:->|&<=>#\n \tabcxyzpq01239\x01\xff";
  auto base = std::string(kGrammarExample);
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    if (i % 2 == 0) {
      std::size_t n = rng() % 80;
      for (std::size_t k = 0; k < n; ++k)
        s.push_back(i % 4 == 0 ? static_cast<char>(rng() & 0xff) : alphabet[rng() % alphabet.size()]);
    } else {
      // mutate a valid document
      s = base;
      for (int k = 0; k < 1 + static_cast<int>(rng() % 5); ++k) {
        std::size_t at = rng() % s.size();
        switch (rng() % 3) {
        case 0:
          s.erase(at, 1 + rng() % 8);
          break;
        case 1:
          s.insert(at, 1, alphabet[rng() % alphabet.size()]);
          break;
        default:
          s[at] = static_cast<char>(rng() & 0xff);
        }
        if (s.empty())
          break;
      }
    }
    auto r = dsl::parse(s);
    CHECK((r.ok() || !r.errors.empty()));
    if (r.ok())
      CHECK(validate_system(*r.system).empty());
  }
}
