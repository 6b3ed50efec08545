#include <doctest.h>

#include <random>

#include "hmmon/errors.hpp"
#include "hmmon/model_io.hpp"
#include "support/reference.hpp"

using namespace hmmon;
using ref::q;

TEST_CASE("rationals parse exactly and print canonically") {
  CHECK(parse_rational("9/10") == q(9, 10));
  CHECK(parse_rational("-2/4") == q(-1, 2));
  CHECK(parse_rational("3") == 3);
  CHECK(to_string(q(2, 4)) == "1/2");
  CHECK(to_string(q(4, 2)) == "2");
  CHECK_THROWS_AS(parse_rational("0.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational(""), std::invalid_argument);
}

TEST_CASE("icy fixture loads with the expected structure") {
  const Hmm m = load_hmm(ref::data("icy.hmm.json"));
  CHECK(m == ref::icy());
  REQUIRE(m.size() == 3);
  CHECK(m.name(m.initial()) == "q_d");
  const StateId qc = *m.find("q_c");
  CHECK(m.risk(qc) == 1);
  CHECK(m.risk(*m.find("q_i")) == 0);
  CHECK(m.observations().name(m.obs(qc)) == "icy");
  CHECK(m.max_risk() == 1);
  CHECK(m.transition_count() == 6);
}

TEST_CASE("monitor fixtures") {
  const Dfa a = load_dfa(ref::data("monitorA.dfa.json"));
  const Dfa b = load_dfa(ref::data("monitorB.dfa.json"));
  CHECK(a == ref::icy_monitor(true));
  CHECK(b == ref::icy_monitor(false));
  CHECK(a.size() == 3);
  CHECK(a.accepting(*a.find("s3")));
  CHECK_FALSE(a.accepting(*a.find("s1")));
  const Alphabet& z = a.alphabet();
  CHECK(a.accepts(ref::tr(z, "dry,icy,icy")));
  CHECK_FALSE(a.accepts({}));
  CHECK_FALSE(b.accepts(ref::tr(z, "dry,icy,icy")));
  CHECK(b.accepts(ref::tr(z, "dry")));
}

TEST_CASE("outgoing mass must be exactly one") {
  const std::string doc = R"({"kind":"hmm","observations":["a"],
    "states":[{"name":"x","obs":"a","risk":"0"},{"name":"y","obs":"a","risk":"1"}],
    "initial":"x",
    "transitions":[{"from":"x","to":"y","prob":"1/4"},{"from":"x","to":"x","prob":"1/4"},
                   {"from":"y","to":"y","prob":"1"}]})";
  CHECK_THROWS_AS(parse_hmm(doc), ValidationError);
}

TEST_CASE("malformed documents are parse errors") {
  CHECK_THROWS_AS(parse_hmm("{"), ParseError);
  CHECK_THROWS_AS(parse_hmm(R"({"kind":"hmm"})"), ParseError);
  const std::string decimal = R"({"kind":"hmm","observations":["a"],
    "states":[{"name":"x","obs":"a","risk":"0"}],"initial":"x",
    "transitions":[{"from":"x","to":"x","prob":"1.0"}]})";
  CHECK_THROWS(parse_hmm(decimal));
}

TEST_CASE("invalid models are rejected") {
  SUBCASE("negative risk") {
    HmmBuilder b(Alphabet({"a"}));
    b.add_state("x", "a", q(-1, 2));
    b.set_initial("x");
    b.add_transition("x", "x", 1);
    CHECK_THROWS_AS(std::move(b).build(), ValidationError);
  }
  SUBCASE("unknown observation") {
    HmmBuilder b(Alphabet({"a"}));
    CHECK_THROWS(b.add_state("x", "b"));
  }
  SUBCASE("duplicate names") {
    HmmBuilder b(Alphabet({"a"}));
    b.add_state("x", "a");
    CHECK_THROWS(b.add_state("x", "a"));
  }
  SUBCASE("missing initial state") {
    DfaBuilder d(Alphabet({"a"}));
    d.add_state("s");
    CHECK_THROWS(std::move(d).build());
  }
}

TEST_CASE("complement of the empty language is everything") {
  DfaBuilder d(Alphabet({"a", "b"}));
  d.add_state("s");
  d.set_initial("s");
  const Dfa none = std::move(d).build();
  const Dfa all = none.complement();
  CHECK(all.is_total());
  for (const auto& w : ref::words(2, 5)) {
    CHECK_FALSE(ref::accepts(none, w));
    CHECK(ref::accepts(all, w));
  }
}

TEST_CASE("complement flips membership on every short word") {
  const Dfa a = ref::icy_monitor(true);
  CHECK_FALSE(a.complement().accepts(ref::tr(a.alphabet(), "dry,icy,icy")));
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const unsigned k = 1 + seed % 3;
    std::vector<std::string> names;
    for (unsigned i = 0; i < k; ++i) names.push_back("z" + std::to_string(i));
    const Dfa d = random_dfa(Alphabet(names), 1 + seed % 4, seed);
    const Dfa c = d.complement();
    for (const auto& w : ref::words(k, 6)) {
      CHECK(ref::accepts(c, w) != ref::accepts(d, w));
    }
  }
}

TEST_CASE("partial transitions reject and completion preserves the language") {
  DfaBuilder d(Alphabet({"a", "b"}));
  d.add_state("s", true);
  d.add_state("t", true);
  d.set_initial("s");
  d.add_transition("s", "a", "t");
  const Dfa p = std::move(d).build();
  CHECK_FALSE(p.is_total());
  CHECK_FALSE(p.run({1}).has_value());
  const Dfa c = p.completed();
  CHECK(c.is_total());
  CHECK(c.size() == 3);
  for (const auto& w : ref::words(2, 4)) CHECK(c.accepts(w) == ref::accepts(p, w));
  CHECK(p.accepts({0}));
  CHECK_FALSE(p.accepts({0, 0}));
}

TEST_CASE("JSON round trips") {
  const Hmm m = ref::icy();
  CHECK(parse_hmm(to_json(m)) == m);
  CHECK(to_json(parse_hmm(to_json(m))) == to_json(m));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Hmm r = random_hmm(5, 3, seed);
    CHECK(parse_hmm(to_json(r)) == r);
    const Dfa d = random_dfa(r.observations(), 4, seed);
    CHECK(parse_dfa(to_json(d)) == d);
  }
  const Model any = parse_model(to_json(ref::icy_monitor(false)));
  CHECK(std::holds_alternative<Dfa>(any));
}

TEST_CASE("DOT output names every state") {
  const std::string hmm = to_dot(ref::icy());
  CHECK(hmm.rfind("digraph", 0) == 0);
  for (const char* s : {"q_d", "q_i", "q_c", "9/10"}) CHECK(hmm.find(s) != std::string::npos);
  const std::string dfa = to_dot(ref::icy_monitor(true));
  for (const char* s : {"s1", "s2", "s3", "doublecircle"}) CHECK(dfa.find(s) != std::string::npos);
}

TEST_CASE("monitor alignment") {
  const Hmm m = ref::icy();
  DfaBuilder d(Alphabet({"icy", "dry"}));
  d.add_state("s", false);
  d.add_state("t", true);
  d.set_initial("s");
  d.add_transition("s", "icy", "t");
  d.add_transition("s", "dry", "s");
  const Dfa aligned = align_monitor(m, std::move(d).build());
  CHECK(aligned.alphabet() == m.observations());
  CHECK(aligned.accepts(ref::tr(m.observations(), "dry,icy")));
  CHECK_FALSE(aligned.accepts(ref::tr(m.observations(), "dry,dry")));

  DfaBuilder other(Alphabet({"dry", "wet"}));
  other.add_state("s");
  other.set_initial("s");
  CHECK_THROWS_AS(align_monitor(m, std::move(other).build()), AlphabetMismatch);
}

TEST_CASE("thresholds are ordered") {
  CHECK_NOTHROW(Thresholds{q(1, 10), q(3, 10), q(7, 20), 3}.validate());
  CHECK_THROWS_AS(Thresholds({q(1, 2), q(1, 4), q(1, 2), 3}).validate(), ValidationError);
  CHECK_THROWS_AS(Thresholds({q(0), q(0), q(0), 0}).validate(), ValidationError);
  CHECK_THROWS_AS(Thresholds({q(-1), q(0), q(0), 1}).validate(), ValidationError);
}

TEST_CASE("trace text") {
  const Alphabet z({"dry", "icy"});
  CHECK(format_trace(z, {0, 1, 1}) == "dry,icy,icy");
  CHECK(format_trace(z, {}) == "");
  CHECK(parse_trace(z, "") == Trace{});
  CHECK_THROWS_AS(parse_trace(z, "dry,snow"), std::invalid_argument);
}
