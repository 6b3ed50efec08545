#include <doctest.h>

#include <json.hpp>

#include "hmmon/inference.hpp"
#include "hmmon/learner.hpp"
#include "hmmon/oracle.hpp"
#include "support/reference.hpp"

using namespace hmmon;
using ref::q;

namespace {

const Hmm& icy() {
  static const Hmm m = ref::icy();
  return m;
}

Trace t(const char* s) { return ref::tr(icy().observations(), s); }

// True iff the monitor accepts exactly the traces of length 1..h with risk
// above lambda.
bool exact_on_language(const Hmm& m, const Dfa& a, const Rational& lambda, unsigned h) {
  for (const auto& [trace, e] : ref::paths(m, h)) {
    if (e.prob == 0) continue;
    if (ref::accepts(a, m.observations(), trace) != (e.risk() > lambda)) return false;
  }
  return true;
}

LearnOptions seeded(std::uint64_t seed) {
  LearnOptions o;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("observation table learns a counting language") {
  const Alphabet z({"a", "b"});
  auto member = [](const Trace& w) { return std::count(w.begin(), w.end(), Symbol{0}) % 3 == 0; };
  ObservationTable table(2, member);
  table.close();
  CHECK(table.is_closed());
  for (int round = 0; round < 10; ++round) {
    const Dfa hyp = table.hypothesis(z);
    std::optional<Trace> ce;
    for (const auto& w : ref::words(2, 6)) {
      if (ref::accepts(hyp, w) != member(w)) {
        ce = w;
        break;
      }
    }
    if (!ce) break;
    table.add_counterexample(*ce, z);
    CHECK(table.is_closed());
  }
  const Dfa hyp = table.hypothesis(z);
  CHECK(hyp.size() == 3);
  CHECK(table.is_consistent());
  for (const auto& w : ref::words(2, 8)) CHECK(ref::accepts(hyp, w) == member(w));
  CHECK_THROWS(table.add_counterexample({0}, z));
}

TEST_CASE("learning the running example at 1/4") {
  const LearnReport r = learn_monitor(icy(), {q(1, 4), q(1, 4), q(1, 4), 3}, seeded(1));
  CHECK(r.status == LearnStatus::learned);
  CHECK(r.monitor.accepts(t("dry,icy,icy")));
  CHECK_FALSE(r.monitor.accepts(t("dry,icy")));
  CHECK(exact_on_language(icy(), r.monitor, q(1, 4), 3));
  CHECK(check_monitor(icy(), r.monitor, {q(1, 4), q(1, 4), q(1, 4), 3}).correct());
  CHECK(r.eq_count == r.rounds.size() + 1);
  CHECK(r.mq_count > 0);
  for (std::size_t i = 1; i < r.rounds.size(); ++i) {
    CHECK(r.rounds[i].hypothesis_states > r.rounds[i - 1].hypothesis_states);
  }
}

TEST_CASE("a riskless model needs one empty hypothesis") {
  HmmBuilder b(Alphabet({"a", "b"}));
  b.add_state("x", "a");
  b.add_state("y", "b");
  b.set_initial("x");
  b.add_transition("x", "y", q(1, 2));
  b.add_transition("x", "x", q(1, 2));
  b.add_transition("y", "x", 1);
  const Hmm m = std::move(b).build();
  const LearnReport r = learn_monitor(m, {0, 0, 0, 4});
  CHECK(r.status == LearnStatus::learned);
  CHECK(r.monitor.size() == 1);
  CHECK(r.eq_count == 1);
  CHECK(r.rounds.empty());
  for (const auto& w : ref::words(2, 4)) CHECK_FALSE(ref::accepts(r.monitor, w));
}

TEST_CASE("conformance testing") {
  std::mt19937_64 rng(3);
  const auto ce = conformance_counterexample(icy(), ref::icy_monitor(false), q(1, 4), 3, 100, rng);
  REQUIRE(ce.has_value());
  const bool unsafe = membership_query(icy(), *ce, q(1, 4), 3).label == MqLabel::unsafe;
  CHECK(unsafe != ref::accepts(ref::icy_monitor(false), *ce));

  const LearnReport exact = learn_monitor(icy(), {q(1, 4), q(1, 4), q(1, 4), 3}, seeded(2));
  CHECK_FALSE(conformance_counterexample(icy(), exact.monitor, q(1, 4), 3, 500, rng).has_value());
  CHECK_FALSE(conformance_counterexample(icy(), ref::icy_monitor(false), q(1, 4), 3, 0, rng).has_value());
}

TEST_CASE("samples are traces of the model") {
  std::mt19937_64 rng(9);
  const Hmm m = random_hmm(5, 3, 4);
  const auto table = ref::paths(m, 4);
  for (int i = 0; i < 200; ++i) {
    const Trace s = sample_trace(m, 4, rng);
    CHECK(s.size() >= 1);
    CHECK(s.size() <= 4);
    REQUIRE(table.count(s));
    CHECK(table.at(s).prob > 0);
  }
}

TEST_CASE("equivalence queries") {
  std::mt19937_64 rng(0);
  const Thresholds th{q(1, 4), q(1, 4), q(1, 4), 3};
  const EquivalenceResult b = equivalence_query(icy(), ref::icy_monitor(false), th, {}, rng);
  REQUIRE(b.counterexample.has_value());
  const Rational r = trace_risk(icy(), *b.counterexample);
  const bool acc = ref::accepts(ref::icy_monitor(false), *b.counterexample);
  CHECK(((acc && r < th.safe) || (!acc && r > th.unsafe)));

  CHECK_FALSE(equivalence_query(icy(), ref::icy_monitor(true), th, {}, rng).counterexample.has_value());

  // Without samples the verifier supplies the counterexample.
  const EquivalenceResult v = equivalence_query(icy(), ref::icy_monitor(false), th, {0, 0}, rng);
  REQUIRE(v.counterexample.has_value());
  CHECK(v.source == CounterexampleSource::verification);
}

TEST_CASE("inconclusive band") {
  const Thresholds th{q(1, 10), q(3, 10), q(7, 20), 5};
  const LearnReport r = learn_monitor(icy(), th, seeded(7));
  CHECK(r.status == LearnStatus::learned);
  CHECK(check_monitor(icy(), r.monitor, th).correct());
  CHECK(brute_force_verdict(icy(), r.monitor, th).correct());
}

TEST_CASE("learned monitors are correct on random models") {
  const Rational values[] = {q(0), q(1, 10), q(1, 4), q(1, 2)};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Hmm m = random_hmm(1 + seed % 5, 1 + seed % 3, seed);
    const Rational lambda = values[seed % 4];
    const unsigned h = 1 + seed % 4;
    const LearnReport r = learn_monitor(m, {lambda, lambda, lambda, h}, seeded(seed));
    REQUIRE(r.status == LearnStatus::learned);
    CHECK(exact_on_language(m, r.monitor, lambda, h));
  }
}

TEST_CASE("same seed, same report") {
  const Thresholds th{q(3, 10), q(3, 10), q(3, 10), 5};
  const std::string a = to_json(learn_monitor(icy(), th, seeded(42)), icy().observations());
  const std::string b = to_json(learn_monitor(icy(), th, seeded(42)), icy().observations());
  CHECK(a == b);
}

TEST_CASE("state limit aborts") {
  LearnOptions o;
  o.limits.max_states = 1;
  const LearnReport r = learn_monitor(icy(), {q(1, 4), q(1, 4), q(1, 4), 3}, o);
  CHECK(r.status == LearnStatus::aborted);
  CHECK_FALSE(r.abort_reason.empty());
  CHECK(r.monitor.size() > 1);

  LearnOptions rounds;
  rounds.limits.max_rounds = 0;
  CHECK(learn_monitor(icy(), {q(1, 4), q(1, 4), q(1, 4), 3}, rounds).status == LearnStatus::aborted);
}

TEST_CASE("report JSON") {
  const LearnReport r = learn_monitor(icy(), {q(1, 4), q(1, 4), q(1, 4), 3}, seeded(1));
  const auto doc = nlohmann::json::parse(to_json(r, icy().observations()));
  CHECK(doc["status"] == "learned");
  CHECK(doc["monitorStates"] == r.monitor.size());
  CHECK(doc["eqCount"] == r.eq_count);
  CHECK(doc["rounds"].size() == r.rounds.size());
  CHECK_FALSE(doc.contains("ms"));
  CHECK_FALSE(doc.contains("abortReason"));
}
