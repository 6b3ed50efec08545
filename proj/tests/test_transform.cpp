#include <doctest.h>

#include <set>

#include "hmmon/errors.hpp"
#include "hmmon/inference.hpp"
#include "hmmon/synthesis.hpp"
#include "hmmon/transform.hpp"
#include "support/reference.hpp"

using namespace hmmon;
using ref::q;

namespace {

const Hmm& icy() {
  static const Hmm m = ref::icy();
  return m;
}

Rational prob_of(const Hmm& m, const std::string& from, const std::string& to) {
  Rational p = 0;
  for (const auto& tr : m.successors(*m.find(from))) {
    if (m.name(tr.to) == to) p += tr.prob;
  }
  return p;
}

StateId mdp_state(const ColoredMdp& mdp, const std::string& name) {
  for (StateId s = 0; s < mdp.states.size(); ++s) {
    if (mdp.states[s].name == name) return s;
  }
  FAIL("no MDP state " << name);
  return kNoState;
}

Rational mdp_prob(const ColoredMdp& mdp, StateId s, const std::string& action, StateId to) {
  const auto a = std::find(mdp.actions.begin(), mdp.actions.end(), action) - mdp.actions.begin();
  const MdpChoice* c = mdp.choice(s, static_cast<ActionId>(a));
  REQUIRE(c != nullptr);
  Rational p = 0;
  for (const auto& t : c->dist) {
    if (t.to == to) p += t.prob;
  }
  return p;
}

// Checks the structural invariants of a colored MDP.
void check_well_formed(const ColoredMdp& mdp) {
  std::map<Color, std::set<ActionId>> enabled;
  for (StateId s = 0; s < mdp.states.size(); ++s) {
    const MdpState& st = mdp.states[s];
    CHECK(st.color < mdp.color_count());
    CHECK_FALSE(st.choices.empty());
    std::set<ActionId> acts;
    for (const auto& c : st.choices) {
      acts.insert(c.action);
      Rational total = 0;
      for (const auto& t : c.dist) {
        CHECK(t.prob > 0);
        CHECK(t.to < mdp.states.size());
        total += t.prob;
        // Mass only moves forward in color, back to the start, or stays in a sink.
        const Color to = mdp.states[t.to].color;
        CHECK((to > st.color || t.to == mdp.initial || (t.to == s && st.color == mdp.horizon + 1)));
      }
      CHECK(total == 1);
    }
    auto [it, fresh] = enabled.emplace(st.color, acts);
    if (!fresh) CHECK(it->second == acts);
  }
}

}  // namespace

TEST_CASE("product with monitor B in missed-alarm mode") {
  const ProductHmm p = product(icy(), ref::icy_monitor(false), AlarmMode::missed_alarm);
  CHECK(p.model.size() == 6);
  CHECK(p.model.name(p.model.initial()) == "(q_d,s1)");
  CHECK(prob_of(p.model, "(q_d,s1)", "(q_i,s2)") == q(9, 10));
  for (StateId s = 0; s < p.model.size(); ++s) {
    const bool third = p.model.name(s).find(",s3)") != std::string::npos;
    CHECK(p.alarm[s] == third);
    CHECK(p.model.risk(s) == icy().risk(p.origin[s].first));
    CHECK(p.model.obs(s) == icy().obs(p.origin[s].first));
  }
}

TEST_CASE("false-alarm product with an all-accepting monitor copies the model") {
  DfaBuilder d(Alphabet({"dry", "icy"}));
  d.add_state("s", true);
  d.set_initial("s");
  d.add_transition("s", "dry", "s");
  d.add_transition("s", "icy", "s");
  const Dfa all = std::move(d).build();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Hmm m = random_hmm(5, 2, seed);
    DfaBuilder e(m.observations());
    e.add_state("s", true);
    e.set_initial("s");
    for (Symbol z = 0; z < 2; ++z) e.add_transition(0, z, 0);
    const ProductHmm p = product(m, std::move(e).build(), AlarmMode::false_alarm);
    CHECK(p.model.size() <= m.size());
    for (StateId s = 0; s < p.model.size(); ++s) CHECK(p.alarm[s]);
    for (const auto& [trace, entry] : ref::paths(m, 4)) {
      CHECK(forward_filter(p.model, trace).trace_prob == entry.prob);
    }
  }
  const ProductHmm p = product(icy(), all, AlarmMode::false_alarm);
  CHECK(p.model.size() == 3);
}

TEST_CASE("product preserves trace probability and risk, and alarms follow the monitor") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const ref::Instance in = ref::random_instance(seed);
    for (AlarmMode mode : {AlarmMode::missed_alarm, AlarmMode::false_alarm}) {
      const ProductHmm p = product(in.model, in.monitor, mode);
      for (const auto& [trace, e] : ref::paths(in.model, 4)) {
        const Belief b = forward_filter(p.model, trace);
        CHECK(b.trace_prob == e.prob);
        if (e.prob == 0) continue;
        CHECK(trace_risk(p.model, trace) == e.risk());
        const bool acc = ref::accepts(in.monitor, in.model.observations(), trace);
        for (const auto& [s, w] : b.state) {
          CHECK(p.alarm[s] == (mode == AlarmMode::missed_alarm ? !acc : acc));
        }
      }
    }
  }
}

TEST_CASE("monitor A alarms match rejection on all traces up to length 4") {
  const Dfa a = ref::icy_monitor(true);
  const ProductHmm p = product(icy(), a, AlarmMode::missed_alarm);
  for (const auto& [trace, e] : ref::paths(icy(), 4)) {
    for (const auto& [s, w] : forward_filter(p.model, trace).state) {
      CHECK(p.alarm[s] == !ref::accepts(a, trace));
    }
  }
}

TEST_CASE("unrolling the monitor B product") {
  const ProductHmm p = product(icy(), ref::icy_monitor(false), AlarmMode::missed_alarm);
  const UnrolledHmm u = unroll_with_risk(p, 3);
  CHECK(u.risk_max == 1);
  CHECK(u.model.name(u.model.initial()) == "1:(q_d,s1)");
  CHECK(prob_of(u.model, "3:(q_i,s3)", "t_safe") == 1);
  CHECK(prob_of(u.model, "3:(q_c,s3)", "t_alrm") == 1);
  CHECK(prob_of(u.model, "3:(q_d,s1)", "t_ignr") == 1);
  CHECK(prob_of(u.model, "1:(q_d,s1)", "2:(q_i,s2)") == q(9, 10));
  CHECK(u.model.observations().name(u.end_symbol) == "$end");
  CHECK(u.model.observations().name(u.ignore_symbol) == "$ignore");
  CHECK(u.model.name(u.alarm_sink) == "t_alrm");
  for (StateId s = 0; s < u.model.size(); ++s) {
    Rational total = 0;
    for (const auto& t : u.model.successors(s)) total += t.prob;
    CHECK(total == 1);
  }
}

TEST_CASE("risk equal to the maximum sends every last-step alarm to t_alrm") {
  HmmBuilder b(Alphabet({"a", "b"}));
  b.add_state("x", "a", q(1, 2));
  b.add_state("y", "b", q(1, 2));
  b.set_initial("x");
  b.add_transition("x", "y", q(1, 3));
  b.add_transition("x", "x", q(2, 3));
  b.add_transition("y", "x", 1);
  const Hmm m = std::move(b).build();
  DfaBuilder d(m.observations());
  d.add_state("r");
  d.set_initial("r");
  const ProductHmm p = product(m, std::move(d).build(), AlarmMode::missed_alarm);
  const UnrolledHmm u = unroll_with_risk(p, 4);
  for (StateId s = 0; s < u.model.size(); ++s) {
    if (u.step[s] != 4) continue;
    REQUIRE(u.model.successors(s).size() == 1);
    CHECK(u.model.successors(s)[0].to == u.alarm_sink);
  }
}

TEST_CASE("unrolling needs some risk") {
  HmmBuilder b(Alphabet({"a"}));
  b.add_state("x", "a");
  b.set_initial("x");
  b.add_transition("x", "x", 1);
  const Hmm m = std::move(b).build();
  DfaBuilder d(m.observations());
  d.add_state("r");
  d.set_initial("r");
  const ProductHmm p = product(m, std::move(d).build(), AlarmMode::missed_alarm);
  CHECK_THROWS_AS(unroll_with_risk(p, 3), DegenerateRisk);
}

TEST_CASE("unrolled alarm mass equals normalized risk") {
  // For each length-h trace, the mass reaching t_alrm through it is
  // P(trace) * R(trace) / rMax when the trace raises an alarm.
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ref::Instance in = ref::random_instance(seed);
    const ProductHmm p = product(in.model, in.monitor, AlarmMode::missed_alarm);
    if (p.model.max_risk() == 0) continue;
    const unsigned h = in.th.horizon;
    const UnrolledHmm u = unroll_with_risk(p, h);
    for (const auto& [trace, e] : ref::paths(in.model, h)) {
      if (trace.size() != h || e.prob == 0) continue;
      const Belief b = forward_filter(u.model, trace);
      Rational alarm = 0;
      Rational safe = 0;
      for (const auto& [s, w] : b.state) {
        for (const auto& t : u.model.successors(s)) {
          if (t.to == u.alarm_sink) alarm += w * t.prob;
          if (t.to == u.safe_sink) safe += w * t.prob;
        }
      }
      if (ref::accepts(in.monitor, in.model.observations(), trace)) {
        CHECK(alarm + safe == 0);
      } else {
        CHECK(alarm == e.risk() / u.risk_max);
        CHECK(alarm + safe == 1);
      }
    }
  }
}

TEST_CASE("exact-horizon MDP of the monitor B product") {
  const ProductHmm p = product(icy(), ref::icy_monitor(false), AlarmMode::missed_alarm);
  const ColoredMdp mdp = build_colored_mdp(unroll_with_risk(p, 3), HorizonVariant::exact);
  CHECK(mdp.states[mdp.initial].name == "1:(q_d,s1)");
  CHECK(mdp.states[mdp.target].name == "t_alrm");
  CHECK(mdp.states[mdp.other_sink].name == "t_safe");
  const StateId i2 = mdp_state(mdp, "2:(q_i,s2)");
  CHECK(mdp_prob(mdp, i2, "dry", mdp_state(mdp, "3:(q_d,s1)")) == q(1, 2));
  CHECK(mdp_prob(mdp, i2, "dry", mdp.initial) == q(1, 2));
  const StateId c2 = mdp_state(mdp, "2:(q_c,s2)");
  CHECK(mdp_prob(mdp, c2, "dry", mdp.initial) == 1);
  CHECK(mdp.actions.size() == 3);
  CHECK(mdp.color_count() == 5);
  for (const auto& st : mdp.states) CHECK(st.name != "t_ignr");
  check_well_formed(mdp);
}

TEST_CASE("colored MDPs are well formed") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const ref::Instance in = ref::random_instance(seed);
    for (AlarmMode mode : {AlarmMode::missed_alarm, AlarmMode::false_alarm}) {
      const ProductHmm p = product(in.model, in.monitor, mode);
      if (p.model.max_risk() == 0) continue;
      const unsigned h = in.th.horizon;
      check_well_formed(build_colored_mdp(unroll_with_risk(p, h), HorizonVariant::exact));
      check_well_formed(build_colored_mdp(unroll_with_risk(p, h, UnrollEntry::every_step), HorizonVariant::up_to));
    }
  }
}

TEST_CASE("up-to-horizon MDP at h = 1 adds only the start state") {
  const ProductHmm p = product(icy(), ref::icy_monitor(false), AlarmMode::missed_alarm);
  const ColoredMdp exact = build_colored_mdp(unroll_with_risk(p, 1), HorizonVariant::exact);
  const ColoredMdp upto = build_colored_mdp(unroll_with_risk(p, 1, UnrollEntry::every_step), HorizonVariant::up_to);
  CHECK(upto.states.size() == exact.states.size() + 1);
  const MdpState& start = upto.states[upto.initial];
  CHECK(start.color == 0);
  REQUIRE(start.choices.size() == 1);
  CHECK(upto.actions[start.choices[0].action] == "len1");
  for (StateId s = 0; s < exact.states.size(); ++s) {
    const MdpState& a = exact.states[s];
    const MdpState& b = upto.states[s + 1];
    CHECK(a.name == b.name);
    CHECK(a.color == b.color);
    REQUIRE(a.choices.size() == b.choices.size());
    for (std::size_t c = 0; c < a.choices.size(); ++c) {
      CHECK(a.choices[c].action == b.choices[c].action);
      REQUIRE(a.choices[c].dist.size() == b.choices[c].dist.size());
      for (std::size_t k = 0; k < a.choices[c].dist.size(); ++k) {
        const auto& x = a.choices[c].dist[k];
        const auto& y = b.choices[c].dist[k];
        CHECK(x.prob == y.prob);
        // Resets land on the start state instead of the first step.
        CHECK((x.to + 1 == y.to || (x.to == exact.initial && y.to == upto.initial)));
      }
    }
  }
}

TEST_CASE("trace-consistent policies reach the target with the normalized risk") {
  // Solves the induced cyclic chain by linear algebra, independent of the
  // single-pass evaluator.
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    const ref::Instance in = ref::random_instance(seed);
    for (AlarmMode mode : {AlarmMode::missed_alarm, AlarmMode::false_alarm}) {
      const ProductHmm p = product(in.model, in.monitor, mode);
      const Rational r_max = p.model.max_risk();
      if (r_max == 0) continue;
      const unsigned h = std::min(in.th.horizon, 4u);
      const ColoredMdp exact = build_colored_mdp(unroll_with_risk(p, h), HorizonVariant::exact);
      const ColoredMdp upto = build_colored_mdp(unroll_with_risk(p, h, UnrollEntry::every_step), HorizonVariant::up_to);
      for (const auto& [trace, e] : ref::paths(in.model, h)) {
        if (e.prob == 0) continue;
        const bool acc = ref::accepts(in.monitor, in.model.observations(), trace);
        const bool alarm = mode == AlarmMode::missed_alarm ? !acc : acc;
        Rational expect = e.risk() / r_max;
        if (mode == AlarmMode::false_alarm) expect = 1 - expect;
        if (!alarm) expect = 0;
        for (const ColoredMdp* mdp : {&upto, &exact}) {
          if (mdp == &exact && trace.size() != h) continue;
          const Policy pol = trace_consistent_policy(*mdp, trace);
          CHECK(ref::reach_probability(*mdp, pol) == expect);
          CHECK(evaluate_policy(*mdp, pol).conditional() == expect);
          CHECK(evaluate_policy(*mdp, pol).feasible() == alarm);
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("reserved observation names are refused") {
  HmmBuilder b(Alphabet({"a", "$end"}));
  b.add_state("x", "a", 1);
  b.set_initial("x");
  b.add_transition("x", "x", 1);
  const Hmm m = std::move(b).build();
  DfaBuilder d(m.observations());
  d.add_state("r");
  d.set_initial("r");
  const ProductHmm p = product(m, std::move(d).build(), AlarmMode::missed_alarm);
  CHECK_THROWS_AS(unroll_with_risk(p, 2), ValidationError);
}

TEST_CASE("MDP export") {
  const ProductHmm p = product(icy(), ref::icy_monitor(false), AlarmMode::missed_alarm);
  const ColoredMdp mdp = build_colored_mdp(unroll_with_risk(p, 3, UnrollEntry::every_step), HorizonVariant::up_to);
  const std::string json = to_json(mdp);
  CHECK(json.find("\"kind\": \"colored-mdp\"") != std::string::npos);
  CHECK(json.find("\"start\"") != std::string::npos);
  CHECK(json.find("len3") != std::string::npos);
  CHECK(to_dot(mdp).rfind("digraph", 0) == 0);
}
