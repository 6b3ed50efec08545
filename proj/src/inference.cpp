#include "hmmon/inference.hpp"

#include <stdexcept>

#include "hmmon/errors.hpp"

namespace hmmon {

Belief forward_filter(const Hmm& model, const Trace& trace) {
  Belief belief;
  for (Symbol z : trace) {
    if (z >= model.observations().size()) throw std::invalid_argument("trace symbol outside the alphabet");
  }
  if (trace.empty()) {
    belief.state.emplace(model.initial(), 1);
    belief.trace_prob = 1;
    return belief;
  }
  if (model.obs(model.initial()) != trace.front()) {
    belief.trace_prob = 0;
    return belief;
  }

  // Unnormalized weights: weight[s] = sum of P(path) over paths reading the
  // prefix and ending in s. Normalization happens once, at the end.
  std::map<StateId, Rational> weight{{model.initial(), Rational(1)}};
  for (std::size_t i = 1; i < trace.size() && !weight.empty(); ++i) {
    std::map<StateId, Rational> next;
    for (const auto& [s, w] : weight) {
      for (const auto& t : model.successors(s)) {
        if (model.obs(t.to) != trace[i]) continue;
        next[t.to] += w * t.prob;
      }
    }
    weight = std::move(next);
  }

  Rational total = 0;
  for (const auto& [s, w] : weight) total += w;
  belief.trace_prob = total;
  if (total == 0) return belief;
  for (auto& [s, w] : weight) {
    Rational p = w / total;
    p.canonicalize();
    belief.state.emplace(s, std::move(p));
  }
  return belief;
}

Rational trace_risk(const Hmm& model, const Trace& trace) {
  const Belief belief = forward_filter(model, trace);
  if (belief.trace_prob == 0) {
    throw NotInLanguage("trace '" + format_trace(model.observations(), trace) + "' has probability 0");
  }
  Rational risk = 0;
  for (const auto& [s, p] : belief.state) risk += p * model.risk(s);
  risk.canonicalize();
  return risk;
}

MqVerdict membership_query(const Hmm& model, const Trace& trace, const Rational& threshold, unsigned horizon) {
  MqVerdict verdict;
  const Belief belief = forward_filter(model, trace);
  if (belief.trace_prob == 0) return verdict;
  Rational risk = 0;
  for (const auto& [s, p] : belief.state) risk += p * model.risk(s);
  risk.canonicalize();
  if (trace.size() <= horizon && risk > threshold) verdict.label = MqLabel::unsafe;
  verdict.risk = std::move(risk);
  return verdict;
}

}  // namespace hmmon
