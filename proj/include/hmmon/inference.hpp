#pragma once

#include <map>
#include <optional>

#include "hmmon/model.hpp"

namespace hmmon {

// Filtering result for one trace: P(state | trace) for every state with
// positive weight, and the unconditional trace probability.
struct Belief {
  std::map<StateId, Rational> state;
  Rational trace_prob;
};

// Exact forward filtering. A trace outside L(M) yields trace_prob = 0 and an
// empty belief. The empty trace is read as the single length-0 path at the
// initial state.
Belief forward_filter(const Hmm& model, const Trace& trace);

// Expected end-state risk conditioned on the trace.
// Throws NotInLanguage when the trace has probability 0.
Rational trace_risk(const Hmm& model, const Trace& trace);

enum class MqLabel { safe, unsafe };

struct MqVerdict {
  MqLabel label = MqLabel::safe;
  std::optional<Rational> risk;  // absent when the trace is not in L(M)
};

// Unsafe iff the trace is in L(M), no longer than the horizon, and its risk
// strictly exceeds `threshold`. Total on all traces over the alphabet.
MqVerdict membership_query(const Hmm& model, const Trace& trace, const Rational& threshold, unsigned horizon);

}  // namespace hmmon
