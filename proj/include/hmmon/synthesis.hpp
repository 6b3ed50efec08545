#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>

#include "hmmon/transform.hpp"

namespace hmmon {

inline constexpr ActionId kNoAction = static_cast<ActionId>(-1);

// One action per color, indexed by color. Colors without states hold
// kNoAction; the sink color always holds the end action.
using Policy = std::vector<ActionId>;

// Mass reaching the target sink (a) and the other sink (b) in one pass from
// the initial state. The objective is a / (a + b).
struct PolicyMass {
  Rational target;
  Rational other;

  bool feasible() const { return target + other > 0; }
  Rational conditional() const;  // 0 when infeasible
};

struct SynthesisResult {
  Rational value;
  Policy witness;
  Trace trace;
  std::uint64_t explored = 0;
};

struct ThresholdResult {
  std::optional<Policy> witness;
  Rational value;  // conditional of the witness, 0 without one
  std::uint64_t explored = 0;
};

struct SolveOptions {
  unsigned jobs = 1;
  // One JSON object per search node when set.
  std::ostream* diagnostics = nullptr;
};

// Exact maximum of a / (a + b) over color-consistent policies. Among optimal
// policies the lexicographically smallest action sequence (by color) wins.
// Throws Infeasible when no policy reaches a sink.
SynthesisResult solve_max(const ColoredMdp& mdp, const SolveOptions& options = {});

// First policy found whose conditional is > lambda (strict) or >= lambda.
ThresholdResult solve_threshold(const ColoredMdp& mdp, const Rational& lambda, bool strict,
                                const SolveOptions& options = {});

// Throws std::invalid_argument if the policy picks a disabled action.
PolicyMass evaluate_policy(const ColoredMdp& mdp, const Policy& policy);

// The first observation is always that of the model's initial state; the
// policy supplies the rest. Throws std::invalid_argument on a malformed policy.
Trace policy_to_trace(const ColoredMdp& mdp, const Policy& policy);

// Policy selecting the trace's observations color by color. The exact
// variant needs |trace| = horizon, the up-to variant 1 <= |trace| <= horizon.
// Throws std::invalid_argument if the trace does not fit the MDP.
Policy trace_consistent_policy(const ColoredMdp& mdp, const Trace& trace);

// Optimistic value of a partial policy fixing colors [0, assigned): the
// a_max / (a_max + b_min) relaxation used for pruning. Exposed for testing.
Rational policy_bound(const ColoredMdp& mdp, const Policy& prefix);

}  // namespace hmmon
