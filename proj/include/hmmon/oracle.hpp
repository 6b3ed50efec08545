#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hmmon/model.hpp"
#include "hmmon/verifier.hpp"

namespace hmmon {

struct TraceEntry {
  Rational prob;
  Rational risk;
};

// Every trace of length 1..h with positive probability, ordered by symbol id.
using TraceTable = std::map<Trace, TraceEntry>;

struct EnumerateOptions {
  std::uint64_t budget = 1'000'000;  // path prefixes visited
  unsigned jobs = 1;
};

// Explicit path enumeration; does not use filtering.
// Throws BudgetExceeded once more than `budget` path prefixes are visited.
TraceTable enumerate_trace_risks(const Hmm& model, unsigned horizon, const EnumerateOptions& options = {});

// "trace,prob,risk" rows; traces are quoted since they contain commas.
std::string to_csv(const TraceTable& table, const Alphabet& alphabet);

// Reference verdict from the trace table. Missed alarms take priority over
// false alarms; within a kind the shortest, then lexicographically first
// trace is reported.
Verdict brute_force_verdict(const Hmm& model, const Dfa& monitor, const Thresholds& thresholds,
                            const EnumerateOptions& options = {});

struct CnfFormula {
  unsigned variables = 0;
  std::vector<std::vector<int>> clauses;  // signed 1-based literals

  // Throws ValidationError: no clauses, an empty or wider-than-3 clause, or a
  // literal outside 1..variables.
  void validate() const;
  // Bit i of `assignment` is the value of variable i+1.
  unsigned satisfied_clauses(std::uint64_t assignment) const;
  unsigned max_satisfied_clauses() const;
  bool satisfiable() const { return max_satisfied_clauses() == clauses.size(); }
};

CnfFormula parse_dimacs(std::string_view text);
std::string to_dimacs(const CnfFormula& formula);

// Clause-evaluating HMM: a trace "# # a1 # a2 # ... an # #" has risk
// (clauses satisfied by a) / m.
Hmm cnf_gadget(const CnfFormula& formula);
// Length of the assignment-encoding traces of the gadget.
inline unsigned gadget_horizon(const CnfFormula& formula) { return 2 * formula.variables + 3; }

struct IcyDrivingParams {
  Rational dry_to_icy = make_rational(9, 10);
  Rational dry_to_crash = make_rational(1, 10);
  Rational icy_to_dry = make_rational(1, 2);
  Rational icy_to_icy = make_rational(1, 4);
  Rational icy_to_crash = make_rational(1, 4);
};

// Dry roads may stay dry with the leftover probability; the crash state is
// absorbing and the only one with risk.
Hmm icy_driving(const IcyDrivingParams& params = {});

// Board of `size` cells, one die with faces 1..3. Observations report how the
// last move ended: step, snake, ladder or finish. A cell's risk is the chance
// that the next roll lands on a snake head.
Hmm snakes_ladders(unsigned size);

Hmm random_hmm(unsigned states, unsigned observations, std::uint64_t seed);
// Roughly one transition in eight is left undefined.
Dfa random_dfa(const Alphabet& alphabet, unsigned states, std::uint64_t seed);

}  // namespace hmmon
