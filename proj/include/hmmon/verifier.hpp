#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "hmmon/model.hpp"
#include "hmmon/transform.hpp"

namespace hmmon {

enum class VerdictStatus { correct, counterexample };

struct VerifyStats {
  std::size_t product_states = 0;
  std::size_t mdp_states = 0;
  std::uint64_t explored_nodes = 0;
  double ms = 0;

  VerifyStats& operator+=(const VerifyStats& other);
};

struct Verdict {
  VerdictStatus status = VerdictStatus::correct;
  std::optional<AlarmMode> kind;  // set for counterexamples
  Trace trace;
  std::optional<Rational> risk;
  VerifyStats stats;

  bool correct() const { return status == VerdictStatus::correct; }
};

struct VerifyOptions {
  unsigned jobs = 1;
  std::ostream* diagnostics = nullptr;
};

// Is there a trace of length 1..h with risk > lambda_u that the monitor rejects?
Verdict check_missed_alarms(const Hmm& model, const Dfa& monitor, const Rational& lambda_u, unsigned horizon,
                            const VerifyOptions& options = {});

// Is there a trace of length 1..h with risk < lambda_s that the monitor accepts?
Verdict check_false_alarms(const Hmm& model, const Dfa& monitor, const Rational& lambda_s, unsigned horizon,
                           const VerifyOptions& options = {});

// Missed alarms first, then false alarms.
Verdict check_monitor(const Hmm& model, const Dfa& monitor, const Thresholds& thresholds,
                      const VerifyOptions& options = {});

// Throws std::logic_error unless the verdict's counterexample really is a
// missed or false alarm for the given thresholds.
void validate_counterexample(const Hmm& model, const Dfa& monitor, const Verdict& verdict, const Rational& lambda_s,
                             const Rational& lambda_u, unsigned horizon);

std::string to_string(AlarmMode kind);  // "missedAlarm" / "falseAlarm"

// `timings` adds stats.ms; without it the output is byte-for-byte reproducible.
std::string to_json(const Verdict& verdict, const Alphabet& alphabet, bool timings = false);

}  // namespace hmmon
