#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hmmon/model.hpp"
#include "hmmon/verifier.hpp"

namespace hmmon {

// L* observation table over a fixed alphabet. Rows of the access prefixes are
// kept pairwise distinct, which makes the table consistent by construction.
class ObservationTable {
 public:
  using Oracle = std::function<bool(const Trace&)>;

  ObservationTable(std::size_t alphabet_size, Oracle membership);

  // Promotes one-letter extensions until every row occurs among the prefixes.
  void close();
  bool is_closed();
  bool is_consistent();

  // Requires a closed table. States are named q0, q1, ... in prefix order.
  Dfa hypothesis(const Alphabet& alphabet);

  // Rivest-Schapire processing: adds one distinguishing suffix and closes.
  // Throws std::invalid_argument if the hypothesis already agrees with the
  // oracle on `counterexample`.
  void add_counterexample(const Trace& counterexample, const Alphabet& alphabet);

  const std::vector<Trace>& prefixes() const { return prefixes_; }
  const std::vector<Trace>& suffixes() const { return suffixes_; }
  // Distinct traces sent to the oracle so far.
  std::size_t query_count() const { return cache_.size(); }
  bool query(const Trace& t);

 private:
  std::vector<bool> row(const Trace& prefix);

  std::size_t alphabet_size_;
  Oracle membership_;
  std::vector<Trace> prefixes_;
  std::vector<Trace> suffixes_;
  std::map<Trace, bool> cache_;
};

struct ConformanceConfig {
  std::size_t safe_samples = 100;
  std::size_t unsafe_samples = 100;
};

struct LearnLimits {
  std::size_t max_rounds = 500;
  std::size_t max_states = 5000;
};

struct LearnOptions {
  ConformanceConfig conformance;
  LearnLimits limits;
  std::uint64_t seed = 0;
  VerifyOptions verify;
};

enum class CounterexampleSource { conformance, verification };
enum class LearnStatus { learned, aborted };

struct LearnRound {
  CounterexampleSource source;
  Trace counterexample;
  std::size_t hypothesis_states;
};

struct LearnReport {
  LearnStatus status = LearnStatus::learned;
  Dfa monitor;
  std::size_t eq_count = 0;
  std::size_t mq_count = 0;
  std::vector<LearnRound> rounds;
  std::string abort_reason;
  double ms = 0;
};

// One sampled trace: length uniform in 1..h, then a random path of the model.
Trace sample_trace(const Hmm& model, unsigned horizon, std::mt19937_64& rng);

// First of up to n sampled traces on which the monitor and the membership
// query at `lambda` disagree.
std::optional<Trace> conformance_counterexample(const Hmm& model, const Dfa& monitor, const Rational& lambda,
                                                unsigned horizon, std::size_t samples, std::mt19937_64& rng);

struct EquivalenceResult {
  std::optional<Trace> counterexample;  // empty when the monitor is accepted
  CounterexampleSource source = CounterexampleSource::verification;
};

// Sampling for false alarms (lambda_s), then missed alarms (lambda_u), then
// full verification.
EquivalenceResult equivalence_query(const Hmm& model, const Dfa& monitor, const Thresholds& thresholds,
                                    const ConformanceConfig& conformance, std::mt19937_64& rng,
                                    const VerifyOptions& verify = {});

LearnReport learn_monitor(const Hmm& model, const Thresholds& thresholds, const LearnOptions& options = {});

std::string to_string(CounterexampleSource source);
std::string to_json(const LearnReport& report, const Alphabet& alphabet, bool timings = false);

}  // namespace hmmon
