#include "hmmon/learner.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include <json.hpp>

#include "hmmon/inference.hpp"

namespace hmmon {

namespace {

Trace concat(const Trace& a, const Trace& b) {
  Trace out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Trace extend(const Trace& a, Symbol z) {
  Trace out = a;
  out.push_back(z);
  return out;
}

}  // namespace

ObservationTable::ObservationTable(std::size_t alphabet_size, Oracle membership)
    : alphabet_size_(alphabet_size), membership_(std::move(membership)), prefixes_{Trace{}}, suffixes_{Trace{}} {}

bool ObservationTable::query(const Trace& t) {
  auto it = cache_.find(t);
  if (it != cache_.end()) return it->second;
  const bool v = membership_(t);
  cache_.emplace(t, v);
  return v;
}

std::vector<bool> ObservationTable::row(const Trace& prefix) {
  std::vector<bool> r;
  r.reserve(suffixes_.size());
  for (const auto& e : suffixes_) r.push_back(query(concat(prefix, e)));
  return r;
}

void ObservationTable::close() {
  std::map<std::vector<bool>, std::size_t> rows;
  for (std::size_t i = 0; i < prefixes_.size(); ++i) rows.emplace(row(prefixes_[i]), i);
  // prefixes_ grows while being scanned, so new rows get extended too.
  for (std::size_t i = 0; i < prefixes_.size(); ++i) {
    for (Symbol z = 0; z < alphabet_size_; ++z) {
      Trace ext = extend(prefixes_[i], z);
      if (rows.emplace(row(ext), prefixes_.size()).second) prefixes_.push_back(std::move(ext));
    }
  }
}

bool ObservationTable::is_closed() {
  std::map<std::vector<bool>, std::size_t> rows;
  for (std::size_t i = 0; i < prefixes_.size(); ++i) rows.emplace(row(prefixes_[i]), i);
  for (const auto& s : prefixes_) {
    for (Symbol z = 0; z < alphabet_size_; ++z) {
      if (!rows.count(row(extend(s, z)))) return false;
    }
  }
  return true;
}

bool ObservationTable::is_consistent() {
  for (std::size_t i = 0; i < prefixes_.size(); ++i) {
    for (std::size_t j = i + 1; j < prefixes_.size(); ++j) {
      if (row(prefixes_[i]) != row(prefixes_[j])) continue;
      for (Symbol z = 0; z < alphabet_size_; ++z) {
        if (row(extend(prefixes_[i], z)) != row(extend(prefixes_[j], z))) return false;
      }
    }
  }
  return true;
}

Dfa ObservationTable::hypothesis(const Alphabet& alphabet) {
  if (alphabet.size() != alphabet_size_) throw std::invalid_argument("alphabet size differs from the table's");
  std::map<std::vector<bool>, StateId> state_of;
  for (std::size_t i = 0; i < prefixes_.size(); ++i) state_of.emplace(row(prefixes_[i]), static_cast<StateId>(i));
  if (state_of.size() != prefixes_.size()) throw std::logic_error("observation table has duplicate prefix rows");

  std::vector<std::string> names;
  std::vector<bool> accepting;
  std::vector<std::vector<StateId>> delta;
  for (std::size_t i = 0; i < prefixes_.size(); ++i) {
    names.push_back("q" + std::to_string(i));
    accepting.push_back(query(prefixes_[i]));
    std::vector<StateId> out;
    for (Symbol z = 0; z < alphabet_size_; ++z) {
      auto it = state_of.find(row(extend(prefixes_[i], z)));
      if (it == state_of.end()) throw std::logic_error("hypothesis requested from a table that is not closed");
      out.push_back(it->second);
    }
    delta.push_back(std::move(out));
  }
  return Dfa(alphabet, std::move(names), 0, std::move(accepting), std::move(delta));
}

void ObservationTable::add_counterexample(const Trace& w, const Alphabet& alphabet) {
  const Dfa hyp = hypothesis(alphabet);
  if (query(w) == hyp.accepts(w)) throw std::invalid_argument("hypothesis already agrees on the counterexample");

  // alpha(i) = MQ(access(state after w[:i]) . w[i:]); alpha(0) != alpha(|w|).
  auto alpha = [&](std::size_t i) {
    const StateId q = *hyp.run(Trace(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(i)));
    return query(concat(prefixes_[q], Trace(w.begin() + static_cast<std::ptrdiff_t>(i), w.end())));
  };
  std::size_t lo = 0;
  std::size_t hi = w.size();
  const bool at_lo = alpha(lo);
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (alpha(mid) == at_lo) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Trace suffix(w.begin() + static_cast<std::ptrdiff_t>(hi), w.end());
  if (std::find(suffixes_.begin(), suffixes_.end(), suffix) != suffixes_.end()) {
    throw std::logic_error("distinguishing suffix already present");
  }
  suffixes_.push_back(std::move(suffix));
  close();
}

Trace sample_trace(const Hmm& model, unsigned horizon, std::mt19937_64& rng) {
  const unsigned length = 1 + static_cast<unsigned>(rng() % horizon);
  StateId s = model.initial();
  Trace trace{model.obs(s)};
  while (trace.size() < length) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const auto& row = model.successors(s);
    double cumulative = 0;
    StateId next = row.back().to;
    for (const auto& t : row) {
      cumulative += t.prob.get_d();
      if (u < cumulative) {
        next = t.to;
        break;
      }
    }
    s = next;
    trace.push_back(model.obs(s));
  }
  return trace;
}

std::optional<Trace> conformance_counterexample(const Hmm& model, const Dfa& monitor, const Rational& lambda,
                                                unsigned horizon, std::size_t samples, std::mt19937_64& rng) {
  const Dfa dfa = align_monitor(model, monitor);
  for (std::size_t i = 0; i < samples; ++i) {
    Trace t = sample_trace(model, horizon, rng);
    const bool unsafe = membership_query(model, t, lambda, horizon).label == MqLabel::unsafe;
    if (unsafe != dfa.accepts(t)) return t;
  }
  return std::nullopt;
}

EquivalenceResult equivalence_query(const Hmm& model, const Dfa& monitor, const Thresholds& thresholds,
                                    const ConformanceConfig& conformance, std::mt19937_64& rng,
                                    const VerifyOptions& verify) {
  const Dfa dfa = align_monitor(model, monitor);
  const unsigned h = thresholds.horizon;
  // Sampled disagreements count only if they are real false or missed alarms.
  for (std::size_t i = 0; i < conformance.safe_samples; ++i) {
    Trace t = sample_trace(model, h, rng);
    if (dfa.accepts(t) && trace_risk(model, t) < thresholds.safe) return {std::move(t), CounterexampleSource::conformance};
  }
  for (std::size_t i = 0; i < conformance.unsafe_samples; ++i) {
    Trace t = sample_trace(model, h, rng);
    if (!dfa.accepts(t) && trace_risk(model, t) > thresholds.unsafe) {
      return {std::move(t), CounterexampleSource::conformance};
    }
  }
  Verdict v = check_monitor(model, dfa, thresholds, verify);
  if (v.correct()) return {};
  return {std::move(v.trace), CounterexampleSource::verification};
}

LearnReport learn_monitor(const Hmm& model, const Thresholds& thresholds, const LearnOptions& options) {
  thresholds.validate();
  const auto start = std::chrono::steady_clock::now();
  const Alphabet& alphabet = model.observations();
  ObservationTable table(alphabet.size(), [&](const Trace& t) {
    return membership_query(model, t, thresholds.learn, thresholds.horizon).label == MqLabel::unsafe;
  });
  table.close();
  std::mt19937_64 rng(options.seed);

  std::vector<LearnRound> rounds;
  std::size_t eq_count = 0;
  LearnStatus status = LearnStatus::learned;
  std::string reason;
  Dfa hyp = table.hypothesis(alphabet);
  while (true) {
    if (hyp.size() > options.limits.max_states) {
      status = LearnStatus::aborted;
      reason = "hypothesis exceeds " + std::to_string(options.limits.max_states) + " states";
      break;
    }
    ++eq_count;
    EquivalenceResult eq = equivalence_query(model, hyp, thresholds, options.conformance, rng, options.verify);
    if (!eq.counterexample) break;
    const Trace& ce = *eq.counterexample;
    // Counterexamples are real alarms, so they must contradict the table's oracle.
    if (table.query(ce) == hyp.accepts(ce)) {
      throw std::logic_error("counterexample agrees with the membership oracle");
    }
    rounds.push_back({eq.source, ce, hyp.size()});
    if (rounds.size() > options.limits.max_rounds) {
      status = LearnStatus::aborted;
      reason = "more than " + std::to_string(options.limits.max_rounds) + " counterexamples";
      break;
    }
    const std::size_t before = hyp.size();
    table.add_counterexample(ce, alphabet);
    hyp = table.hypothesis(alphabet);
    if (hyp.size() <= before) throw std::logic_error("counterexample did not add a state");
  }

  LearnReport report{status, hyp, eq_count, table.query_count(), std::move(rounds), std::move(reason), 0};
  report.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string to_string(CounterexampleSource source) {
  return source == CounterexampleSource::conformance ? "conformance" : "verification";
}

std::string to_json(const LearnReport& report, const Alphabet& alphabet, bool timings) {
  nlohmann::ordered_json doc;
  doc["status"] = report.status == LearnStatus::learned ? "learned" : "aborted";
  if (report.status == LearnStatus::aborted) doc["abortReason"] = report.abort_reason;
  doc["monitorStates"] = report.monitor.size();
  doc["eqCount"] = report.eq_count;
  doc["mqCount"] = report.mq_count;
  nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
  for (const auto& r : report.rounds) {
    nlohmann::ordered_json jr;
    jr["source"] = to_string(r.source);
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (Symbol z : r.counterexample) trace.push_back(alphabet.name(z));
    jr["counterexample"] = std::move(trace);
    jr["hypothesisStates"] = r.hypothesis_states;
    rounds.push_back(std::move(jr));
  }
  doc["rounds"] = std::move(rounds);
  if (timings) doc["ms"] = report.ms;
  return doc.dump(2) + "\n";
}

}  // namespace hmmon
