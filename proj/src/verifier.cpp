#include "hmmon/verifier.hpp"

#include <chrono>
#include <deque>
#include <stdexcept>

#include <json.hpp>

#include "hmmon/errors.hpp"
#include "hmmon/inference.hpp"
#include "hmmon/synthesis.hpp"

namespace hmmon {

VerifyStats& VerifyStats::operator+=(const VerifyStats& other) {
  product_states += other.product_states;
  mdp_states += other.mdp_states;
  explored_nodes += other.explored_nodes;
  ms += other.ms;
  return *this;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_inputs(const Rational& lambda, unsigned horizon) {
  if (lambda < 0) throw ValidationError("threshold must be nonnegative");
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
}

Verdict counterexample(const Hmm& model, AlarmMode kind, Trace trace) {
  Verdict v;
  v.status = VerdictStatus::counterexample;
  v.kind = kind;
  v.risk = trace_risk(model, trace);
  v.trace = std::move(trace);
  return v;
}

// Shortest accepted trace of length <= h that the model can produce, found
// on the false-alarm product without any synthesis.
std::optional<Trace> accepted_trace(const ProductHmm& prod, unsigned horizon) {
  const Hmm& m = prod.model;
  std::vector<StateId> parent(m.size(), kNoState);
  std::vector<bool> seen(m.size(), false);
  std::deque<std::pair<StateId, unsigned>> queue{{m.initial(), 1}};
  seen[m.initial()] = true;
  while (!queue.empty()) {
    const auto [x, depth] = queue.front();
    queue.pop_front();
    if (prod.alarm[x]) {
      Trace trace;
      for (StateId y = x; y != kNoState; y = parent[y]) trace.push_back(m.obs(y));
      return Trace(trace.rbegin(), trace.rend());
    }
    if (depth == horizon) continue;
    for (const auto& t : m.successors(x)) {
      if (seen[t.to]) continue;
      seen[t.to] = true;
      parent[t.to] = x;
      queue.emplace_back(t.to, depth + 1);
    }
  }
  return std::nullopt;
}

// Runs the threshold query on the up-to-horizon colored MDP of `prod`.
std::optional<Trace> synthesize(const ProductHmm& prod, unsigned horizon, const Rational& lambda,
                                const VerifyOptions& options, VerifyStats& stats) {
  const UnrolledHmm unrolled = unroll_with_risk(prod, horizon, UnrollEntry::every_step);
  const ColoredMdp mdp = build_colored_mdp(unrolled, HorizonVariant::up_to);
  stats.mdp_states = mdp.states.size();
  const ThresholdResult res = solve_threshold(mdp, lambda, true, {options.jobs, options.diagnostics});
  stats.explored_nodes = res.explored;
  if (!res.witness) return std::nullopt;
  return policy_to_trace(mdp, *res.witness);
}

}  // namespace

void validate_counterexample(const Hmm& model, const Dfa& monitor, const Verdict& verdict, const Rational& lambda_s,
                             const Rational& lambda_u, unsigned horizon) {
  if (verdict.correct()) return;
  const Trace& t = verdict.trace;
  if (!verdict.kind || !verdict.risk) throw std::logic_error("counterexample without kind or risk");
  if (t.empty() || t.size() > horizon) throw std::logic_error("counterexample length outside 1..horizon");
  const Belief belief = forward_filter(model, t);
  if (belief.trace_prob == 0) throw std::logic_error("counterexample is not a trace of the model");
  const Rational risk = trace_risk(model, t);
  if (risk != *verdict.risk) throw std::logic_error("counterexample risk does not recompute");
  const bool accepted = align_monitor(model, monitor).accepts(t);
  if (*verdict.kind == AlarmMode::missed_alarm) {
    if (accepted || !(risk > lambda_u)) throw std::logic_error("reported missed alarm is not one");
  } else {
    if (!accepted || !(risk < lambda_s)) throw std::logic_error("reported false alarm is not one");
  }
}

Verdict check_missed_alarms(const Hmm& model, const Dfa& monitor, const Rational& lambda_u, unsigned horizon,
                            const VerifyOptions& options) {
  check_inputs(lambda_u, horizon);
  const auto start = Clock::now();
  align_monitor(model, monitor);
  const Rational r_max = model.max_risk();
  Verdict verdict;
  // No trace can have risk above the largest state risk.
  if (r_max == 0 || lambda_u >= r_max) {
    verdict.stats.ms = elapsed_ms(start);
    return verdict;
  }
  const ProductHmm prod = product(model, monitor, AlarmMode::missed_alarm);
  VerifyStats stats;
  stats.product_states = prod.model.size();
  // Unreachable states may carry the model's largest risk.
  const Rational reach_max = prod.model.max_risk();
  if (reach_max == 0 || lambda_u >= reach_max) {
    verdict.stats = stats;
    verdict.stats.ms = elapsed_ms(start);
    return verdict;
  }
  if (auto trace = synthesize(prod, horizon, lambda_u / reach_max, options, stats)) {
    verdict = counterexample(model, AlarmMode::missed_alarm, std::move(*trace));
    validate_counterexample(model, monitor, verdict, 0, lambda_u, horizon);
  }
  verdict.stats = stats;
  verdict.stats.ms = elapsed_ms(start);
  return verdict;
}

Verdict check_false_alarms(const Hmm& model, const Dfa& monitor, const Rational& lambda_s, unsigned horizon,
                           const VerifyOptions& options) {
  check_inputs(lambda_s, horizon);
  const auto start = Clock::now();
  align_monitor(model, monitor);
  Verdict verdict;
  if (lambda_s == 0) {
    verdict.stats.ms = elapsed_ms(start);
    return verdict;
  }
  const ProductHmm prod = product(model, monitor, AlarmMode::false_alarm);
  const Rational r_max = prod.model.max_risk();
  VerifyStats stats;
  stats.product_states = prod.model.size();
  std::optional<Trace> trace;
  if (r_max == 0 || lambda_s > r_max) {
    // Every trace is below lambda_s, so any accepted one is a false alarm.
    trace = accepted_trace(prod, horizon);
  } else {
    trace = synthesize(prod, horizon, 1 - lambda_s / r_max, options, stats);
  }
  if (trace) {
    verdict = counterexample(model, AlarmMode::false_alarm, std::move(*trace));
    validate_counterexample(model, monitor, verdict, lambda_s, 0, horizon);
  }
  verdict.stats = stats;
  verdict.stats.ms = elapsed_ms(start);
  return verdict;
}

Verdict check_monitor(const Hmm& model, const Dfa& monitor, const Thresholds& thresholds,
                      const VerifyOptions& options) {
  thresholds.validate();
  Verdict missed = check_missed_alarms(model, monitor, thresholds.unsafe, thresholds.horizon, options);
  if (!missed.correct()) return missed;
  Verdict verdict = check_false_alarms(model, monitor, thresholds.safe, thresholds.horizon, options);
  verdict.stats += missed.stats;
  return verdict;
}

std::string to_string(AlarmMode kind) {
  return kind == AlarmMode::missed_alarm ? "missedAlarm" : "falseAlarm";
}

std::string to_json(const Verdict& verdict, const Alphabet& alphabet, bool timings) {
  nlohmann::ordered_json doc;
  doc["status"] = verdict.correct() ? "correct" : "counterexample";
  if (!verdict.correct()) {
    doc["kind"] = to_string(*verdict.kind);
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (Symbol z : verdict.trace) trace.push_back(alphabet.name(z));
    doc["trace"] = std::move(trace);
    doc["risk"] = to_string(*verdict.risk);
  }
  nlohmann::ordered_json stats;
  stats["productStates"] = verdict.stats.product_states;
  stats["mdpStates"] = verdict.stats.mdp_states;
  stats["exploredNodes"] = verdict.stats.explored_nodes;
  if (timings) stats["ms"] = verdict.stats.ms;
  doc["stats"] = std::move(stats);
  return doc.dump(2) + "\n";
}

}  // namespace hmmon
