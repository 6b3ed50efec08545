#include "hmmon/model.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "hmmon/errors.hpp"

namespace hmmon {

// ---------------------------------------------------------------------------
// Alphabet

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
  for (Symbol i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      throw ValidationError("duplicate observation '" + names_[i] + "'");
    }
  }
}

std::optional<Symbol> Alphabet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Symbol Alphabet::at(std::string_view name) const {
  auto s = find(name);
  if (!s) throw std::out_of_range("unknown observation '" + std::string(name) + "'");
  return *s;
}

bool Alphabet::same_set(const Alphabet& other) const {
  if (size() != other.size()) return false;
  return std::all_of(names_.begin(), names_.end(),
                     [&](const std::string& n) { return other.find(n).has_value(); });
}

std::string format_trace(const Alphabet& alphabet, const Trace& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i) out += ',';
    out += alphabet.name(trace[i]);
  }
  return out;
}

Trace parse_trace(const Alphabet& alphabet, std::string_view text) {
  Trace trace;
  if (text.empty()) return trace;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto token = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    auto sym = alphabet.find(token);
    if (!sym) throw std::invalid_argument("unknown observation '" + std::string(token) + "' in trace");
    trace.push_back(*sym);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Hmm

Hmm::Hmm(Alphabet observations, std::vector<std::string> names, std::vector<Symbol> obs,
         std::vector<Rational> risk, StateId initial, std::vector<std::vector<Transition>> rows)
    : observations_(std::move(observations)),
      names_(std::move(names)),
      obs_(std::move(obs)),
      risk_(std::move(risk)),
      initial_(initial),
      rows_(std::move(rows)) {
  const std::size_t n = names_.size();
  if (n == 0) throw ValidationError("model has no states");
  if (obs_.size() != n || risk_.size() != n || rows_.size() != n) {
    throw ValidationError("inconsistent state table sizes");
  }
  if (initial_ >= n) throw ValidationError("initial state is undefined");
  for (StateId s = 0; s < n; ++s) {
    if (!index_.emplace(names_[s], s).second) {
      throw ValidationError("duplicate state '" + names_[s] + "'");
    }
    if (obs_[s] >= observations_.size()) {
      throw ValidationError("state " + names_[s] + " has an undeclared observation");
    }
    if (risk_[s] < 0) {
      throw ValidationError("risk of state " + names_[s] + " is negative (" + to_string(risk_[s]) + ")");
    }
    auto& row = rows_[s];
    std::erase_if(row, [](const Transition& t) { return t.prob == 0; });
    if (row.empty()) throw ValidationError("state " + names_[s] + " has no successor (deadlock)");
    std::sort(row.begin(), row.end(), [](const Transition& a, const Transition& b) { return a.to < b.to; });
    Rational sum = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      const auto& t = row[k];
      if (t.to >= n) throw ValidationError("transition from " + names_[s] + " to an undefined state");
      if (t.prob < 0) {
        throw ValidationError("negative probability on transition " + names_[s] + " -> " + names_[t.to]);
      }
      if (k > 0 && row[k - 1].to == t.to) {
        throw ValidationError("duplicate transition " + names_[s] + " -> " + names_[t.to]);
      }
      sum += t.prob;
    }
    if (sum != 1) {
      throw ValidationError("distribution from state " + names_[s] + " sums to " + to_string(sum));
    }
  }
}

std::optional<StateId> Hmm::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Rational Hmm::max_risk() const { return *std::max_element(risk_.begin(), risk_.end()); }

std::size_t Hmm::transition_count() const {
  std::size_t total = 0;
  for (const auto& row : rows_) total += row.size();
  return total;
}

bool operator==(const Hmm& a, const Hmm& b) {
  if (!(a.observations_ == b.observations_) || a.names_ != b.names_ || a.obs_ != b.obs_ ||
      a.risk_ != b.risk_ || a.initial_ != b.initial_ || a.rows_.size() != b.rows_.size()) {
    return false;
  }
  for (std::size_t s = 0; s < a.rows_.size(); ++s) {
    const auto& ra = a.rows_[s];
    const auto& rb = b.rows_[s];
    if (ra.size() != rb.size()) return false;
    for (std::size_t k = 0; k < ra.size(); ++k) {
      if (ra[k].to != rb[k].to || ra[k].prob != rb[k].prob) return false;
    }
  }
  return true;
}

StateId HmmBuilder::add_state(std::string name, std::string_view obs, Rational risk) {
  auto sym = observations_.find(obs);
  if (!sym) throw ValidationError("state " + name + " has undeclared observation '" + std::string(obs) + "'");
  const auto id = static_cast<StateId>(names_.size());
  if (!index_.emplace(name, id).second) throw ValidationError("duplicate state '" + name + "'");
  names_.push_back(std::move(name));
  obs_.push_back(*sym);
  risk_.push_back(std::move(risk));
  rows_.emplace_back();
  return id;
}

StateId HmmBuilder::lookup(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ValidationError("unknown state '" + std::string(name) + "'");
  return it->second;
}

void HmmBuilder::add_transition(std::string_view from, std::string_view to, Rational prob) {
  add_transition(lookup(from), lookup(to), std::move(prob));
}

void HmmBuilder::add_transition(StateId from, StateId to, Rational prob) {
  rows_.at(from).push_back({to, std::move(prob)});
}

void HmmBuilder::set_initial(std::string_view name) { initial_ = lookup(name); }

Hmm HmmBuilder::build() && {
  return Hmm(std::move(observations_), std::move(names_), std::move(obs_), std::move(risk_), initial_,
             std::move(rows_));
}

// ---------------------------------------------------------------------------
// Dfa

Dfa::Dfa(Alphabet alphabet, std::vector<std::string> names, StateId initial, std::vector<bool> accepting,
         std::vector<std::vector<StateId>> delta)
    : alphabet_(std::move(alphabet)),
      names_(std::move(names)),
      initial_(initial),
      accepting_(std::move(accepting)),
      delta_(std::move(delta)) {
  const std::size_t n = names_.size();
  if (n == 0) throw ValidationError("automaton has no states");
  if (accepting_.size() != n || delta_.size() != n) throw ValidationError("inconsistent state table sizes");
  if (initial_ >= n) throw ValidationError("initial state is undefined");
  for (StateId q = 0; q < n; ++q) {
    if (!index_.emplace(names_[q], q).second) throw ValidationError("duplicate state '" + names_[q] + "'");
    if (delta_[q].size() != alphabet_.size()) throw ValidationError("transition row size mismatch");
    for (StateId target : delta_[q]) {
      if (target != kNoState && target >= n) {
        throw ValidationError("transition from " + names_[q] + " to an undefined state");
      }
    }
  }
}

std::optional<StateId> Dfa::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Dfa::is_total() const {
  return std::all_of(delta_.begin(), delta_.end(), [](const auto& row) {
    return std::none_of(row.begin(), row.end(), [](StateId q) { return q == kNoState; });
  });
}

std::size_t Dfa::transition_count() const {
  std::size_t total = 0;
  for (const auto& row : delta_) total += std::count_if(row.begin(), row.end(), [](StateId q) { return q != kNoState; });
  return total;
}

std::optional<StateId> Dfa::run(const Trace& trace) const {
  StateId q = initial_;
  for (Symbol a : trace) {
    q = delta_[q][a];
    if (q == kNoState) return std::nullopt;
  }
  return q;
}

bool Dfa::accepts(const Trace& trace) const {
  auto q = run(trace);
  return q && accepting_[*q];
}

Dfa Dfa::completed() const {
  if (is_total()) return *this;
  auto names = names_;
  auto accepting = accepting_;
  auto delta = delta_;
  std::string sink = "sink";
  while (index_.count(sink)) sink += "_";
  const auto sink_id = static_cast<StateId>(names.size());
  names.push_back(sink);
  accepting.push_back(false);
  delta.emplace_back(alphabet_.size(), sink_id);
  for (auto& row : delta) {
    for (auto& q : row) {
      if (q == kNoState) q = sink_id;
    }
  }
  return Dfa(alphabet_, std::move(names), initial_, std::move(accepting), std::move(delta));
}

Dfa Dfa::complement() const {
  Dfa total = completed();
  for (std::size_t q = 0; q < total.accepting_.size(); ++q) total.accepting_[q] = !total.accepting_[q];
  return total;
}

Dfa Dfa::reindexed(const Alphabet& target) const {
  if (!alphabet_.same_set(target)) {
    throw AlphabetMismatch("monitor alphabet does not match the model's observations");
  }
  std::vector<std::vector<StateId>> delta(delta_.size(), std::vector<StateId>(target.size(), kNoState));
  for (std::size_t q = 0; q < delta_.size(); ++q) {
    for (Symbol a = 0; a < alphabet_.size(); ++a) delta[q][target.at(alphabet_.name(a))] = delta_[q][a];
  }
  return Dfa(target, names_, initial_, accepting_, std::move(delta));
}

bool operator==(const Dfa& a, const Dfa& b) {
  return a.alphabet_ == b.alphabet_ && a.names_ == b.names_ && a.initial_ == b.initial_ &&
         a.accepting_ == b.accepting_ && a.delta_ == b.delta_;
}

StateId DfaBuilder::add_state(std::string name, bool accepting) {
  const auto id = static_cast<StateId>(names_.size());
  if (!index_.emplace(name, id).second) throw ValidationError("duplicate state '" + name + "'");
  names_.push_back(std::move(name));
  accepting_.push_back(accepting);
  delta_.emplace_back(alphabet_.size(), kNoState);
  return id;
}

StateId DfaBuilder::lookup(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ValidationError("unknown state '" + std::string(name) + "'");
  return it->second;
}

void DfaBuilder::add_transition(std::string_view from, std::string_view on, std::string_view to) {
  auto sym = alphabet_.find(on);
  if (!sym) throw ValidationError("transition on undeclared symbol '" + std::string(on) + "'");
  add_transition(lookup(from), *sym, lookup(to));
}

void DfaBuilder::add_transition(StateId from, Symbol on, StateId to) {
  auto& slot = delta_.at(from).at(on);
  if (slot != kNoState && slot != to) {
    throw ValidationError("nondeterministic transition from " + names_[from] + " on " + alphabet_.name(on));
  }
  slot = to;
}

void DfaBuilder::set_initial(std::string_view name) { initial_ = lookup(name); }

Dfa DfaBuilder::build() && {
  return Dfa(std::move(alphabet_), std::move(names_), initial_, std::move(accepting_), std::move(delta_));
}

// ---------------------------------------------------------------------------

void Thresholds::validate() const {
  if (safe < 0) throw ValidationError("safe threshold is negative");
  if (!(safe <= learn && learn <= unsafe)) {
    throw ValidationError("thresholds must satisfy safe <= learn <= unsafe (got " + to_string(safe) + ", " +
                          to_string(learn) + ", " + to_string(unsafe) + ")");
  }
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
}

Dfa align_monitor(const Hmm& model, const Dfa& monitor) {
  if (monitor.alphabet() == model.observations()) return monitor;
  return monitor.reindexed(model.observations());
}

}  // namespace hmmon
