#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hmmon/rational.hpp"

namespace hmmon {

using StateId = std::uint32_t;
using Symbol = std::uint32_t;

inline constexpr StateId kNoState = static_cast<StateId>(-1);

// A finite observation sequence; symbols index into an Alphabet.
using Trace = std::vector<Symbol>;

// Ordered set of observation names. The declaration order fixes symbol ids,
// which in turn fixes every tie-break in the pipeline.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::string& name(Symbol s) const { return names_.at(s); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<Symbol> find(std::string_view name) const;
  Symbol at(std::string_view name) const;  // throws std::out_of_range

  // Same set of names, regardless of order.
  bool same_set(const Alphabet& other) const;

  bool operator==(const Alphabet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Symbol> index_;
};

// Comma-separated observation names; "" for the empty trace.
std::string format_trace(const Alphabet& alphabet, const Trace& trace);
// Inverse of format_trace. Throws std::invalid_argument on unknown names.
Trace parse_trace(const Alphabet& alphabet, std::string_view text);

struct Transition {
  StateId to;
  Rational prob;
};

// Risk-labelled hidden Markov model with a deterministic observation
// function. Immutable once built; the constructor checks every invariant.
class Hmm {
 public:
  Hmm(Alphabet observations, std::vector<std::string> names, std::vector<Symbol> obs,
      std::vector<Rational> risk, StateId initial, std::vector<std::vector<Transition>> rows);

  std::size_t size() const { return names_.size(); }
  const Alphabet& observations() const { return observations_; }
  StateId initial() const { return initial_; }
  const std::string& name(StateId s) const { return names_[s]; }
  Symbol obs(StateId s) const { return obs_[s]; }
  const Rational& risk(StateId s) const { return risk_[s]; }
  const std::vector<Transition>& successors(StateId s) const { return rows_[s]; }
  std::optional<StateId> find(std::string_view name) const;

  Rational max_risk() const;
  std::size_t transition_count() const;

  friend bool operator==(const Hmm& a, const Hmm& b);

 private:
  Alphabet observations_;
  std::vector<std::string> names_;
  std::vector<Symbol> obs_;
  std::vector<Rational> risk_;
  StateId initial_;
  std::vector<std::vector<Transition>> rows_;
  std::unordered_map<std::string, StateId> index_;
};

// Incremental, name-based construction of an Hmm.
class HmmBuilder {
 public:
  explicit HmmBuilder(Alphabet observations) : observations_(std::move(observations)) {}

  StateId add_state(std::string name, std::string_view obs, Rational risk = 0);
  void add_transition(std::string_view from, std::string_view to, Rational prob);
  void add_transition(StateId from, StateId to, Rational prob);
  void set_initial(std::string_view name);
  void set_initial(StateId s) { initial_ = s; }

  Hmm build() &&;

 private:
  Alphabet observations_;
  std::vector<std::string> names_;
  std::vector<Symbol> obs_;
  std::vector<Rational> risk_;
  std::vector<std::vector<Transition>> rows_;
  std::unordered_map<std::string, StateId> index_;
  StateId initial_ = kNoState;

  StateId lookup(std::string_view name) const;
};

// Deterministic finite automaton with a possibly partial transition function.
class Dfa {
 public:
  Dfa(Alphabet alphabet, std::vector<std::string> names, StateId initial,
      std::vector<bool> accepting, std::vector<std::vector<StateId>> delta);

  std::size_t size() const { return names_.size(); }
  const Alphabet& alphabet() const { return alphabet_; }
  StateId initial() const { return initial_; }
  const std::string& name(StateId q) const { return names_[q]; }
  bool accepting(StateId q) const { return accepting_[q]; }
  // kNoState when undefined.
  StateId next(StateId q, Symbol a) const { return delta_[q][a]; }
  std::optional<StateId> find(std::string_view name) const;

  bool is_total() const;
  std::size_t transition_count() const;

  // delta*(initial, trace); nullopt if the run hits an undefined transition.
  std::optional<StateId> run(const Trace& trace) const;
  bool accepts(const Trace& trace) const;

  // Total copy; missing transitions go to a fresh non-accepting sink.
  // Returns *this unchanged if already total.
  Dfa completed() const;
  // Accepts exactly the words over the alphabet rejected by *this.
  Dfa complement() const;
  // Same automaton with symbols renumbered to follow `target`.
  // Throws AlphabetMismatch if the name sets differ.
  Dfa reindexed(const Alphabet& target) const;

  friend bool operator==(const Dfa& a, const Dfa& b);

 private:
  Alphabet alphabet_;
  std::vector<std::string> names_;
  StateId initial_;
  std::vector<bool> accepting_;
  std::vector<std::vector<StateId>> delta_;
  std::unordered_map<std::string, StateId> index_;
};

class DfaBuilder {
 public:
  explicit DfaBuilder(Alphabet alphabet) : alphabet_(std::move(alphabet)) {}

  StateId add_state(std::string name, bool accepting = false);
  void add_transition(std::string_view from, std::string_view on, std::string_view to);
  void add_transition(StateId from, Symbol on, StateId to);
  void set_initial(std::string_view name);
  void set_initial(StateId q) { initial_ = q; }
  void set_accepting(StateId q, bool accepting) { accepting_.at(q) = accepting; }
  void set_accepting(std::string_view name) { accepting_.at(lookup(name)) = true; }

  Dfa build() &&;

 private:
  Alphabet alphabet_;
  std::vector<std::string> names_;
  std::vector<bool> accepting_;
  std::vector<std::vector<StateId>> delta_;
  std::unordered_map<std::string, StateId> index_;
  StateId initial_ = kNoState;

  StateId lookup(std::string_view name) const;
};

// Thresholds and horizon for monitor correctness and learning.
struct Thresholds {
  Rational safe;    // lambda_s
  Rational learn;   // lambda_l
  Rational unsafe;  // lambda_u
  unsigned horizon = 1;

  // Throws ValidationError unless 0 <= safe <= learn <= unsafe and horizon >= 1.
  void validate() const;
};

// Throws AlphabetMismatch unless the monitor's alphabet equals the model's
// observation set; returns the monitor renumbered to the model's order.
Dfa align_monitor(const Hmm& model, const Dfa& monitor);

}  // namespace hmmon
