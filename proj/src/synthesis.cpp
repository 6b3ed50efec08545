#include "hmmon/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "hmmon/errors.hpp"

namespace hmmon {

Rational PolicyMass::conditional() const {
  const Rational total = target + other;
  if (total == 0) return 0;
  Rational v = target / total;
  v.canonicalize();
  return v;
}

namespace {

// Probability mass spread over states of a single color.
struct Frontier {
  Color color = 0;
  std::vector<std::pair<StateId, Rational>> mass;
};

struct Estimate {
  Rational a_max;
  Rational b_min;
  Rational c_max;

  bool viable() const { return c_max > 0; }
  Rational bound() const {
    if (a_max == 0) return 0;
    Rational v = a_max / (a_max + b_min);
    v.canonicalize();
    return v;
  }
};

struct Child {
  std::size_t index;  // position in the color's action list
  Frontier frontier;
  Estimate estimate;
  Rational bound;
};

// Precomputed single-pass structure of a colored MDP: per color the enabled
// actions, per state and action the forward part of the distribution (the
// reset back to the start is dropped), and per state the relaxed optimum.
class Engine {
 public:
  explicit Engine(const ColoredMdp& mdp) : mdp_(mdp), sink_color_(mdp.horizon + 1) {
    const std::size_t n = mdp.states.size();
    actions_.resize(mdp.color_count());
    has_states_.assign(mdp.color_count(), false);
    forward_.resize(n);
    for (StateId s = 0; s < n; ++s) {
      const auto& st = mdp.states[s];
      if (st.color >= mdp.color_count()) throw std::invalid_argument("state color out of range");
      std::vector<ActionId> acts;
      for (const auto& c : st.choices) acts.push_back(c.action);
      if (!has_states_[st.color]) {
        actions_[st.color] = acts;
        has_states_[st.color] = true;
      } else if (actions_[st.color] != acts) {
        throw std::invalid_argument("states of color " + std::to_string(st.color) + " differ in enabled actions");
      }
      if (st.color == sink_color_) continue;
      for (const auto& c : st.choices) {
        std::vector<Transition> fwd;
        for (const auto& t : c.dist) {
          if (mdp.states[t.to].color > st.color) fwd.push_back(t);
        }
        forward_[s].push_back(std::move(fwd));
      }
    }

    // Relaxed per-state optimum, filled from the sinks backwards.
    a_.assign(n, 0);
    b_.assign(n, 0);
    c_.assign(n, 0);
    std::vector<StateId> order(n);
    for (StateId s = 0; s < n; ++s) order[s] = s;
    std::stable_sort(order.begin(), order.end(),
                     [&](StateId x, StateId y) { return mdp.states[x].color > mdp.states[y].color; });
    for (StateId s : order) {
      if (mdp.states[s].color == sink_color_) {
        const bool hit = s == mdp.target;
        const bool miss = s == mdp.other_sink;
        a_[s] = hit ? 1 : 0;
        b_[s] = miss ? 1 : 0;
        c_[s] = hit || miss ? 1 : 0;
        continue;
      }
      bool first = true;
      for (const auto& fwd : forward_[s]) {
        Rational a = 0, b = 0, c = 0;
        for (const auto& t : fwd) {
          a += t.prob * a_[t.to];
          b += t.prob * b_[t.to];
          c += t.prob * c_[t.to];
        }
        if (first || a > a_[s]) a_[s] = a;
        if (first || b < b_[s]) b_[s] = b;
        if (first || c > c_[s]) c_[s] = c;
        first = false;
      }
    }
  }

  const ColoredMdp& mdp() const { return mdp_; }
  Color sink_color() const { return sink_color_; }
  const std::vector<ActionId>& actions(Color c) const { return actions_[c]; }

  Frontier start() const {
    return Frontier{mdp_.states[mdp_.initial].color, {{mdp_.initial, Rational(1)}}};
  }

  bool is_leaf(const Frontier& f) const { return f.mass.empty() || f.color == sink_color_; }

  Estimate estimate(const Frontier& f) const {
    Estimate e{0, 0, 0};
    for (const auto& [s, p] : f.mass) {
      e.a_max += p * a_[s];
      e.b_min += p * b_[s];
      e.c_max += p * c_[s];
    }
    return e;
  }

  Frontier step(const Frontier& f, std::size_t index) const {
    std::map<StateId, Rational> next;
    for (const auto& [s, p] : f.mass) {
      for (const auto& t : forward_[s][index]) next[t.to] += p * t.prob;
    }
    Frontier out;
    out.color = next.empty() ? sink_color_ : mdp_.states[next.begin()->first].color;
    out.mass.reserve(next.size());
    for (auto& [s, p] : next) {
      if (mdp_.states[s].color != out.color) throw std::logic_error("successor layer spans several colors");
      p.canonicalize();
      out.mass.emplace_back(s, std::move(p));
    }
    return out;
  }

  std::vector<Child> children(const Frontier& f) const {
    std::vector<Child> out;
    const auto& acts = actions_[f.color];
    for (std::size_t i = 0; i < acts.size(); ++i) {
      Child c{i, step(f, i), {}, 0};
      c.estimate = estimate(c.frontier);
      c.bound = c.estimate.bound();
      out.push_back(std::move(c));
    }
    return out;
  }

  // Sets the policy for colors [from, to): the ones nothing reaches take their
  // smallest action.
  void fill_skipped(Policy& policy, Color from, Color to) const {
    for (Color c = from; c < to && c < sink_color_; ++c) {
      policy[c] = has_states_[c] ? actions_[c].front() : kNoAction;
    }
  }

  Policy blank_policy() const {
    Policy p(mdp_.color_count(), kNoAction);
    p[sink_color_] = mdp_.end_action();
    return p;
  }

  std::size_t index_of(Color c, ActionId a) const {
    const auto& acts = actions_[c];
    auto it = std::find(acts.begin(), acts.end(), a);
    if (it == acts.end()) {
      throw std::invalid_argument("action '" + action_name(a) + "' is not enabled at color " + std::to_string(c));
    }
    return static_cast<std::size_t>(it - acts.begin());
  }

  std::string action_name(ActionId a) const {
    return a < mdp_.actions.size() ? mdp_.actions[a] : "#" + std::to_string(a);
  }

  void validate(const Policy& policy) const {
    if (policy.size() != mdp_.color_count()) throw std::invalid_argument("policy size does not match color count");
    for (Color c = 0; c < sink_color_; ++c) {
      if (has_states_[c]) index_of(c, policy[c]);
    }
  }

 private:
  const ColoredMdp& mdp_;
  Color sink_color_;
  std::vector<std::vector<ActionId>> actions_;
  std::vector<bool> has_states_;
  std::vector<std::vector<std::vector<Transition>>> forward_;
  std::vector<Rational> a_, b_, c_;
};

Rational leaf_value(const Estimate& e) { return e.bound(); }

class Diagnostics {
 public:
  Diagnostics(std::ostream* out, const Engine& engine) : out_(out), engine_(engine) {}

  void node(const char* phase, Color color, ActionId action, const Rational& bound,
            const std::optional<Rational>& incumbent, bool pruned) {
    if (!out_) return;
    nlohmann::ordered_json line;
    line["phase"] = phase;
    line["color"] = color;
    line["action"] = engine_.action_name(action);
    line["bound"] = to_string(bound);
    line["incumbent"] = incumbent ? nlohmann::ordered_json(to_string(*incumbent)) : nlohmann::ordered_json(nullptr);
    line["pruned"] = pruned;
    std::lock_guard lock(mutex_);
    *out_ << line.dump() << '\n';
  }

 private:
  std::ostream* out_;
  const Engine& engine_;
  std::mutex mutex_;
};

// Most-likely-observation rollout from f; at the length-choosing start state
// every length is tried. Returns the best feasible leaf.
std::optional<std::pair<Rational, Policy>> greedy(const Engine& engine, const Frontier& root) {
  std::optional<std::pair<Rational, Policy>> best;
  auto rollout = [&](Frontier f, Policy policy) {
    while (!engine.is_leaf(f)) {
      const auto& acts = engine.actions(f.color);
      std::size_t pick = 0;
      Rational pick_mass = -1;
      Frontier pick_frontier;
      for (std::size_t i = 0; i < acts.size(); ++i) {
        Frontier next = engine.step(f, i);
        Rational m = 0;
        for (const auto& [s, p] : next.mass) m += p;
        if (m > pick_mass) {
          pick = i;
          pick_mass = m;
          pick_frontier = std::move(next);
        }
      }
      policy[f.color] = acts[pick];
      engine.fill_skipped(policy, f.color + 1, pick_frontier.color);
      f = std::move(pick_frontier);
    }
    const Estimate e = engine.estimate(f);
    if (!e.viable()) return;
    Rational v = leaf_value(e);
    if (!best || v > best->first) best = std::make_pair(std::move(v), std::move(policy));
  };

  Policy base = engine.blank_policy();
  engine.fill_skipped(base, 0, root.color);
  if (!engine.is_leaf(root) && root.color == 0 && engine.mdp().variant == HorizonVariant::up_to) {
    const auto& acts = engine.actions(0);
    for (std::size_t i = 0; i < acts.size(); ++i) {
      Policy p = base;
      p[0] = acts[i];
      Frontier next = engine.step(root, i);
      engine.fill_skipped(p, 1, next.color);
      rollout(std::move(next), std::move(p));
    }
  } else {
    rollout(root, base);
  }
  return best;
}

void order_by_bound(std::vector<Child>& kids) {
  std::stable_sort(kids.begin(), kids.end(), [](const Child& x, const Child& y) { return x.bound > y.bound; });
}

// Runs `work(i)` for i in [0, count) on up to `jobs` threads.
template <class Fn>
void run_parallel(std::size_t count, unsigned jobs, Fn work) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const unsigned n = std::min<std::size_t>(jobs, count);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < count; i = next++) work(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

class MaxSearch {
 public:
  MaxSearch(const Engine& engine, const SolveOptions& options)
      : engine_(engine), options_(options), diag_(options.diagnostics, engine) {}

  std::optional<Rational> run() {
    const Frontier root = engine_.start();
    if (auto g = greedy(engine_, root)) {
      incumbent_ = g->first;
      diag_.node("greedy", root.color, g->second[root.color], g->first, incumbent_, false);
    }
    ++explored_;
    if (engine_.is_leaf(root)) {
      const Estimate e = engine_.estimate(root);
      if (e.viable()) offer(leaf_value(e));
      return incumbent_;
    }
    auto kids = engine_.children(root);
    order_by_bound(kids);
    run_parallel(kids.size(), options_.jobs, [&](std::size_t i) { visit(kids[i], root.color); });
    return incumbent_;
  }

  std::uint64_t explored() const { return explored_; }

 private:
  void visit(const Child& kid, Color color) {
    ++explored_;
    const ActionId action = engine_.actions(color)[kid.index];
    const auto inc = current();
    const bool pruned = !kid.estimate.viable() || (inc && kid.bound <= *inc);
    diag_.node("max", color, action, kid.bound, inc, pruned);
    if (pruned) return;
    if (engine_.is_leaf(kid.frontier)) {
      offer(leaf_value(kid.estimate));
      return;
    }
    auto kids = engine_.children(kid.frontier);
    order_by_bound(kids);
    for (const auto& k : kids) visit(k, kid.frontier.color);
  }

  std::optional<Rational> current() {
    std::lock_guard lock(mutex_);
    return incumbent_;
  }

  void offer(const Rational& v) {
    std::lock_guard lock(mutex_);
    if (!incumbent_ || v > *incumbent_) incumbent_ = v;
  }

  const Engine& engine_;
  const SolveOptions& options_;
  Diagnostics diag_;
  std::mutex mutex_;
  std::optional<Rational> incumbent_;
  std::atomic<std::uint64_t> explored_{0};
};

// Lexicographically first policy attaining `target`.
class WitnessSearch {
 public:
  WitnessSearch(const Engine& engine, const Rational& target, Diagnostics& diag)
      : engine_(engine), target_(target), diag_(diag) {}

  Policy run() {
    Policy policy = engine_.blank_policy();
    const Frontier root = engine_.start();
    engine_.fill_skipped(policy, 0, root.color);
    ++explored_;
    if (!descend(root, policy)) throw std::logic_error("optimal value not re-attained");
    return policy;
  }

  std::uint64_t explored() const { return explored_; }

 private:
  bool descend(const Frontier& f, Policy& policy) {
    if (engine_.is_leaf(f)) {
      const Estimate e = engine_.estimate(f);
      return e.viable() && leaf_value(e) == target_;
    }
    for (const auto& kid : engine_.children(f)) {
      ++explored_;
      const ActionId action = engine_.actions(f.color)[kid.index];
      const bool pruned = !kid.estimate.viable() || kid.bound < target_;
      diag_.node("witness", f.color, action, kid.bound, target_, pruned);
      if (pruned) continue;
      policy[f.color] = action;
      engine_.fill_skipped(policy, f.color + 1, kid.frontier.color);
      if (descend(kid.frontier, policy)) return true;
    }
    return false;
  }

  const Engine& engine_;
  const Rational& target_;
  Diagnostics& diag_;
  std::uint64_t explored_ = 0;
};

class ThresholdSearch {
 public:
  ThresholdSearch(const Engine& engine, const Rational& lambda, bool strict, Diagnostics& diag)
      : engine_(engine), lambda_(lambda), strict_(strict), diag_(diag) {}

  bool accepts(const Rational& v) const { return strict_ ? v > lambda_ : v >= lambda_; }

  // Depth-first search below `f`; fills `policy` on success.
  bool descend(const Frontier& f, Policy& policy, const std::atomic<bool>& stop) {
    if (stop) return false;
    if (engine_.is_leaf(f)) {
      const Estimate e = engine_.estimate(f);
      return e.viable() && accepts(leaf_value(e));
    }
    auto kids = engine_.children(f);
    order_by_bound(kids);
    for (const auto& kid : kids) {
      if (stop) return false;
      ++explored_;
      const ActionId action = engine_.actions(f.color)[kid.index];
      const bool pruned = !kid.estimate.viable() || !accepts(kid.bound);
      diag_.node("threshold", f.color, action, kid.bound, lambda_, pruned);
      if (pruned) continue;
      policy[f.color] = action;
      engine_.fill_skipped(policy, f.color + 1, kid.frontier.color);
      if (descend(kid.frontier, policy, stop)) return true;
    }
    return false;
  }

  std::atomic<std::uint64_t>& explored() { return explored_; }

 private:
  const Engine& engine_;
  const Rational& lambda_;
  bool strict_;
  Diagnostics& diag_;
  std::atomic<std::uint64_t> explored_{0};
};

}  // namespace

SynthesisResult solve_max(const ColoredMdp& mdp, const SolveOptions& options) {
  const Engine engine(mdp);
  MaxSearch search(engine, options);
  const auto best = search.run();
  if (!best) throw Infeasible("no policy reaches a terminal state");

  Diagnostics diag(options.diagnostics, engine);
  WitnessSearch witness(engine, *best, diag);
  SynthesisResult result;
  result.value = *best;
  result.witness = witness.run();
  result.trace = policy_to_trace(mdp, result.witness);
  result.explored = search.explored() + witness.explored();
  return result;
}

ThresholdResult solve_threshold(const ColoredMdp& mdp, const Rational& lambda, bool strict,
                                const SolveOptions& options) {
  const Engine engine(mdp);
  Diagnostics diag(options.diagnostics, engine);
  ThresholdSearch search(engine, lambda, strict, diag);
  ThresholdResult result;
  const Frontier root = engine.start();
  search.explored() = 1;

  auto g = greedy(engine, root);
  if (g) diag.node("greedy", root.color, g->second[root.color], g->first, lambda, !search.accepts(g->first));
  if (g && search.accepts(g->first)) {
    result.value = g->first;
    result.witness = std::move(g->second);
    result.explored = search.explored();
    return result;
  }

  Policy base = engine.blank_policy();
  engine.fill_skipped(base, 0, root.color);
  if (engine.is_leaf(root)) {
    result.explored = search.explored();
    return result;
  }

  // Root subtrees are searched independently; the witness from the earliest
  // subtree (in bound order) is kept so the answer does not depend on timing.
  auto kids = engine.children(root);
  order_by_bound(kids);
  std::vector<std::optional<Policy>> found(kids.size());
  std::vector<std::unique_ptr<std::atomic<bool>>> stop;
  for (std::size_t i = 0; i < kids.size(); ++i) stop.push_back(std::make_unique<std::atomic<bool>>(false));
  std::mutex mutex;
  run_parallel(kids.size(), options.jobs, [&](std::size_t i) {
    if (*stop[i]) return;
    const Child& kid = kids[i];
    ++search.explored();
    const ActionId action = engine.actions(root.color)[kid.index];
    const bool pruned = !kid.estimate.viable() || !search.accepts(kid.bound);
    diag.node("threshold", root.color, action, kid.bound, lambda, pruned);
    if (pruned) return;
    Policy policy = base;
    policy[root.color] = action;
    engine.fill_skipped(policy, root.color + 1, kid.frontier.color);
    if (!search.descend(kid.frontier, policy, *stop[i])) return;
    std::lock_guard lock(mutex);
    found[i] = std::move(policy);
    for (std::size_t j = i + 1; j < kids.size(); ++j) *stop[j] = true;
  });
  for (auto& f : found) {
    if (!f) continue;
    result.value = evaluate_policy(mdp, *f).conditional();
    result.witness = std::move(f);
    break;
  }
  result.explored = search.explored();
  return result;
}

PolicyMass evaluate_policy(const ColoredMdp& mdp, const Policy& policy) {
  const Engine engine(mdp);
  engine.validate(policy);
  Frontier f = engine.start();
  while (!engine.is_leaf(f)) f = engine.step(f, engine.index_of(f.color, policy[f.color]));
  PolicyMass mass{0, 0};
  for (const auto& [s, p] : f.mass) {
    if (s == mdp.target) mass.target += p;
    if (s == mdp.other_sink) mass.other += p;
  }
  return mass;
}

Rational policy_bound(const ColoredMdp& mdp, const Policy& prefix) {
  const Engine engine(mdp);
  Frontier f = engine.start();
  while (!engine.is_leaf(f) && f.color < prefix.size()) {
    f = engine.step(f, engine.index_of(f.color, prefix[f.color]));
  }
  const Estimate e = engine.estimate(f);
  return e.viable() ? e.bound() : Rational(0);
}

Trace policy_to_trace(const ColoredMdp& mdp, const Policy& policy) {
  const Engine engine(mdp);
  engine.validate(policy);
  const unsigned h = mdp.horizon;
  Color first = 1;
  if (mdp.variant == HorizonVariant::up_to) {
    const ActionId choice = policy[0];
    if (choice <= mdp.end_action() || choice > mdp.length_action(h)) {
      throw std::invalid_argument("start color must choose a trace length");
    }
    first = h - (choice - mdp.end_action()) + 1;
  }
  Trace trace{mdp.first_observation};
  for (Color c = first; c < h; ++c) {
    const ActionId a = policy[c];
    if (a == mdp.end_action()) break;
    if (a > mdp.end_action()) throw std::invalid_argument("length action outside the start color");
    trace.push_back(a);
  }
  return trace;
}

Policy trace_consistent_policy(const ColoredMdp& mdp, const Trace& trace) {
  const Engine engine(mdp);
  const unsigned h = mdp.horizon;
  if (trace.empty() || trace.size() > h) throw std::invalid_argument("trace length must be within 1..horizon");
  if (mdp.variant == HorizonVariant::exact && trace.size() != h) {
    throw std::invalid_argument("exact-horizon MDP needs a trace of length equal to the horizon");
  }
  if (trace.front() != mdp.first_observation) throw std::invalid_argument("trace does not start with the initial observation");
  Policy policy = engine.blank_policy();
  const Color first = h - static_cast<Color>(trace.size()) + 1;
  engine.fill_skipped(policy, 0, first);
  if (mdp.variant == HorizonVariant::up_to) {
    policy[0] = mdp.length_action(static_cast<unsigned>(trace.size()));
  }
  for (Color c = first; c < h; ++c) policy[c] = trace[c - first + 1];
  policy[h] = mdp.end_action();
  engine.validate(policy);
  return policy;
}

}  // namespace hmmon
