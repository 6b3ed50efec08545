#include "hmmon/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "hmmon/errors.hpp"
#include "hmmon/inference.hpp"

namespace hmmon {

// ---------------------------------------------------------------------------
// Enumeration

namespace {

struct Accumulator {
  Rational prob = 0;
  Rational weighted = 0;  // sum of P(path) * r(last state)
};

using AccTable = std::map<Trace, Accumulator>;

class PathWalker {
 public:
  PathWalker(const Hmm& model, unsigned horizon, std::uint64_t budget, std::atomic<std::uint64_t>& visited)
      : model_(model), horizon_(horizon), budget_(budget), visited_(visited) {}

  void walk(StateId s, const Rational& prob, Trace& trace, AccTable& out) {
    if (++visited_ > budget_) {
      throw BudgetExceeded("trace enumeration exceeded its budget of " + std::to_string(budget_) + " paths");
    }
    trace.push_back(model_.obs(s));
    auto& acc = out[trace];
    acc.prob += prob;
    acc.weighted += prob * model_.risk(s);
    if (trace.size() < horizon_) {
      for (const auto& t : model_.successors(s)) walk(t.to, prob * t.prob, trace, out);
    }
    trace.pop_back();
  }

 private:
  const Hmm& model_;
  unsigned horizon_;
  std::uint64_t budget_;
  std::atomic<std::uint64_t>& visited_;
};

}  // namespace

TraceTable enumerate_trace_risks(const Hmm& model, unsigned horizon, const EnumerateOptions& options) {
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
  std::atomic<std::uint64_t> visited{1};
  if (options.budget < 1) throw BudgetExceeded("trace enumeration budget is 0");
  PathWalker walker(model, horizon, options.budget, visited);

  const StateId init = model.initial();
  const Trace root{model.obs(init)};
  AccTable merged;
  merged[root] = Accumulator{1, model.risk(init)};

  // Paths are split by their second state; each part is walked separately.
  const auto& first = model.successors(init);
  std::vector<AccTable> parts(horizon > 1 ? first.size() : 0);
  auto work = [&](std::size_t i) {
    Trace trace = root;
    walker.walk(first[i].to, first[i].prob, trace, parts[i]);
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(parts.size())));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < parts.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        try {
          for (std::size_t i = next++; i < parts.size(); i = next++) work(i);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (auto& part : parts) {
    for (auto& [trace, acc] : part) {
      auto& dst = merged[trace];
      dst.prob += acc.prob;
      dst.weighted += acc.weighted;
    }
  }

  TraceTable table;
  for (auto& [trace, acc] : merged) {
    if (acc.prob == 0) continue;
    Rational risk = acc.weighted / acc.prob;
    risk.canonicalize();
    acc.prob.canonicalize();
    table.emplace(trace, TraceEntry{acc.prob, std::move(risk)});
  }
  return table;
}

std::string to_csv(const TraceTable& table, const Alphabet& alphabet) {
  std::ostringstream out;
  out << "trace,prob,risk\n";
  for (const auto& [trace, e] : table) {
    out << '"' << format_trace(alphabet, trace) << "\"," << to_string(e.prob) << ',' << to_string(e.risk) << '\n';
  }
  return out.str();
}

Verdict brute_force_verdict(const Hmm& model, const Dfa& monitor, const Thresholds& thresholds,
                            const EnumerateOptions& options) {
  thresholds.validate();
  const Dfa dfa = align_monitor(model, monitor);
  const TraceTable table = enumerate_trace_risks(model, thresholds.horizon, options);
  std::vector<const TraceTable::value_type*> rows;
  for (const auto& row : table) rows.push_back(&row);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto* x, const auto* y) { return x->first.size() < y->first.size(); });

  for (AlarmMode kind : {AlarmMode::missed_alarm, AlarmMode::false_alarm}) {
    for (const auto* row : rows) {
      const bool accepted = dfa.accepts(row->first);
      const Rational& risk = row->second.risk;
      const bool hit = kind == AlarmMode::missed_alarm ? !accepted && risk > thresholds.unsafe
                                                       : accepted && risk < thresholds.safe;
      if (!hit) continue;
      Verdict v;
      v.status = VerdictStatus::counterexample;
      v.kind = kind;
      v.trace = row->first;
      v.risk = risk;
      return v;
    }
  }
  return Verdict{};
}

// ---------------------------------------------------------------------------
// CNF formulas and the clause gadget

void CnfFormula::validate() const {
  if (clauses.empty()) throw ValidationError("formula has no clauses");
  for (std::size_t j = 0; j < clauses.size(); ++j) {
    const auto& c = clauses[j];
    if (c.empty()) throw ValidationError("clause " + std::to_string(j + 1) + " is empty");
    if (c.size() > 3) throw ValidationError("clause " + std::to_string(j + 1) + " has more than 3 literals");
    for (int lit : c) {
      if (lit == 0 || static_cast<unsigned>(std::abs(lit)) > variables) {
        throw ValidationError("literal " + std::to_string(lit) + " outside variables 1.." + std::to_string(variables));
      }
    }
  }
}

unsigned CnfFormula::satisfied_clauses(std::uint64_t assignment) const {
  unsigned count = 0;
  for (const auto& c : clauses) {
    for (int lit : c) {
      const bool value = (assignment >> (std::abs(lit) - 1)) & 1u;
      if (value == (lit > 0)) {
        ++count;
        break;
      }
    }
  }
  return count;
}

unsigned CnfFormula::max_satisfied_clauses() const {
  if (variables >= 32) throw BudgetExceeded("too many variables for exhaustive assignment search");
  unsigned best = 0;
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << variables); ++a) best = std::max(best, satisfied_clauses(a));
  return best;
}

CnfFormula parse_dimacs(std::string_view text) {
  CnfFormula f;
  bool header = false;
  std::size_t declared = 0;
  std::vector<int> clause;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream words(line);
    std::string first;
    if (!(words >> first) || first == "c" || first[0] == 'c' || first == "%") continue;
    const std::string where = "dimacs:" + std::to_string(lineno) + ": ";
    if (first == "p") {
      std::string format;
      long n = -1, m = -1;
      if (header || !(words >> format >> n >> m) || format != "cnf" || n < 0 || m < 0) {
        throw ParseError(where + "malformed problem line");
      }
      f.variables = static_cast<unsigned>(n);
      declared = static_cast<std::size_t>(m);
      header = true;
      continue;
    }
    if (!header) throw ParseError(where + "clause before the problem line");
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      char* end = nullptr;
      const long lit = std::strtol(tok.c_str(), &end, 10);
      if (*end != '\0') throw ParseError(where + "bad literal '" + tok + "'");
      if (lit == 0) {
        f.clauses.push_back(std::move(clause));
        clause.clear();
      } else {
        clause.push_back(static_cast<int>(lit));
      }
    }
  }
  if (!header) throw ParseError("dimacs: missing problem line");
  if (!clause.empty()) f.clauses.push_back(std::move(clause));
  if (f.clauses.size() != declared) {
    throw ParseError("dimacs: problem line declares " + std::to_string(declared) + " clauses, found " +
                     std::to_string(f.clauses.size()));
  }
  f.validate();
  return f;
}

std::string to_dimacs(const CnfFormula& formula) {
  std::ostringstream out;
  out << "p cnf " << formula.variables << ' ' << formula.clauses.size() << '\n';
  for (const auto& c : formula.clauses) {
    for (int lit : c) out << lit << ' ';
    out << "0\n";
  }
  return out.str();
}

Hmm cnf_gadget(const CnfFormula& formula) {
  formula.validate();
  const unsigned n = formula.variables;
  const unsigned m = static_cast<unsigned>(formula.clauses.size());

  struct Node {
    std::string name;
    std::string obs;
    std::vector<std::pair<std::string, Rational>> next;
  };
  std::vector<Node> nodes;
  auto idx = [](const char* base, unsigned i, unsigned j) {
    return std::string(base) + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
  };
  const Rational half = make_rational(1, 2);

  Node init{"init", "#", {}};
  for (unsigned j = 1; j <= m; ++j) init.next.emplace_back(idx("s", 1, j), make_rational(1, m));
  nodes.push_back(std::move(init));
  for (unsigned j = 1; j <= m; ++j) {
    const auto& clause = formula.clauses[j - 1];
    auto has = [&](int lit) { return std::find(clause.begin(), clause.end(), lit) != clause.end(); };
    for (unsigned i = 1; i <= n; ++i) {
      const int x = static_cast<int>(i);
      nodes.push_back({idx("s", i, j), "#", {{idx("s", i, j) + "T", half}, {idx("s", i, j) + "F", half}}});
      nodes.push_back({idx("s", i, j) + "T", "T", {{has(x) ? idx("s'", i + 1, j) : idx("s", i + 1, j), 1}}});
      nodes.push_back({idx("s", i, j) + "F", "F", {{has(-x) ? idx("s'", i + 1, j) : idx("s", i + 1, j), 1}}});
      nodes.push_back({idx("s'", i, j), "#", {{idx("s'", i, j) + "T", half}, {idx("s'", i, j) + "F", half}}});
      nodes.push_back({idx("s'", i, j) + "T", "T", {{idx("s'", i + 1, j), 1}}});
      nodes.push_back({idx("s'", i, j) + "F", "F", {{idx("s'", i + 1, j), 1}}});
    }
    nodes.push_back({idx("s", n + 1, j), "#", {{"f", 1}}});
    nodes.push_back({idx("s'", n + 1, j), "#", {{"t", 1}}});
  }
  nodes.push_back({"t", "#", {{"t", 1}}});
  nodes.push_back({"f", "#", {{"f", 1}}});

  // Keep the reachable part, in declaration order.
  std::map<std::string, std::size_t> by_name;
  for (std::size_t k = 0; k < nodes.size(); ++k) by_name[nodes[k].name] = k;
  std::vector<bool> reach(nodes.size(), false);
  std::deque<std::size_t> queue{0};
  reach[0] = true;
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    for (const auto& [to, p] : nodes[k].next) {
      const std::size_t t = by_name.at(to);
      if (!reach[t]) {
        reach[t] = true;
        queue.push_back(t);
      }
    }
  }

  HmmBuilder builder(Alphabet({"#", "T", "F"}));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (reach[k]) builder.add_state(nodes[k].name, nodes[k].obs, nodes[k].name == "t" ? 1 : 0);
  }
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (!reach[k]) continue;
    for (const auto& [to, p] : nodes[k].next) builder.add_transition(nodes[k].name, to, p);
  }
  builder.set_initial("init");
  return std::move(builder).build();
}

// ---------------------------------------------------------------------------
// Generators

Hmm icy_driving(const IcyDrivingParams& params) {
  for (const Rational* p : {&params.dry_to_icy, &params.dry_to_crash, &params.icy_to_dry, &params.icy_to_icy,
                            &params.icy_to_crash}) {
    if (*p < 0 || *p > 1) throw ValidationError("icy-driving probabilities must lie in [0, 1]");
  }
  const Rational dry_to_dry = 1 - params.dry_to_icy - params.dry_to_crash;
  if (dry_to_dry < 0) throw ValidationError("icy-driving: probabilities leaving the dry state exceed 1");

  HmmBuilder b(Alphabet({"dry", "icy"}));
  b.add_state("q_d", "dry");
  b.add_state("q_i", "icy");
  b.add_state("q_c", "icy", 1);
  b.set_initial("q_d");
  auto edge = [&](const char* from, const char* to, const Rational& p) {
    if (p != 0) b.add_transition(from, to, p);
  };
  edge("q_d", "q_d", dry_to_dry);
  edge("q_d", "q_i", params.dry_to_icy);
  edge("q_d", "q_c", params.dry_to_crash);
  edge("q_i", "q_d", params.icy_to_dry);
  edge("q_i", "q_i", params.icy_to_icy);
  edge("q_i", "q_c", params.icy_to_crash);
  edge("q_c", "q_c", 1);
  return std::move(b).build();
}

// Board layout: cells 0..size-1, the last one is the goal. Snake heads sit on
// cells 4, 10, 16, ... (c % 6 == 4) and slide back 3 cells; ladders start on
// cells 1, 7, 13, ... (c % 6 == 1) and climb 4 cells when the top is still
// short of the goal. Rolls that reach or pass the goal finish the game.
Hmm snakes_ladders(unsigned size) {
  if (size < 4) throw ValidationError("snakes-and-ladders board needs at least 4 cells");
  const unsigned goal = size - 1;
  auto snake = [&](unsigned c) { return c < goal && c % 6 == 4; };
  auto ladder = [&](unsigned c) { return c % 6 == 1 && c + 4 < goal; };
  const char* kinds[] = {"step", "snake", "ladder", "finish"};

  // State key: (cell, how the move into it ended).
  using Key = std::pair<unsigned, unsigned>;
  std::map<Key, StateId> index;
  std::vector<Key> keys;
  std::deque<Key> queue;
  auto intern = [&](Key k) {
    if (index.emplace(k, static_cast<StateId>(keys.size())).second) {
      keys.push_back(k);
      queue.push_back(k);
    }
  };
  auto land = [&](unsigned cell) -> Key {
    if (cell >= goal) return {goal, 3};
    if (snake(cell)) return {cell - 3, 1};
    if (ladder(cell)) return {cell + 4, 2};
    return {cell, 0};
  };
  intern({0, 0});
  std::map<Key, std::vector<Key>> moves;
  while (!queue.empty()) {
    const Key k = queue.front();
    queue.pop_front();
    if (k.second == 3) continue;
    for (unsigned d = 1; d <= 3; ++d) {
      const Key to = land(k.first + d);
      moves[k].push_back(to);
      intern(to);
    }
  }

  HmmBuilder b(Alphabet({"step", "snake", "ladder", "finish"}));
  auto name = [&](const Key& k) { return "c" + std::to_string(k.first) + ":" + kinds[k.second]; };
  for (const Key& k : keys) {
    unsigned hits = 0;
    if (k.second != 3) {
      for (unsigned d = 1; d <= 3; ++d) hits += snake(k.first + d) ? 1 : 0;
    }
    b.add_state(name(k), kinds[k.second], make_rational(hits, 3));
  }
  for (const Key& k : keys) {
    if (k.second == 3) {
      b.add_transition(name(k), name(k), 1);
      continue;
    }
    std::map<Key, unsigned> count;
    for (const Key& to : moves[k]) ++count[to];
    for (const auto& [to, c] : count) b.add_transition(name(k), name(to), make_rational(c, 3));
  }
  b.set_initial(name({0, 0}));
  return std::move(b).build();
}

Hmm random_hmm(unsigned states, unsigned observations, std::uint64_t seed) {
  if (states < 1 || observations < 1) throw ValidationError("random HMM needs at least one state and observation");
  std::mt19937_64 rng(seed);
  auto pick = [&](std::uint64_t n) { return rng() % n; };
  std::vector<std::string> obs_names;
  for (unsigned z = 0; z < observations; ++z) obs_names.push_back("z" + std::to_string(z));
  HmmBuilder b{Alphabet(obs_names)};
  for (unsigned s = 0; s < states; ++s) {
    const unsigned z = s < observations ? s : static_cast<unsigned>(pick(observations));
    b.add_state("s" + std::to_string(s), obs_names[z], make_rational(static_cast<long>(pick(5)), 4));
  }
  for (unsigned s = 0; s < states; ++s) {
    const unsigned degree = 1 + static_cast<unsigned>(pick(std::min(3u, states)));
    std::vector<unsigned> targets;
    while (targets.size() < degree) {
      const unsigned t = static_cast<unsigned>(pick(states));
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    std::vector<long> weights;
    long total = 0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      weights.push_back(1 + static_cast<long>(pick(4)));
      total += weights.back();
    }
    for (std::size_t k = 0; k < targets.size(); ++k) b.add_transition(s, targets[k], make_rational(weights[k], total));
  }
  b.set_initial(StateId{0});
  return std::move(b).build();
}

Dfa random_dfa(const Alphabet& alphabet, unsigned states, std::uint64_t seed) {
  if (states < 1) throw ValidationError("random DFA needs at least one state");
  std::mt19937_64 rng(seed);
  DfaBuilder b(alphabet);
  for (unsigned q = 0; q < states; ++q) b.add_state("q" + std::to_string(q), rng() % 2 == 0);
  for (unsigned q = 0; q < states; ++q) {
    for (Symbol a = 0; a < alphabet.size(); ++a) {
      if (rng() % 8 == 0) continue;
      b.add_transition(q, a, static_cast<StateId>(rng() % states));
    }
  }
  b.set_initial(StateId{0});
  return std::move(b).build();
}

}  // namespace hmmon
