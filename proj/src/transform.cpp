#include "hmmon/transform.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hmmon/errors.hpp"

namespace hmmon {

// ---------------------------------------------------------------------------
// Product

ProductHmm product(const Hmm& model, const Dfa& monitor, AlarmMode mode) {
  const Dfa aligned = align_monitor(model, monitor);
  const Dfa dfa = mode == AlarmMode::missed_alarm ? aligned.complement() : aligned.completed();

  std::map<std::pair<StateId, StateId>, StateId> index;
  std::vector<std::pair<StateId, StateId>> origin;
  std::deque<StateId> queue;
  auto intern = [&](StateId s, StateId q) {
    auto [it, fresh] = index.emplace(std::make_pair(s, q), static_cast<StateId>(origin.size()));
    if (fresh) {
      origin.emplace_back(s, q);
      queue.push_back(it->second);
    }
    return it->second;
  };

  // The monitor reads the initial observation too.
  intern(model.initial(), dfa.next(dfa.initial(), model.obs(model.initial())));
  std::vector<std::vector<Transition>> rows;
  while (!queue.empty()) {
    const StateId x = queue.front();
    queue.pop_front();
    const auto [s, q] = origin[x];
    std::vector<Transition> row;
    for (const auto& t : model.successors(s)) {
      row.push_back({intern(t.to, dfa.next(q, model.obs(t.to))), t.prob});
    }
    if (rows.size() <= x) rows.resize(x + 1);
    rows[x] = std::move(row);
  }
  rows.resize(origin.size());

  std::vector<std::string> names;
  std::vector<Symbol> obs;
  std::vector<Rational> risk;
  std::vector<bool> alarm;
  for (const auto& [s, q] : origin) {
    names.push_back("(" + model.name(s) + "," + dfa.name(q) + ")");
    obs.push_back(model.obs(s));
    risk.push_back(model.risk(s));
    alarm.push_back(dfa.accepting(q));
  }
  return ProductHmm{Hmm(model.observations(), std::move(names), std::move(obs), std::move(risk), 0, std::move(rows)),
                    std::move(alarm), std::move(origin), mode};
}

// ---------------------------------------------------------------------------
// Unrolling

UnrolledHmm unroll_with_risk(const ProductHmm& prod, unsigned horizon, UnrollEntry entry) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  const Hmm& m = prod.model;
  const Rational risk_max = m.max_risk();
  if (risk_max == 0) throw DegenerateRisk("all states have risk 0");

  const Alphabet& base = m.observations();
  if (base.find(kEndObservation) || base.find(kIgnoreObservation)) {
    throw ValidationError("observation names '$end' and '$ignore' are reserved");
  }
  auto names = base.names();
  names.emplace_back(kEndObservation);
  names.emplace_back(kIgnoreObservation);
  Alphabet alphabet(std::move(names));

  // The model member is a placeholder until the rows are known.
  UnrolledHmm out{m, horizon, prod.mode, {}, {}, {}, kNoState, kNoState, kNoState, 0, 0, risk_max};
  out.end_symbol = static_cast<Symbol>(base.size());
  out.ignore_symbol = static_cast<Symbol>(base.size() + 1);
  out.entry.assign(horizon, kNoState);

  // layer[k-1]: product states present at step k, in discovery order.
  std::vector<std::vector<StateId>> layer(horizon);
  std::vector<std::map<StateId, StateId>> id_of(horizon);
  StateId next_id = 0;
  auto add = [&](unsigned k, StateId s) {
    auto [it, fresh] = id_of[k - 1].emplace(s, next_id);
    if (fresh) {
      layer[k - 1].push_back(s);
      ++next_id;
    }
    return it->second;
  };
  for (unsigned k = 1; k <= horizon; ++k) {
    if (k == 1 || entry == UnrollEntry::every_step) out.entry[k - 1] = add(k, m.initial());
    if (k == 1) continue;
    for (StateId s : layer[k - 2]) {
      for (const auto& t : m.successors(s)) add(k, t.to);
    }
  }
  // Ids were handed out layer by layer, so layer order is id order.
  out.alarm_sink = next_id++;
  out.safe_sink = next_id++;
  out.ignore_sink = next_id++;

  std::vector<std::string> state_names(next_id);
  std::vector<Symbol> obs(next_id);
  std::vector<std::vector<Transition>> rows(next_id);
  out.step.assign(next_id, 0);
  out.origin.assign(next_id, kNoState);
  for (unsigned k = 1; k <= horizon; ++k) {
    for (StateId s : layer[k - 1]) {
      const StateId id = id_of[k - 1].at(s);
      state_names[id] = std::to_string(k) + ":" + m.name(s);
      obs[id] = m.obs(s);
      out.step[id] = k;
      out.origin[id] = s;
      auto& row = rows[id];
      if (k < horizon) {
        for (const auto& t : m.successors(s)) row.push_back({id_of[k].at(t.to), t.prob});
      } else if (prod.alarm[s]) {
        const Rational ratio = m.risk(s) / risk_max;
        if (ratio > 0) row.push_back({out.alarm_sink, ratio});
        if (ratio < 1) row.push_back({out.safe_sink, 1 - ratio});
      } else {
        row.push_back({out.ignore_sink, Rational(1)});
      }
    }
  }
  state_names[out.alarm_sink] = "t_alrm";
  state_names[out.safe_sink] = "t_safe";
  state_names[out.ignore_sink] = "t_ignr";
  obs[out.alarm_sink] = out.end_symbol;
  obs[out.safe_sink] = out.end_symbol;
  obs[out.ignore_sink] = out.ignore_symbol;
  for (StateId sink : {out.alarm_sink, out.safe_sink, out.ignore_sink}) rows[sink] = {{sink, Rational(1)}};

  out.model = Hmm(std::move(alphabet), std::move(state_names), std::move(obs), std::vector<Rational>(next_id, 0),
                  out.entry[0], std::move(rows));
  return out;
}

// ---------------------------------------------------------------------------
// Colored MDP

const MdpChoice* ColoredMdp::choice(StateId s, ActionId a) const {
  for (const auto& c : states[s].choices) {
    if (c.action == a) return &c;
  }
  return nullptr;
}

std::size_t ColoredMdp::transition_count() const {
  std::size_t total = 0;
  for (const auto& s : states) {
    for (const auto& c : s.choices) total += c.dist.size();
  }
  return total;
}

ColoredMdp build_colored_mdp(const UnrolledHmm& u, HorizonVariant variant) {
  const Hmm& m = u.model;
  const unsigned h = u.horizon;
  const bool up_to = variant == HorizonVariant::up_to;
  if (up_to && std::any_of(u.entry.begin(), u.entry.end(), [](StateId s) { return s == kNoState; })) {
    throw std::invalid_argument("up-to-horizon construction needs an unrolling with every-step entries");
  }

  ColoredMdp mdp;
  mdp.variant = variant;
  mdp.mode = u.mode;
  mdp.horizon = h;
  mdp.observation_count = u.end_symbol;  // the base alphabet precedes the two markers
  for (Symbol z = 0; z < u.end_symbol; ++z) mdp.actions.push_back(m.observations().name(z));
  mdp.actions.emplace_back(kEndObservation);
  if (up_to) {
    for (unsigned l = 1; l <= h; ++l) mdp.actions.push_back("len" + std::to_string(l));
  }
  mdp.first_observation = m.obs(m.initial());

  // Unrolled id -> MDP id; the ignore sink is dropped.
  std::vector<StateId> map(m.size(), kNoState);
  StateId next = up_to ? 1 : 0;
  for (StateId s = 0; s < m.size(); ++s) {
    if (s != u.ignore_sink) map[s] = next++;
  }
  mdp.states.resize(next);
  mdp.initial = up_to ? 0 : map[m.initial()];
  const StateId reset = mdp.initial;
  const StateId alarm = map[u.alarm_sink];
  const StateId safe = map[u.safe_sink];
  mdp.target = u.mode == AlarmMode::missed_alarm ? alarm : safe;
  mdp.other_sink = u.mode == AlarmMode::missed_alarm ? safe : alarm;
  for (StateId e : u.entry) mdp.entry.push_back(e == kNoState ? kNoState : map[e]);

  // Per state and action: mass following the action and the residual that
  // goes back to the start.
  const ActionId end = mdp.end_action();
  std::vector<std::vector<std::vector<Transition>>> forward(m.size());
  for (StateId s = 0; s < m.size(); ++s) {
    if (map[s] == kNoState || u.step[s] == 0) continue;
    forward[s].resize(end + 1);
    for (const auto& t : m.successors(s)) {
      const Symbol z = m.obs(t.to);
      if (z == u.ignore_symbol) continue;
      forward[s][z == u.end_symbol ? end : z].push_back({map[t.to], t.prob});
    }
  }

  // An action is kept for a color unless it redirects everything from every
  // state of that color; the end action survives if nothing else would.
  std::vector<std::vector<bool>> keep(h + 1, std::vector<bool>(end + 1, false));
  for (StateId s = 0; s < m.size(); ++s) {
    if (forward[s].empty()) continue;
    for (ActionId a = 0; a <= end; ++a) {
      if (!forward[s][a].empty()) keep[u.step[s]][a] = true;
    }
  }
  for (unsigned k = 1; k <= h; ++k) {
    if (std::none_of(keep[k].begin(), keep[k].end(), [](bool b) { return b; })) keep[k][end] = true;
  }

  for (StateId s = 0; s < m.size(); ++s) {
    if (map[s] == kNoState) continue;
    MdpState& st = mdp.states[map[s]];
    st.name = m.name(s);
    if (u.step[s] == 0) {
      st.color = h + 1;
      st.choices.push_back({end, {{map[s], Rational(1)}}});
      continue;
    }
    st.color = u.step[s];
    for (ActionId a = 0; a <= end; ++a) {
      if (!keep[st.color][a]) continue;
      MdpChoice c{a, forward[s][a]};
      Rational mass = 0;
      for (const auto& t : c.dist) mass += t.prob;
      if (mass < 1) c.dist.push_back({reset, 1 - mass});
      st.choices.push_back(std::move(c));
    }
  }
  if (up_to) {
    MdpState& start = mdp.states[0];
    start.name = "start";
    start.color = 0;
    for (unsigned l = 1; l <= h; ++l) {
      start.choices.push_back({mdp.length_action(l), {{mdp.entry[h - l], Rational(1)}}});
    }
  }
  return mdp;
}

std::string to_json(const ColoredMdp& mdp) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["kind"] = "colored-mdp";
  doc["variant"] = mdp.variant == HorizonVariant::exact ? "exact" : "upTo";
  doc["mode"] = mdp.mode == AlarmMode::missed_alarm ? "missedAlarm" : "falseAlarm";
  doc["horizon"] = mdp.horizon;
  doc["actions"] = mdp.actions;
  doc["initial"] = mdp.states[mdp.initial].name;
  doc["target"] = ordered_json::array({mdp.states[mdp.target].name});
  ordered_json states = ordered_json::array();
  for (const auto& st : mdp.states) {
    ordered_json js;
    js["name"] = st.name;
    js["color"] = st.color;
    ordered_json choices = ordered_json::array();
    for (const auto& c : st.choices) {
      ordered_json jc;
      jc["action"] = mdp.actions[c.action];
      ordered_json dist = ordered_json::array();
      for (const auto& t : c.dist) {
        ordered_json jt;
        jt["to"] = mdp.states[t.to].name;
        jt["prob"] = to_string(t.prob);
        dist.push_back(std::move(jt));
      }
      jc["dist"] = std::move(dist);
      choices.push_back(std::move(jc));
    }
    js["choices"] = std::move(choices);
    states.push_back(std::move(js));
  }
  doc["states"] = std::move(states);
  return doc.dump(2) + "\n";
}

std::string to_dot(const ColoredMdp& mdp) {
  std::ostringstream out;
  out << "digraph colored_mdp {\n  rankdir=LR;\n  __start [shape=point];\n";
  for (StateId s = 0; s < mdp.states.size(); ++s) {
    const auto& st = mdp.states[s];
    out << "  s" << s << " [shape=box, style=rounded, label=\"" << st.name << "\\ncolor " << st.color << "\"";
    if (s == mdp.target) out << ", peripheries=2";
    out << "];\n";
  }
  out << "  __start -> s" << mdp.initial << ";\n";
  for (StateId s = 0; s < mdp.states.size(); ++s) {
    for (const auto& c : mdp.states[s].choices) {
      const std::string node = "a" + std::to_string(s) + "_" + std::to_string(c.action);
      out << "  " << node << " [shape=point];\n";
      out << "  s" << s << " -> " << node << " [arrowhead=none, label=\"" << mdp.actions[c.action] << "\"];\n";
      for (const auto& t : c.dist) {
        out << "  " << node << " -> s" << t.to << " [label=\"" << to_string(t.prob) << "\"";
        if (t.to == mdp.initial && mdp.states[s].color != 0) out << ", color=gray";
        out << "];\n";
      }
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace hmmon
