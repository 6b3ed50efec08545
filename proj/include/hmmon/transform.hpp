#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hmmon/model.hpp"

namespace hmmon {

// Which misclassification the construction searches for. Missed alarms are
// traces the monitor rejects, so the product runs the complemented monitor;
// false alarms are traces it accepts.
enum class AlarmMode { missed_alarm, false_alarm };

// Synchronous product of an HMM and a monitor. `alarm[x]` marks product
// states whose monitor component is accepting in the (possibly complemented)
// monitor. Only reachable pairs are built.
struct ProductHmm {
  Hmm model;
  std::vector<bool> alarm;
  std::vector<std::pair<StateId, StateId>> origin;  // (model state, monitor state)
  AlarmMode mode;
};

// Throws AlphabetMismatch if the monitor alphabet differs from the model's.
ProductHmm product(const Hmm& model, const Dfa& monitor, AlarmMode mode);

// Which step-1..h copies of the initial state are used as roots when
// materializing the unrolling. The up-to-horizon colored MDP needs every step.
enum class UnrollEntry { initial_only, every_step };

// Horizon-bounded acyclic copy of a product with the three terminal sinks.
// All risks are zero; the step-h states move to the alarm/safe sinks with the
// normalized risk r(s)/rMax, or to the ignore sink when not alarm states.
struct UnrolledHmm {
  Hmm model;
  unsigned horizon = 0;
  AlarmMode mode = AlarmMode::missed_alarm;
  std::vector<unsigned> step;    // 1..h, 0 for the sinks
  std::vector<StateId> origin;   // product state, kNoState for the sinks
  std::vector<StateId> entry;    // entry[k-1] = <k, iota> or kNoState
  StateId alarm_sink = kNoState;
  StateId safe_sink = kNoState;
  StateId ignore_sink = kNoState;
  Symbol end_symbol = 0;
  Symbol ignore_symbol = 0;
  Rational risk_max;
};

inline constexpr const char* kEndObservation = "$end";
inline constexpr const char* kIgnoreObservation = "$ignore";

// Throws DegenerateRisk when every state has risk 0.
UnrolledHmm unroll_with_risk(const ProductHmm& product, unsigned horizon,
                             UnrollEntry entry = UnrollEntry::initial_only);

enum class HorizonVariant { exact, up_to };

using ActionId = std::uint32_t;
using Color = std::uint32_t;

struct MdpChoice {
  ActionId action;
  std::vector<Transition> dist;
};

struct MdpState {
  std::string name;
  Color color;
  std::vector<MdpChoice> choices;  // ordered by action id
};

// Colored MDP produced from an unrolled HMM. Colors 1..h are the steps,
// color 0 is the length-choosing start state of the up-to-horizon variant,
// and color h+1 holds the two terminal sinks. Every action's leftover mass
// is redirected to `initial`.
//
// Action ids: [0, |Z|) are the observations in model order, |Z| is the end
// marker, and |Z| + l is "trace length l" (up-to-horizon variant only).
struct ColoredMdp {
  HorizonVariant variant = HorizonVariant::exact;
  AlarmMode mode = AlarmMode::missed_alarm;
  unsigned horizon = 0;
  std::vector<std::string> actions;
  std::size_t observation_count = 0;
  Symbol first_observation = 0;  // obs of the model's initial state
  std::vector<MdpState> states;
  StateId initial = kNoState;
  StateId target = kNoState;      // alarm sink (missed alarms) or safe sink (false alarms)
  StateId other_sink = kNoState;
  std::vector<StateId> entry;     // entry[k-1] = MDP state <k, iota> or kNoState

  ActionId end_action() const { return static_cast<ActionId>(observation_count); }
  ActionId length_action(unsigned length) const { return static_cast<ActionId>(observation_count + length); }
  Color color_count() const { return horizon + 2; }
  const MdpChoice* choice(StateId s, ActionId a) const;
  std::size_t transition_count() const;
};

// Throws std::invalid_argument if the up-to-horizon variant is requested on
// an unrolling without every-step entries.
ColoredMdp build_colored_mdp(const UnrolledHmm& unrolled, HorizonVariant variant);

std::string to_json(const ColoredMdp& mdp);
std::string to_dot(const ColoredMdp& mdp);

}  // namespace hmmon
