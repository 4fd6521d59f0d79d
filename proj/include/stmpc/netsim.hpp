#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "stmpc/rng.hpp"
#include "stmpc/scheduler.hpp"

namespace stmpc {

/// A broadcast on its way through a directed link.
struct Transit {
  BroadcastMessage msg;
  long arrival = 0;
};

/// Directed communication link with bounded integer transit delays and
/// order-preserving delivery. `tau_bar` here is the delay-draw bound; zero
/// means every message arrives at its send tick.
struct Link {
  int from = 0;
  int to = 0;
  int tau_bar = 0;
  long last_arrival = -1;
  SplitMix64 rng{0};
  std::vector<Transit> in_transit;
};

/// Applies the no-disordering clamp and records the message on the link:
/// arrival = max(t + delay, last_arrival + 1).
long schedule_arrival(Link& link, const BroadcastMessage& msg, long t, int delay);

struct SendOutcome {
  int delay = 0;
  long arrival = 0;
};

/// Draws the transit delay (uniform on [1, tau_bar]; zero at the initial tick
/// or when tau_bar is zero) and schedules the message on the link.
SendOutcome send(Link& link, const BroadcastMessage& msg, long t);

/// Moves every in-transit message with arrival <= t into the mailbox,
/// preserving arrival order.
void deliver_arrived(Link& link, long t, std::vector<BroadcastMessage>& mailbox);

/// The delivered message with the greatest origin time. Throws when the
/// mailbox is empty (nothing has ever arrived from that neighbor).
const BroadcastMessage& newest_available(const std::vector<BroadcastMessage>& mailbox);

/// World parameters: the controller sharing one plant/cost description across
/// agents, the communication graph, and the delivery regime.
struct WorldConfig {
  std::vector<std::vector<int>> neighbors;  ///< adjacency over 0-based agent ids
  std::vector<State> initial_states;
  int max_interval = 4;
  int tau_bar = 3;            ///< message padding span and offset bound
  bool random_delays = false; ///< draw per-message delays on [1, tau_bar]
  bool coupled = true;        ///< false: no messages and no coupling terms
  std::uint64_t seed = 42;
  SolveContext solve;
  SolverParams solver;
  bool time_in_seconds = false;  ///< sinusoid argument: tick index or seconds
  double w_amplitude = 0.1;      ///< realized additive disturbance amplitude
  double v_amplitude = 0.15;     ///< realized parametric uncertainty amplitude
};

/// One applied input: the state at the start of the tick and the input that
/// advanced it.
struct StepRecord {
  long time = 0;
  int agent = 0;
  State state = State::Zero();
  double input = 0.0;
};

/// One trigger: the scheduler decision plus the broadcast it produced.
struct TriggerRecord {
  long time = 0;
  int agent = 0;
  int interval = 1;
  double value_1 = 0.0;
  double value_H = 0.0;
  bool fallback = false;
  std::vector<State> predicted;
  BroadcastMessage broadcast;
};

/// One message handed to a link.
struct DelayRecord {
  long time = 0;
  int from = 0;
  int to = 0;
  int delay = 0;
  long arrival = 0;
};

/// One neighbor trajectory assembled at a trigger. `fresh` marks the used
/// message being at least as recent as the neighbor's latest broadcast
/// strictly before the trigger.
struct AssemblyRecord {
  long time = 0;
  int agent = 0;
  int neighbor = 0;
  long origin = 0;
  int interval = 1;  ///< interval carried by the used message
  int offset = 0;
  bool fresh = true;
};

/// Discrete-event world: per-tick delivery, ascending-id triggering, and one
/// plant step per agent per tick under the realized disturbances.
class World {
 public:
  explicit World(WorldConfig cfg);

  void tick();
  void run(long steps);

  long clock() const { return clock_; }
  int agent_count() const { return static_cast<int>(agents_.size()); }
  const State& state(int agent) const;

  const std::vector<StepRecord>& step_log() const { return steps_; }
  const std::vector<TriggerRecord>& trigger_log() const { return triggers_; }
  const std::vector<DelayRecord>& delay_log() const { return delays_; }
  const std::vector<AssemblyRecord>& assembly_log() const { return assemblies_; }

 private:
  struct Agent {
    State x = State::Zero();
    std::deque<double> queue;
    long next_trigger = 0;
    std::vector<long> trigger_times;
    bool has_plan = false;
    ControlPlan last_plan;
    State plan_origin = State::Zero();
    int last_interval = 0;
    bool has_own = false;
    BroadcastMessage own;  ///< last own broadcast, the consistency reference
    ScenarioSet scenarios;
  };

  void trigger_agent(int i);
  Disturbance realized_disturbance(long t) const;
  long latest_trigger_before(int agent, long t) const;

  WorldConfig cfg_;
  long clock_ = 0;
  std::vector<Agent> agents_;
  std::vector<std::vector<int>> outgoing_;      ///< recipients per sender
  std::vector<std::vector<Link>> links_;        ///< links_[to][...] incoming
  std::vector<std::vector<std::vector<BroadcastMessage>>> mail_;  ///< [to][from]
  std::vector<StepRecord> steps_;
  std::vector<TriggerRecord> triggers_;
  std::vector<DelayRecord> delays_;
  std::vector<AssemblyRecord> assemblies_;
};

}  // namespace stmpc
