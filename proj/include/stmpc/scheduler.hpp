#pragma once

#include "stmpc/solver.hpp"

namespace stmpc {

/// Outcome of one trigger: the chosen inter-trigger interval, the plan whose
/// first `interval` inputs are applied open loop until the next trigger, and
/// the two bookkeeping values whose comparison justified the choice.
struct TriggerDecision {
  int interval = 1;
  ControlPlan plan;
  double value_H = 0.0;  ///< worst-case value of the chosen plan
  double value_1 = 0.0;  ///< worst-case value of the single-step plan
  long next_trigger = 0;
  bool fallback = false;  ///< single-step solve fell back to its warm start
  std::vector<State> predicted;  ///< nominal rollout of the chosen plan
};

/// Picks the largest interval H in [1, max_interval] whose optimal worst-case
/// value stays within the tie tolerance of the H = 1 value. Solves H = 1
/// first (warm-started from `candidate` when given), then scans H downward
/// from max_interval, warm-starting each solve from the single-step plan; the
/// first feasible H passing the value test wins, and H = 1 terminates the
/// scan unconditionally. An infeasible single-step solve with a candidate
/// yields a one-step fallback decision; without one it throws.
TriggerDecision select_interval(const SolveContext& ctx, const SolveInput& in,
                                long trigger_time, int max_interval,
                                const ScenarioSet& scenarios, const SolverParams& params,
                                const ControlPlan* candidate = nullptr);

}  // namespace stmpc
