#include "stmpc/scheduler.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace stmpc {

TriggerDecision select_interval(const SolveContext& ctx, const SolveInput& in,
                                long trigger_time, int max_interval,
                                const ScenarioSet& scenarios, const SolverParams& params,
                                const ControlPlan* candidate) {
  if (max_interval < 1) {
    throw std::invalid_argument("select_interval: max_interval must be positive");
  }

  SolveResult one = solve(ctx, in, 1, scenarios, params, candidate);
  TriggerDecision d;
  d.value_1 = one.value;
  const double tolerance = params.tie_tolerance * (1.0 + std::abs(one.value));

  if (one.feasible) {
    for (int h = max_interval; h >= 2; --h) {
      SolveResult long_plan = solve(ctx, in, h, scenarios, params, &one.plan);
      if (long_plan.feasible && long_plan.value <= one.value + tolerance) {
        d.interval = h;
        d.plan = std::move(long_plan.plan);
        d.value_H = long_plan.value;
        d.next_trigger = trigger_time + h;
        d.predicted = std::move(long_plan.predicted);
        return d;
      }
    }
  }

  d.interval = 1;
  d.plan = std::move(one.plan);
  d.value_H = one.value;
  d.next_trigger = trigger_time + 1;
  d.fallback = !one.feasible;
  d.predicted = std::move(one.predicted);
  return d;
}

}  // namespace stmpc
