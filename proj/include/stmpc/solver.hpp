#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stmpc/protocol.hpp"

namespace stmpc {

/// Local plan: committed open-loop inputs for the stages the agent will
/// execute before its next trigger, then a parameterized feedback tail
/// mu(x) = clamp(a * kappa(x) + b * ||x||^2 + c) for the remaining predicted
/// stages. The tail reacts to each disturbance scenario, which keeps the
/// worst-case tail cost bounded without enlarging the open-loop head.
struct ControlPlan {
  std::vector<double> head;
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
};

/// Disturbance scenarios the min-max objective maximizes over: the nominal
/// sequence, the four constant vertex sequences, and `extra` random per-stage
/// vertex sequences drawn deterministically from `seed`.
struct ScenarioSet {
  std::vector<std::vector<Disturbance>> sequences;
};

ScenarioSet build_scenarios(const AgentModel& model, int horizon, int extra, std::uint64_t seed);

/// Knobs of the deterministic coordinate pattern search and the scenario set.
/// The tail coefficients are unconstrained; their nominal ranges only size the
/// initial search steps (10% of each range by default).
struct SolverParams {
  int budget = 400;            ///< objective evaluations per solve
  double shrink = 0.5;         ///< step-shrink factor after a stalled sweep
  double step_fraction = 0.1;  ///< initial step as a fraction of each range
  double penalty_weight = 1e6; ///< cost per unit of constraint violation
  int extra_scenarios = 20;
  double a_range = 4.0;        ///< nominal width of the tail gain coefficient
  double b_range = 4.0;
  double c_range = 8.0;
  double tie_tolerance = 1e-9; ///< relative tolerance of the value comparison
};

/// Problem data shared by every solve of one agent.
struct SolveContext {
  AgentModel model;
  CostWeights weights;
  TerminalSet terminal;
  Eigen::RowVector2d kappa = default_terminal_gain();
  double delta = 3.58;  ///< consistency margin
  int N = 5;            ///< prediction horizon
};

/// Everything that varies between solves: current state, assembled neighbor
/// trajectories (empty when running decoupled), and the previously shared
/// prediction the new one must stay consistent with (null at the first
/// trigger, where the consistency constraint is vacuous).
struct SolveInput {
  State x0 = State::Zero();
  std::vector<std::vector<State>> neighbors;  ///< each of length N
  const BroadcastMessage* previous = nullptr;
  int offset = 0;  ///< current time minus previous->origin_time
};

/// Input the plan applies at stage `s` in state `x`.
double plan_input(const SolveContext& ctx, const ControlPlan& plan, int s, const State& x);

/// Disturbance-free rollout of the plan over the horizon (N + 1 states).
std::vector<State> nominal_rollout(const SolveContext& ctx, const ControlPlan& plan,
                                   const State& x0);

/// Re-expresses a plan as an `head_len`-stage open-loop head by evaluating it
/// along its own nominal rollout; the tail coefficients carry over. Used to
/// warm-start a solve of a different head length from an existing plan.
ControlPlan refit_head(const SolveContext& ctx, const ControlPlan& plan, const State& x0,
                       int head_len);

/// Shifted continuation of an applied plan: the warm start for the next
/// trigger after executing the first `applied` stages.
ControlPlan candidate_plan(const SolveContext& ctx, const ControlPlan& plan, const State& x0,
                           int applied);

/// Worst-case discounted objective of the plan over the scenario set.
/// `head_len` stages are weighted 1/hbar, the remaining predicted stages and
/// the terminal cost enter undiscounted. Returns the maximum and the index of
/// the scenario attaining it.
struct WorstCase {
  double value = 0.0;
  int scenario = 0;
};
WorstCase worst_case_objective(const SolveContext& ctx, const SolveInput& in,
                               const ControlPlan& plan, const ScenarioSet& scenarios,
                               int head_len);

/// Total constraint violation of the plan across all scenarios: head inputs
/// outside the input box, positions outside the track from stage 1 on, the
/// consistency margin against the previous broadcast, and scenario endpoints
/// outside the terminal set. Zero iff the plan is feasible.
double constraint_violation(const SolveContext& ctx, const SolveInput& in,
                            const ControlPlan& plan, const ScenarioSet& scenarios);

/// True when the accumulated violation is numerically zero.
bool feasible(const SolveContext& ctx, const SolveInput& in, const ControlPlan& plan,
              const ScenarioSet& scenarios);

struct SolveResult {
  ControlPlan plan;
  double value = 0.0;  ///< worst-case objective, penalty-free
  bool feasible = false;
  bool fallback_used = false;  ///< search failed; plan is the warm-start fallback
  int binding_scenario = 0;
  std::vector<State> predicted;  ///< nominal rollout of the plan
};

/// Minimizes the penalized worst-case objective over the head inputs and tail
/// coefficients with a deterministic coordinate pattern search, warm-started
/// from `warm` when given (the head is refit to `head_len` stages first).
SolveResult solve(const SolveContext& ctx, const SolveInput& in, int head_len,
                  const ScenarioSet& scenarios, const SolverParams& params,
                  const ControlPlan* warm = nullptr);

/// Deterministic coordinate pattern search: sweeps coordinates in order,
/// accepts the first strict improvement among +step / -step, halves all steps
/// after a sweep with no improvement, stops at the evaluation budget.
struct SearchResult {
  std::vector<double> point;
  double value = 0.0;
  int evaluations = 0;
};
SearchResult pattern_search(const std::function<double(const std::vector<double>&)>& objective,
                            std::vector<double> start, std::vector<double> initial_steps,
                            double shrink, int budget);

}  // namespace stmpc
