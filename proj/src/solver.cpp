#include "stmpc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stmpc/rng.hpp"

namespace stmpc {

namespace {

constexpr double kFeasibilityTol = 1e-9;

}  // namespace

ScenarioSet build_scenarios(const AgentModel& model, int horizon, int extra, std::uint64_t seed) {
  if (extra < 0) {
    throw std::invalid_argument("build_scenarios: negative extra count");
  }
  const std::size_t n = static_cast<std::size_t>(horizon);
  ScenarioSet scen;
  scen.sequences.reserve(5 + static_cast<std::size_t>(extra));
  scen.sequences.emplace_back(n);  // nominal
  for (const double w : {model.w_bound, -model.w_bound}) {
    for (const double v : {model.v_bound, -model.v_bound}) {
      scen.sequences.emplace_back(n, Disturbance{w, v});
    }
  }
  SplitMix64 rng(seed);
  for (int k = 0; k < extra; ++k) {
    std::vector<Disturbance> seq(n);
    for (auto& d : seq) {
      d.w = (rng.next() & 1) ? model.w_bound : -model.w_bound;
      d.v = (rng.next() & 1) ? model.v_bound : -model.v_bound;
    }
    scen.sequences.push_back(std::move(seq));
  }
  return scen;
}

double plan_input(const SolveContext& ctx, const ControlPlan& plan, int s, const State& x) {
  if (s >= 0 && s < static_cast<int>(plan.head.size())) {
    return plan.head[static_cast<std::size_t>(s)];
  }
  const double u = plan.a * terminal_law(ctx.kappa, ctx.model, x) + plan.b * x.squaredNorm() +
                   plan.c;
  return std::clamp(u, ctx.model.input_min, ctx.model.input_max);
}

std::vector<State> nominal_rollout(const SolveContext& ctx, const ControlPlan& plan,
                                   const State& x0) {
  std::vector<State> xs;
  xs.reserve(static_cast<std::size_t>(ctx.N) + 1);
  xs.push_back(x0);
  for (int s = 0; s < ctx.N; ++s) {
    xs.push_back(step(ctx.model, xs.back(), plan_input(ctx, plan, s, xs.back()), {}));
  }
  return xs;
}

ControlPlan refit_head(const SolveContext& ctx, const ControlPlan& plan, const State& x0,
                       int head_len) {
  ControlPlan out;
  out.a = plan.a;
  out.b = plan.b;
  out.c = plan.c;
  out.head.reserve(static_cast<std::size_t>(head_len));
  State x = x0;
  for (int s = 0; s < head_len; ++s) {
    const double u = plan_input(ctx, plan, s, x);
    out.head.push_back(u);
    x = step(ctx.model, x, u, {});
  }
  return out;
}

ControlPlan candidate_plan(const SolveContext& ctx, const ControlPlan& plan, const State& x0,
                           int applied) {
  ControlPlan out;
  out.a = plan.a;
  out.b = plan.b;
  out.c = plan.c;
  out.head.reserve(static_cast<std::size_t>(ctx.N));
  State x = x0;
  for (int s = 0; s < applied + ctx.N; ++s) {
    // Within the previous horizon the shifted solution continues; past it the
    // terminal law takes over, which is what keeps the candidate feasible.
    const double u = s < ctx.N ? plan_input(ctx, plan, s, x)
                               : terminal_law(ctx.kappa, ctx.model, x);
    if (s >= applied) out.head.push_back(u);
    x = step(ctx.model, x, u, {});
  }
  return out;
}

namespace {

struct Evaluation {
  double value = 0.0;
  int binding = 0;
  double violation = 0.0;
};

// One sweep over the scenario set: worst-case objective and accumulated
// constraint violation in a single pass.
Evaluation evaluate(const SolveContext& ctx, const SolveInput& in, const ControlPlan& plan,
                    const ScenarioSet& scenarios, int head_len) {
  Evaluation ev;
  if (scenarios.sequences.empty()) return ev;
  ev.value = -std::numeric_limits<double>::infinity();
  const auto& w = ctx.weights;
  const auto prev_at = [&](int idx) {
    if (in.previous == nullptr || idx >= static_cast<int>(in.previous->states.size())) {
      return State(State::Zero());
    }
    return in.previous->states[static_cast<std::size_t>(idx)];
  };
  for (const double u : plan.head) {
    ev.violation += std::max(0.0, std::abs(u) - ctx.model.input_max);
  }
  for (std::size_t k = 0; k < scenarios.sequences.size(); ++k) {
    const auto& seq = scenarios.sequences[k];
    State x = in.x0;
    double cost = 0.0;
    for (int s = 0; s < ctx.N; ++s) {
      const double u = plan_input(ctx, plan, s, x);
      double stage = x.dot(w.Q * x) + w.R * u * u;
      for (const auto& nbr : in.neighbors) {
        const State e = x - nbr[static_cast<std::size_t>(s)];
        stage += e.dot(w.Qc * e);
      }
      cost += s < head_len ? stage / w.hbar : stage;
      if (in.previous != nullptr) {
        ev.violation += std::max(0.0, (x - prev_at(in.offset + s)).norm() - ctx.delta);
      }
      x = step(ctx.model, x, u, seq[static_cast<std::size_t>(s)]);
      ev.violation += std::max(0.0, std::abs(x[0]) - ctx.model.position_max);
    }
    cost += x.dot(w.P * x);
    ev.violation += std::max(0.0, x.dot(ctx.terminal.P * x) - ctx.terminal.rho * ctx.terminal.rho);
    if (in.previous != nullptr) {
      ev.violation += std::max(0.0, (x - prev_at(in.offset + ctx.N)).norm() - ctx.delta);
    }
    if (cost > ev.value) {
      ev.value = cost;
      ev.binding = static_cast<int>(k);
    }
  }
  return ev;
}

}  // namespace

WorstCase worst_case_objective(const SolveContext& ctx, const SolveInput& in,
                               const ControlPlan& plan, const ScenarioSet& scenarios,
                               int head_len) {
  for (const auto& nbr : in.neighbors) {
    if (static_cast<int>(nbr.size()) < ctx.N) {
      throw std::invalid_argument("worst_case_objective: neighbor trajectory too short");
    }
  }
  const Evaluation ev = evaluate(ctx, in, plan, scenarios, head_len);
  return {ev.value, ev.binding};
}

double constraint_violation(const SolveContext& ctx, const SolveInput& in,
                            const ControlPlan& plan, const ScenarioSet& scenarios) {
  return evaluate(ctx, in, plan, scenarios, static_cast<int>(plan.head.size())).violation;
}

bool feasible(const SolveContext& ctx, const SolveInput& in, const ControlPlan& plan,
              const ScenarioSet& scenarios) {
  return constraint_violation(ctx, in, plan, scenarios) <= kFeasibilityTol;
}

SearchResult pattern_search(const std::function<double(const std::vector<double>&)>& objective,
                            std::vector<double> start, std::vector<double> initial_steps,
                            double shrink, int budget) {
  if (start.size() != initial_steps.size()) {
    throw std::invalid_argument("pattern_search: step/start dimension mismatch");
  }
  SearchResult res;
  res.point = std::move(start);
  res.value = objective(res.point);
  res.evaluations = 1;
  std::vector<double> steps = std::move(initial_steps);
  while (res.evaluations < budget) {
    bool improved = false;
    for (std::size_t i = 0; i < res.point.size() && res.evaluations < budget; ++i) {
      for (const double sign : {1.0, -1.0}) {
        if (res.evaluations >= budget) break;
        std::vector<double> cand = res.point;
        cand[i] += sign * steps[i];
        const double fc = objective(cand);
        ++res.evaluations;
        if (fc < res.value) {
          res.point = std::move(cand);
          res.value = fc;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      double widest = 0.0;
      for (auto& s : steps) {
        s *= shrink;
        widest = std::max(widest, s);
      }
      if (widest < 1e-12) break;
    }
  }
  return res;
}

SolveResult solve(const SolveContext& ctx, const SolveInput& in, int head_len,
                  const ScenarioSet& scenarios, const SolverParams& params,
                  const ControlPlan* warm) {
  ControlPlan start;
  if (warm != nullptr) {
    start = refit_head(ctx, *warm, in.x0, head_len);
  } else {
    start.head.assign(static_cast<std::size_t>(head_len), 0.0);
  }

  const auto unpack = [&](const std::vector<double>& p) {
    ControlPlan plan;
    plan.head.assign(p.begin(), p.begin() + head_len);
    plan.a = p[static_cast<std::size_t>(head_len)];
    plan.b = p[static_cast<std::size_t>(head_len) + 1];
    plan.c = p[static_cast<std::size_t>(head_len) + 2];
    return plan;
  };

  // Track the best strictly feasible point seen alongside the penalized
  // search, so a fractional penalty can never trade feasibility away.
  double best_feasible_value = 0.0;
  ControlPlan best_feasible;
  bool have_feasible = false;
  const auto objective = [&](const std::vector<double>& p) {
    const ControlPlan plan = unpack(p);
    const Evaluation ev = evaluate(ctx, in, plan, scenarios, head_len);
    if (ev.violation <= kFeasibilityTol &&
        (!have_feasible || ev.value < best_feasible_value)) {
      best_feasible_value = ev.value;
      best_feasible = plan;
      have_feasible = true;
    }
    return ev.value + params.penalty_weight * ev.violation;
  };

  std::vector<double> point(start.head.begin(), start.head.end());
  point.push_back(start.a);
  point.push_back(start.b);
  point.push_back(start.c);
  const double input_range = ctx.model.input_max - ctx.model.input_min;
  std::vector<double> steps(static_cast<std::size_t>(head_len),
                            params.step_fraction * input_range);
  steps.push_back(params.step_fraction * params.a_range);
  steps.push_back(params.step_fraction * params.b_range);
  steps.push_back(params.step_fraction * params.c_range);

  pattern_search(objective, std::move(point), std::move(steps), params.shrink, params.budget);

  SolveResult res;
  if (have_feasible) {
    res.plan = best_feasible;
    res.feasible = true;
  } else if (warm != nullptr) {
    res.plan = start;
    res.feasible = false;
    res.fallback_used = true;
  } else if (in.previous == nullptr) {
    throw std::runtime_error("solve: no feasible plan at the initial trigger");
  } else {
    res.plan = start;
    res.feasible = false;
  }
  const Evaluation final_ev = evaluate(ctx, in, res.plan, scenarios, head_len);
  res.value = final_ev.value;
  res.binding_scenario = final_ev.binding;
  if (res.feasible) {
    res.feasible = final_ev.violation <= kFeasibilityTol;
  }
  res.predicted = nominal_rollout(ctx, res.plan, in.x0);
  return res;
}

}  // namespace stmpc
