#include "stmpc/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "stmpc/rng.hpp"

namespace stmpc {

double AgentModel::disturbance_radius() const {
  return std::hypot(w_bound, v_bound);
}

State step(const AgentModel& model, const State& x, double u, const Disturbance& d) {
  if (!x.allFinite() || !std::isfinite(u)) {
    throw std::invalid_argument("step: non-finite state or input");
  }
  const double T = model.sample_period;
  const double force = model.spring * std::exp(-x[0]) * x[0] + model.damping * x[1] - u +
                       d.v * x[1] - d.w;
  return State(x[0] + T * x[1], x[1] - (T / model.mass) * force);
}

std::vector<State> rollout(const AgentModel& model, const State& x0,
                           std::span<const double> inputs,
                           std::span<const Disturbance> disturbances) {
  if (!disturbances.empty() && disturbances.size() != inputs.size()) {
    throw std::invalid_argument("rollout: disturbance/input length mismatch");
  }
  std::vector<State> states;
  states.reserve(inputs.size() + 1);
  states.push_back(x0);
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const Disturbance d = disturbances.empty() ? Disturbance{} : disturbances[s];
    states.push_back(step(model, states.back(), inputs[s], d));
  }
  return states;
}

LipschitzEstimate estimate_lipschitz(const AgentModel& model, const LipschitzBox& box,
                                     int samples, std::uint64_t seed) {
  SplitMix64 rng(seed);
  auto draw_state = [&] {
    return State(rng.uniform(-box.position, box.position),
                 rng.uniform(-box.velocity, box.velocity));
  };
  LipschitzEstimate est;
  for (int i = 0; i < samples; ++i) {
    const State x = draw_state();
    const State y = draw_state();
    const double u = rng.uniform(model.input_min, model.input_max);
    const double w = rng.uniform(-model.w_bound, model.w_bound);
    const double v = rng.uniform(-model.v_bound, model.v_bound);

    const State fx = step(model, x, u, {});
    const double dxy = (x - y).norm();
    if (dxy > 1e-12) {
      est.nu = std::max(est.nu, (fx - step(model, y, u, {})).norm() / dxy);
    }
    const double dd = std::hypot(w, v);
    if (dd > 1e-12) {
      est.xi = std::max(est.xi, (step(model, x, u, {w, v}) - fx).norm() / dd);
    }
  }
  return est;
}

}  // namespace stmpc
