#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace stmpc {

using State = Eigen::Vector2d;

/// Additive process disturbance `w` and damping perturbation `v`.
struct Disturbance {
  double w = 0.0;
  double v = 0.0;
};

/// Euler-discretized cart with a nonlinear (softening) spring. Members default
/// to the five-agent benchmark plant; all agents share one model.
struct AgentModel {
  double mass = 1.0;
  double spring = 0.33;      ///< k' in the spring force k' * exp(-x1) * x1
  double damping = 1.1;      ///< h'
  double sample_period = 0.3;

  double input_min = -4.0;
  double input_max = 4.0;
  double position_min = -1.95;
  double position_max = 1.95;

  double w_bound = 0.1;   ///< |w| <= w_bound
  double v_bound = 0.15;  ///< |v| <= v_bound

  /// Euclidean norm of the worst admissible (w, v) pair.
  double disturbance_radius() const;
};

/// One Euler step. Throws std::invalid_argument on non-finite x or u.
State step(const AgentModel& model, const State& x, double u, const Disturbance& d);

/// Applies `inputs[s]` with `disturbances[s]` from `x0`; returns the state
/// sequence of length inputs.size() + 1 (x0 first). disturbances may be empty
/// (treated as all-zero) but otherwise must match inputs in length.
std::vector<State> rollout(const AgentModel& model, const State& x0,
                           std::span<const double> inputs,
                           std::span<const Disturbance> disturbances = {});

/// Box over which the incremental gains below are sampled. The defaults cover
/// the neighborhood of the origin that closed-loop trajectories actually visit;
/// over the full position box the spring nonlinearity is much stiffer and the
/// sampled gains roughly double.
struct LipschitzBox {
  double position = 1.15;  ///< positions sampled from [-position, position]
  double velocity = 0.95;  ///< velocities sampled from [-velocity, velocity]
};

/// Sampled incremental gains of the one-step map: `nu` bounds
/// |f(x,u,0) - f(y,u,0)| / |x - y| and `xi` bounds the disturbance-to-state
/// gain |f(x,u,d) - f(x,u,0)| / |d|.
struct LipschitzEstimate {
  double nu = 0.0;
  double xi = 0.0;
};

/// Running-maximum estimate of (nu, xi) over `samples` random pairs drawn from
/// `box` with inputs from the input box. Deterministic in `seed`; the estimate
/// is non-decreasing in `samples` for a fixed seed.
LipschitzEstimate estimate_lipschitz(const AgentModel& model, const LipschitzBox& box,
                                     int samples, std::uint64_t seed);

}  // namespace stmpc
