#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "stmpc/dynamics.hpp"

namespace stmpc {

/// Quadratic cost weights shared by all agents. `hbar` > 1 discounts the
/// stages an agent actually executes relative to the predicted tail, which is
/// what lets longer inter-trigger intervals win the value comparison.
struct CostWeights {
  Eigen::Matrix2d Q = Eigen::Matrix2d{{0.6, 0.0}, {0.0, 0.6}};
  Eigen::Matrix2d Qc = Eigen::Matrix2d{{0.5, 0.0}, {0.0, 0.5}};  ///< coupling weight
  double R = 1.0;
  Eigen::Matrix2d P = Eigen::Matrix2d{{8.05, 2.90}, {2.90, 3.48}};
  double hbar = 1.1;
};

/// Ellipsoidal terminal region { x : x' P x <= rho^2 }.
struct TerminalSet {
  Eigen::Matrix2d P = Eigen::Matrix2d{{8.05, 2.90}, {2.90, 3.48}};
  double rho = 2.449489742783178;  ///< sqrt(6)
};

bool in_terminal_set(const TerminalSet& ts, const State& x);

/// Saturated linear terminal controller u = clamp(K x).
double terminal_law(const Eigen::RowVector2d& gain, const AgentModel& model, const State& x);

/// Default terminal gain for the benchmark plant.
inline Eigen::RowVector2d default_terminal_gain() { return {-0.87, -1.04}; }

/// Running cost: ||x||_Q^2 + R u^2 + sum_j ||x - x_j||_Qc^2.
double stage_cost(const CostWeights& w, const State& x, double u,
                  std::span<const State> neighbor_states);

/// Terminal cost ||x||_P^2.
double terminal_cost(const CostWeights& w, const State& x);

/// Zero-padded predicted trajectory as shared with neighbors. `states[s]` is
/// the prediction for time origin_time + s; entries past the optimization
/// horizon are zero so receivers can index into the message at any admissible
/// offset without running off the end.
struct BroadcastMessage {
  int origin_time = 0;
  int interval = 1;  ///< inter-trigger interval chosen at origin_time
  std::vector<State> states;
};

/// Builds the message for a solve at `origin_time` that chose `interval`.
/// `predicted` holds the first N predicted states; the message covers offsets
/// 0 .. interval + tau_bar + N, zero from offset N on. The terminal state is
/// not shared: it lies in the terminal set, whose radius is below the
/// consistency margin, so zero is a valid stand-in for every receiver.
BroadcastMessage pad_broadcast(std::span<const State> predicted, int interval, int tau_bar,
                               int origin_time);

/// Neighbor trajectory over the local horizon: states `msg.states[offset + s]`
/// for s = 0 .. N - 1, where offset = local_time - msg.origin_time. Reads past
/// the padded range as zero. Throws if the message is from the future.
std::vector<State> assemble_neighbor_traj(const BroadcastMessage& msg, int local_time, int N);

/// Checks the trajectory-consistency constraint: every predicted state stays
/// within `delta` of the previously shared prediction for the same wall-clock
/// time. `predicted` has N + 1 states starting at `prev.origin_time + offset`.
bool consistency_satisfied(std::span<const State> predicted, const BroadcastMessage& prev,
                           int offset, double delta);

/// Worst one-step violation of the consistency margin (max over s of
/// ||predicted[s] - prev[offset + s]|| - delta); negative when satisfied.
double consistency_margin(std::span<const State> predicted, const BroadcastMessage& prev,
                          int offset, double delta);

/// Smallest admissible consistency margin for the given incremental gains,
/// disturbance radius, horizon N, maximal interval Hbar, and terminal set:
/// the larger of the accumulated disturbance spread nu^(N-1-Hbar) * phi with
/// phi = 2 * sum_{s=0}^{2 Hbar} nu^s * xi * dbar, and the terminal-set radius
/// rho / sqrt(lambda_min(P)). Requires N >= Hbar + 1.
double validate_delta(double nu, double xi, double dbar, int N, int Hbar,
                      const TerminalSet& ts);

}  // namespace stmpc
