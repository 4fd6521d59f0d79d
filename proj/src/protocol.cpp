#include "stmpc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stmpc {

bool in_terminal_set(const TerminalSet& ts, const State& x) {
  return x.dot(ts.P * x) <= ts.rho * ts.rho;
}

double terminal_law(const Eigen::RowVector2d& gain, const AgentModel& model, const State& x) {
  return std::clamp(gain.dot(x), model.input_min, model.input_max);
}

double stage_cost(const CostWeights& w, const State& x, double u,
                  std::span<const State> neighbor_states) {
  double cost = x.dot(w.Q * x) + w.R * u * u;
  for (const State& xn : neighbor_states) {
    const State e = x - xn;
    cost += e.dot(w.Qc * e);
  }
  return cost;
}

double terminal_cost(const CostWeights& w, const State& x) {
  return x.dot(w.P * x);
}

BroadcastMessage pad_broadcast(std::span<const State> predicted, int interval, int tau_bar,
                               int origin_time) {
  if (predicted.empty()) {
    throw std::invalid_argument("pad_broadcast: empty prediction");
  }
  const int N = static_cast<int>(predicted.size());
  BroadcastMessage msg;
  msg.origin_time = origin_time;
  msg.interval = interval;
  msg.states.assign(static_cast<std::size_t>(interval + tau_bar + N + 1), State::Zero());
  std::copy(predicted.begin(), predicted.end(), msg.states.begin());
  return msg;
}

namespace {

State padded_at(const BroadcastMessage& msg, int idx) {
  if (idx < 0 || idx >= static_cast<int>(msg.states.size())) {
    return State::Zero();
  }
  return msg.states[static_cast<std::size_t>(idx)];
}

}  // namespace

std::vector<State> assemble_neighbor_traj(const BroadcastMessage& msg, int local_time, int N) {
  const int offset = local_time - msg.origin_time;
  if (offset < 0) {
    throw std::invalid_argument("assemble_neighbor_traj: message from the future");
  }
  std::vector<State> traj(static_cast<std::size_t>(N));
  for (int s = 0; s < N; ++s) {
    traj[static_cast<std::size_t>(s)] = padded_at(msg, offset + s);
  }
  return traj;
}

double consistency_margin(std::span<const State> predicted, const BroadcastMessage& prev,
                          int offset, double delta) {
  double worst = -delta;
  for (int s = 0; s < static_cast<int>(predicted.size()); ++s) {
    const double dev = (predicted[static_cast<std::size_t>(s)] - padded_at(prev, offset + s)).norm();
    worst = std::max(worst, dev - delta);
  }
  return worst;
}

bool consistency_satisfied(std::span<const State> predicted, const BroadcastMessage& prev,
                           int offset, double delta) {
  return consistency_margin(predicted, prev, offset, delta) <= 0.0;
}

double validate_delta(double nu, double xi, double dbar, int N, int Hbar,
                      const TerminalSet& ts) {
  if (N < Hbar + 1) {
    throw std::invalid_argument("validate_delta: horizon must exceed the maximal interval");
  }
  double spread = 0.0;
  for (int s = N - 1 - Hbar; s <= N - 1 + Hbar; ++s) {
    spread += std::pow(nu, s) * 2.0 * xi * dbar;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(ts.P);
  const double lambda_min = eig.eigenvalues().minCoeff();
  if (lambda_min <= 0.0) {
    throw std::invalid_argument("validate_delta: terminal weight must be positive definite");
  }
  return std::max(spread, ts.rho / std::sqrt(lambda_min));
}

}  // namespace stmpc
