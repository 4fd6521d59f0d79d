#include "stmpc/dp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stmpc/solver.hpp"

namespace stmpc {

namespace {

std::vector<double> grid_nodes(const GridSpec& g) {
  std::vector<double> xs(static_cast<std::size_t>(g.count));
  if (g.count == 1) {
    xs[0] = g.lo;
    return xs;
  }
  const double h = (g.hi - g.lo) / (g.count - 1);
  for (int i = 0; i < g.count; ++i) xs[static_cast<std::size_t>(i)] = g.lo + h * i;
  return xs;
}

double interp(const std::vector<double>& table, const GridSpec& g, double x) {
  if (g.count == 1) return table[0];
  const double clamped = std::clamp(x, g.lo, g.hi);
  const double h = (g.hi - g.lo) / (g.count - 1);
  const double pos = (clamped - g.lo) / h;
  const int i = std::min(static_cast<int>(pos), g.count - 2);
  const double frac = pos - i;
  return table[static_cast<std::size_t>(i)] * (1.0 - frac) +
         table[static_cast<std::size_t>(i) + 1] * frac;
}

}  // namespace

double dp_oracle(const MinMaxInstance& instance, double x0) {
  if (instance.state.count > 401 || instance.input.count > 41 ||
      instance.disturbance.count > 11 || instance.horizon > 3) {
    throw std::invalid_argument("dp_oracle: instance exceeds supported grid sizes");
  }
  if (instance.state.count < 2 || instance.input.count < 1 || instance.disturbance.count < 1 ||
      instance.horizon < 1) {
    throw std::invalid_argument("dp_oracle: degenerate instance");
  }
  const auto xs = grid_nodes(instance.state);
  const auto us = grid_nodes(instance.input);
  const auto ds = grid_nodes(instance.disturbance);

  std::vector<double> value(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) value[i] = instance.terminal(xs[i]);

  for (int l = 0; l < instance.horizon; ++l) {
    std::vector<double> next(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const double u : us) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const double d : ds) {
          const double v = instance.stage(xs[i], u) +
                           interp(value, instance.state, instance.dynamics(xs[i], u, d));
          worst = std::max(worst, v);
        }
        best = std::min(best, worst);
      }
      next[i] = best;
    }
    value = std::move(next);
  }
  return interp(value, instance.state, x0);
}

MinMaxInstance benchmark_instance() {
  MinMaxInstance inst;
  inst.dynamics = [](double x, double u, double d) { return 0.9 * x + u + d; };
  inst.stage = [](double x, double u) { return x * x + u * u; };
  inst.terminal = [](double x) { return x * x; };
  return inst;
}

double benchmark_search_value(int budget) {
  const MinMaxInstance inst = benchmark_instance();
  // Complete vertex enumeration: the nominal sequence plus every sign pattern
  // of the extreme disturbance over the two stages.
  std::vector<std::vector<double>> scenarios = {{0.0, 0.0}};
  for (const double d0 : {-0.1, 0.1}) {
    for (const double d1 : {-0.1, 0.1}) {
      scenarios.push_back({d0, d1});
    }
  }
  const auto objective = [&](const std::vector<double>& u) {
    double penalty = 0.0;
    for (const double ui : u) penalty += std::max(0.0, std::abs(ui) - 1.0);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& seq : scenarios) {
      double x = 1.0;
      double cost = 0.0;
      for (int s = 0; s < 2; ++s) {
        cost += inst.stage(x, u[static_cast<std::size_t>(s)]);
        x = inst.dynamics(x, u[static_cast<std::size_t>(s)], seq[static_cast<std::size_t>(s)]);
      }
      cost += inst.terminal(x);
      worst = std::max(worst, cost);
    }
    return worst + 1e6 * penalty;
  };
  return pattern_search(objective, {0.0, 0.0}, {0.2, 0.2}, 0.5, budget).value;
}

}  // namespace stmpc
