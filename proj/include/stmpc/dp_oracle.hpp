#pragma once

#include <functional>

namespace stmpc {

/// Inclusive uniform grid with `count` nodes over [lo, hi].
struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;
};

/// Scalar min-max optimal control instance small enough for exact value
/// iteration over grids. Exists purely as a brute-force reference the
/// scenario-based solver is benchmarked against.
struct MinMaxInstance {
  std::function<double(double, double, double)> dynamics;  ///< f(x, u, d)
  std::function<double(double, double)> stage;             ///< L(x, u)
  std::function<double(double)> terminal;                  ///< F(x)
  GridSpec state{-3.0, 3.0, 401};
  GridSpec input{-1.0, 1.0, 41};
  GridSpec disturbance{-0.1, 0.1, 11};
  int horizon = 2;
};

/// Exact min-max value iteration: V_0 = F on the state grid, then
/// V_l(x) = min_u max_d [L(x, u) + V_{l-1}(f(x, u, d))] with linear
/// interpolation (clamped at the grid ends). Returns V_horizon interpolated
/// at x0. Throws when the instance exceeds the supported grid sizes
/// (state 401, input 41, disturbance 11, horizon 3).
double dp_oracle(const MinMaxInstance& instance, double x0);

/// The benchmark instance: x+ = 0.9 x + u + d, |u| <= 1, |d| <= 0.1,
/// L = x^2 + u^2, F = x^2, horizon 2, solved from x0 = 1.
MinMaxInstance benchmark_instance();

/// Open-loop min-max value of the benchmark computed the same way the agent
/// solver works: coordinate pattern search over (u0, u1) against the complete
/// set of disturbance vertex sequences plus the nominal one.
double benchmark_search_value(int budget = 400);

}  // namespace stmpc
