#include "stmpc/dynamics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "stmpc/rng.hpp"

using namespace stmpc;

TEST_CASE("step matches hand-computed value") {
  AgentModel m;
  const State next = step(m, State(1.5, 0.7), 0.0, {});
  CHECK(next[0] == doctest::Approx(1.71).epsilon(1e-12));
  CHECK(next[1] == doctest::Approx(0.43586517).epsilon(1e-5));
}

TEST_CASE("origin is an equilibrium of the undisturbed plant") {
  AgentModel m;
  const State next = step(m, State::Zero(), 0.0, {});
  CHECK(next[0] == 0.0);
  CHECK(next[1] == 0.0);
}

TEST_CASE("disturbances enter affinely through the velocity channel") {
  AgentModel m;
  const State x(0.4, -1.2);
  const double u = 1.7;
  const State base = step(m, x, u, {});

  SUBCASE("additive disturbance shifts velocity by (T/mass) * w") {
    const State shifted = step(m, x, u, {0.1, 0.0});
    CHECK(shifted[0] == base[0]);
    CHECK(shifted[1] - base[1] == doctest::Approx(0.03).epsilon(1e-14));
  }
  SUBCASE("damping perturbation scales with the current velocity") {
    const State shifted = step(m, x, u, {0.0, 0.15});
    CHECK(shifted[0] == base[0]);
    CHECK(shifted[1] - base[1] ==
          doctest::Approx(-(m.sample_period / m.mass) * 0.15 * x[1]).epsilon(1e-14));
  }
}

TEST_CASE("step is a pure function") {
  AgentModel m;
  const State x(-0.33, 0.91);
  const State a = step(m, x, -2.5, {0.07, -0.11});
  const State b = step(m, x, -2.5, {0.07, -0.11});
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
}

TEST_CASE("step rejects non-finite arguments") {
  AgentModel m;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(step(m, State(nan, 0.0), 0.0, {}), std::invalid_argument);
  CHECK_THROWS_AS(step(m, State(0.0, 0.0), inf, {}), std::invalid_argument);
}

TEST_CASE("rollout composes step") {
  AgentModel m;
  const State x0(1.0, -0.5);
  const std::vector<double> u = {0.5, -1.0, 2.0};
  const std::vector<Disturbance> d = {{0.1, 0.0}, {0.0, -0.15}, {-0.05, 0.05}};
  const auto states = rollout(m, x0, u, d);
  REQUIRE(states.size() == 4);
  CHECK((states[0] - x0).norm() == 0.0);
  State x = x0;
  for (std::size_t s = 0; s < u.size(); ++s) {
    x = step(m, x, u[s], d[s]);
    CHECK((states[s + 1] - x).norm() == 0.0);
  }

  SUBCASE("empty disturbance span means nominal") {
    const auto nominal = rollout(m, x0, u);
    CHECK((nominal[1] - step(m, x0, u[0], {})).norm() == 0.0);
  }
  SUBCASE("length mismatch throws") {
    const std::vector<Disturbance> short_d = {{0.1, 0.0}};
    CHECK_THROWS_AS(rollout(m, x0, u, short_d), std::invalid_argument);
  }
}

TEST_CASE("disturbance radius is the norm of the bound vector") {
  AgentModel m;
  CHECK(m.disturbance_radius() == doctest::Approx(0.18027756377319945).epsilon(1e-15));
}

TEST_CASE("gain estimate is exact when the map degenerates") {
  AgentModel m;
  SUBCASE("zero sample period makes the map the identity") {
    m.sample_period = 0.0;
    const auto est = estimate_lipschitz(m, {}, 200, 7);
    CHECK(est.nu == 1.0);
    CHECK(est.xi == 0.0);
  }
  SUBCASE("additive-only disturbance has gain exactly T/mass") {
    m.v_bound = 0.0;
    const auto est = estimate_lipschitz(m, {}, 200, 7);
    CHECK(est.xi == doctest::Approx(0.3).epsilon(1e-9));
  }
}

TEST_CASE("gain estimate is deterministic and monotone in the sample count") {
  AgentModel m;
  const LipschitzBox box;
  const auto a = estimate_lipschitz(m, box, 2000, 42);
  const auto b = estimate_lipschitz(m, box, 2000, 42);
  CHECK(a.nu == b.nu);
  CHECK(a.xi == b.xi);
  const auto more = estimate_lipschitz(m, box, 6000, 42);
  CHECK(more.nu >= a.nu);
  CHECK(more.xi >= a.xi);
}

TEST_CASE("sampled gains respect the analytic bounds on the default box") {
  AgentModel m;
  const auto est = estimate_lipschitz(m, {}, 20000, 3);
  // Jacobian norm over the default box peaks near 1.2201; the disturbance
  // gain's supremum is T * sqrt(1 + velocity^2) = 0.41379 at the box edge.
  CHECK(est.nu > 1.0);
  CHECK(est.nu < 1.2202);
  CHECK(est.xi > 0.35);
  CHECK(est.xi < 0.41380);
}
