#include "stmpc/netsim.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"

using namespace stmpc;

namespace {

BroadcastMessage message_from(int origin) {
  BroadcastMessage m;
  m.origin_time = origin;
  m.interval = 1;
  m.states = {State::Zero()};
  return m;
}

Link test_link(int tau_bar, std::uint64_t seed = 1) {
  Link link;
  link.tau_bar = tau_bar;
  link.rng = SplitMix64(seed);
  return link;
}

/// Five-agent benchmark world: path-with-a-hub graph and the published
/// starting points.
WorldConfig benchmark_world() {
  WorldConfig cfg;
  cfg.neighbors = {{1}, {0, 4}, {1, 3}, {2}, {1}};
  cfg.initial_states = {State(1.5, 0.7), State(-0.5, -1.1), State(-2.0, 0.5),
                        State(0.7, -1.0), State(1.95, 0.0)};
  return cfg;
}

}  // namespace

TEST_CASE("scheduled arrivals respect the ordering clamp") {
  SUBCASE("an uncontested delay lands at send time plus delay") {
    Link link = test_link(3);
    CHECK(schedule_arrival(link, message_from(5), 5, 2) == 7);
    CHECK(link.last_arrival == 7);
  }
  SUBCASE("a fast later message is clamped behind a slow earlier one") {
    Link link = test_link(3);
    CHECK(schedule_arrival(link, message_from(5), 5, 3) == 8);
    CHECK(schedule_arrival(link, message_from(6), 6, 1) == 9);
  }
  SUBCASE("the initial broadcast arrives immediately") {
    Link link = test_link(3);
    const auto out = send(link, message_from(0), 0);
    CHECK(out.delay == 0);
    CHECK(out.arrival == 0);
  }
  SUBCASE("a zero delay bound delivers at the send tick") {
    Link link = test_link(0);
    const auto out = send(link, message_from(7), 7);
    CHECK(out.delay == 0);
    CHECK(out.arrival == 7);
  }
}

TEST_CASE("drawn delays cover exactly the delay box and keep order") {
  Link link = test_link(3, 99);
  int lo = 1 << 20;
  int hi = 0;
  long prev = -1;
  for (long t = 1; t <= 200; ++t) {
    const auto out = send(link, message_from(static_cast<int>(t)), t);
    CHECK(out.delay >= 1);
    CHECK(out.delay <= 3);
    lo = std::min(lo, out.delay);
    hi = std::max(hi, out.delay);
    CHECK(out.arrival > prev);
    prev = out.arrival;
  }
  CHECK(lo == 1);
  CHECK(hi == 3);
}

TEST_CASE("the newest available message has the greatest origin") {
  SUBCASE("direct selection") {
    std::vector<BroadcastMessage> box = {message_from(0), message_from(2)};
    CHECK(newest_available(box).origin_time == 2);
    box.push_back(message_from(5));
    CHECK(newest_available(box).origin_time == 5);
  }
  SUBCASE("a single message is returned as is") {
    const std::vector<BroadcastMessage> box = {message_from(3)};
    CHECK(newest_available(box).origin_time == 3);
  }
  SUBCASE("an empty mailbox is a protocol error") {
    const std::vector<BroadcastMessage> box;
    CHECK_THROWS_AS(newest_available(box), std::logic_error);
  }
  SUBCASE("delivery timeline: unit delays over triggers at 0, 2 and 5") {
    Link link = test_link(3);
    schedule_arrival(link, message_from(0), 0, 1);
    schedule_arrival(link, message_from(2), 2, 1);
    schedule_arrival(link, message_from(5), 5, 1);
    std::vector<BroadcastMessage> box;
    deliver_arrived(link, 4, box);
    CHECK(newest_available(box).origin_time == 2);
    deliver_arrived(link, 6, box);
    CHECK(newest_available(box).origin_time == 5);
  }
}

TEST_CASE("agents resting at the origin of a disturbance-free world never move") {
  WorldConfig cfg = benchmark_world();
  cfg.initial_states.assign(5, State::Zero());
  cfg.w_amplitude = 0.0;
  cfg.v_amplitude = 0.0;
  cfg.solve.model.w_bound = 0.0;  // the planner also sees no disturbances
  cfg.solve.model.v_bound = 0.0;
  SUBCASE("without delays") {}
  SUBCASE("with delays") { cfg.random_delays = true; }
  World world(cfg);
  world.run(12);
  for (const auto& rec : world.step_log()) {
    CHECK(rec.state.norm() == 0.0);
    CHECK(rec.input == 0.0);
  }
  for (int i = 0; i < 5; ++i) {
    CHECK(world.state(i).norm() == 0.0);
  }
}

TEST_CASE("a unit maximum interval triggers every agent every tick") {
  WorldConfig cfg = benchmark_world();
  cfg.max_interval = 1;
  World world(cfg);
  world.run(8);
  CHECK(world.trigger_log().size() == 40);
  std::map<int, std::vector<long>> times;
  for (const auto& rec : world.trigger_log()) {
    CHECK(rec.interval == 1);
    times[rec.agent].push_back(rec.time);
  }
  for (const auto& [agent, ts] : times) {
    CHECK(ts == std::vector<long>{0, 1, 2, 3, 4, 5, 6, 7});
  }
}

TEST_CASE("the delayed five-agent run honors every messaging contract") {
  WorldConfig cfg = benchmark_world();
  cfg.random_delays = true;
  World world(cfg);
  world.run(50);

  SUBCASE("trigger gaps stay within the interval bounds") {
    std::map<int, std::vector<const TriggerRecord*>> by_agent;
    for (const auto& rec : world.trigger_log()) {
      by_agent[rec.agent].push_back(&rec);
      CHECK_FALSE(rec.fallback);
      CHECK(rec.value_H <= rec.value_1 + 1e-9 * (1.0 + std::abs(rec.value_1)));
    }
    for (const auto& [agent, recs] : by_agent) {
      CHECK(recs.front()->time == 0);
      for (std::size_t k = 1; k < recs.size(); ++k) {
        const long gap = recs[k]->time - recs[k - 1]->time;
        CHECK(gap == recs[k - 1]->interval);
        CHECK(gap >= 1);
        CHECK(gap <= 4);
      }
    }
  }

  SUBCASE("every new prediction stays consistent with the shared one") {
    std::map<int, const TriggerRecord*> last;
    for (const auto& rec : world.trigger_log()) {
      const auto it = last.find(rec.agent);
      if (it != last.end()) {
        const int offset = static_cast<int>(rec.time) - it->second->broadcast.origin_time;
        CHECK(consistency_satisfied(rec.predicted, it->second->broadcast, offset, 3.58));
      }
      last[rec.agent] = &rec;
    }
  }

  SUBCASE("delay draws and arrivals match the transit contract") {
    std::map<std::pair<int, int>, long> last_arrival;
    for (const auto& rec : world.delay_log()) {
      if (rec.time == 0) {
        CHECK(rec.delay == 0);
        CHECK(rec.arrival == 0);
      } else {
        CHECK(rec.delay >= 1);
        CHECK(rec.delay <= 3);
      }
      const auto key = std::make_pair(rec.from, rec.to);
      const auto it = last_arrival.find(key);
      if (it != last_arrival.end()) {
        CHECK(rec.arrival > it->second);
      }
      last_arrival[key] = rec.arrival;
    }
  }

  SUBCASE("assembled messages are never older than their padded span") {
    CHECK_FALSE(world.assembly_log().empty());
    for (const auto& rec : world.assembly_log()) {
      CHECK(rec.offset >= 0);
      CHECK(rec.offset <= rec.interval + 3);
    }
  }

  SUBCASE("one step per agent per tick, inside the track") {
    CHECK(world.step_log().size() == 250);
    std::set<std::pair<long, int>> seen;
    for (const auto& rec : world.step_log()) {
      CHECK(seen.insert({rec.time, rec.agent}).second);
      if (rec.time >= 1) {
        CHECK(std::abs(rec.state[0]) <= 1.95 + 1e-9);
      }
    }
  }
}

TEST_CASE("a zero transit bound with unit intervals is synchronous") {
  WorldConfig base = benchmark_world();
  base.tau_bar = 0;
  base.max_interval = 1;

  WorldConfig drawn = base;
  drawn.random_delays = true;
  World a(drawn);
  a.run(6);

  WorldConfig direct = base;
  direct.random_delays = false;
  World b(direct);
  b.run(6);

  for (const auto& rec : a.delay_log()) {
    CHECK(rec.delay == 0);
    CHECK(rec.arrival == rec.time);
  }
  std::map<int, std::vector<long>> times;
  for (const auto& rec : a.trigger_log()) {
    times[rec.agent].push_back(rec.time);
  }
  for (const auto& [agent, ts] : times) {
    CHECK(ts == std::vector<long>{0, 1, 2, 3, 4, 5});
  }

  REQUIRE(a.step_log().size() == b.step_log().size());
  for (std::size_t k = 0; k < a.step_log().size(); ++k) {
    const auto& ra = a.step_log()[k];
    const auto& rb = b.step_log()[k];
    CHECK(ra.time == rb.time);
    CHECK(ra.agent == rb.agent);
    CHECK((ra.state - rb.state).norm() == 0.0);
    CHECK(ra.input == rb.input);
  }
}

TEST_CASE("decoupled agents run without any messaging") {
  WorldConfig cfg = benchmark_world();
  cfg.coupled = false;
  World world(cfg);
  world.run(12);
  CHECK(world.delay_log().empty());
  CHECK(world.assembly_log().empty());

  std::map<int, const TriggerRecord*> last;
  for (const auto& rec : world.trigger_log()) {
    CHECK(rec.interval >= 1);
    CHECK(rec.interval <= 4);
    CHECK(rec.value_H <= rec.value_1 + 1e-9 * (1.0 + std::abs(rec.value_1)));
    const auto it = last.find(rec.agent);
    if (it != last.end()) {
      const int offset = static_cast<int>(rec.time) - it->second->broadcast.origin_time;
      CHECK(consistency_satisfied(rec.predicted, it->second->broadcast, offset, 3.58));
    }
    last[rec.agent] = &rec;
  }
}

TEST_CASE("identical configurations reproduce identical histories") {
  WorldConfig cfg = benchmark_world();
  cfg.random_delays = true;
  World a(cfg);
  a.run(10);
  World b(cfg);
  b.run(10);

  REQUIRE(a.step_log().size() == b.step_log().size());
  for (std::size_t k = 0; k < a.step_log().size(); ++k) {
    CHECK(a.step_log()[k].state[0] == b.step_log()[k].state[0]);
    CHECK(a.step_log()[k].state[1] == b.step_log()[k].state[1]);
    CHECK(a.step_log()[k].input == b.step_log()[k].input);
  }
  REQUIRE(a.trigger_log().size() == b.trigger_log().size());
  for (std::size_t k = 0; k < a.trigger_log().size(); ++k) {
    CHECK(a.trigger_log()[k].interval == b.trigger_log()[k].interval);
    CHECK(a.trigger_log()[k].value_H == b.trigger_log()[k].value_H);
  }
  REQUIRE(a.delay_log().size() == b.delay_log().size());
  for (std::size_t k = 0; k < a.delay_log().size(); ++k) {
    CHECK(a.delay_log()[k].delay == b.delay_log()[k].delay);
    CHECK(a.delay_log()[k].arrival == b.delay_log()[k].arrival);
  }
}

TEST_CASE("world construction validates the configuration") {
  SUBCASE("neighbor id out of range") {
    WorldConfig cfg = benchmark_world();
    cfg.neighbors[0] = {8};
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("adjacency size mismatch") {
    WorldConfig cfg = benchmark_world();
    cfg.neighbors.pop_back();
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("self-loop") {
    WorldConfig cfg = benchmark_world();
    cfg.neighbors[2] = {2};
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("interval bound outside the horizon") {
    WorldConfig cfg = benchmark_world();
    cfg.max_interval = 6;
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("bad agent id lookup") {
    const World world(benchmark_world());
    CHECK_THROWS_AS(world.state(5), std::out_of_range);
  }
}
