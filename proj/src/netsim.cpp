#include "stmpc/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace stmpc {

long schedule_arrival(Link& link, const BroadcastMessage& msg, long t, int delay) {
  const long arrival = std::max(t + delay, link.last_arrival + 1);
  link.in_transit.push_back({msg, arrival});
  link.last_arrival = arrival;
  return arrival;
}

SendOutcome send(Link& link, const BroadcastMessage& msg, long t) {
  SendOutcome out;
  if (t > 0 && link.tau_bar > 0) {
    out.delay = static_cast<int>(link.rng.uniform_int(1, link.tau_bar));
  }
  out.arrival = schedule_arrival(link, msg, t, out.delay);
  return out;
}

void deliver_arrived(Link& link, long t, std::vector<BroadcastMessage>& mailbox) {
  // Arrivals are strictly increasing in send order, so the arrived messages
  // form a prefix of the transit queue.
  std::size_t n = 0;
  while (n < link.in_transit.size() && link.in_transit[n].arrival <= t) {
    mailbox.push_back(std::move(link.in_transit[n].msg));
    ++n;
  }
  link.in_transit.erase(link.in_transit.begin(),
                        link.in_transit.begin() + static_cast<std::ptrdiff_t>(n));
}

const BroadcastMessage& newest_available(const std::vector<BroadcastMessage>& mailbox) {
  if (mailbox.empty()) {
    throw std::logic_error("newest_available: no message has arrived");
  }
  const auto it = std::max_element(
      mailbox.begin(), mailbox.end(),
      [](const BroadcastMessage& a, const BroadcastMessage& b) {
        return a.origin_time < b.origin_time;
      });
  return *it;
}

World::World(WorldConfig cfg) : cfg_(std::move(cfg)) {
  const int m = static_cast<int>(cfg_.initial_states.size());
  if (m == 0) {
    throw std::invalid_argument("World: no agents");
  }
  if (static_cast<int>(cfg_.neighbors.size()) != m) {
    throw std::invalid_argument("World: adjacency size differs from agent count");
  }
  if (cfg_.max_interval < 1 || cfg_.max_interval > cfg_.solve.N) {
    throw std::invalid_argument("World: max_interval must lie in [1, N]");
  }
  if (cfg_.tau_bar < 0) {
    throw std::invalid_argument("World: negative tau_bar");
  }
  for (int i = 0; i < m; ++i) {
    for (const int j : cfg_.neighbors[static_cast<std::size_t>(i)]) {
      if (j < 0 || j >= m) {
        throw std::invalid_argument("World: neighbor id out of range");
      }
      if (j == i) {
        throw std::invalid_argument("World: self-loop in the graph");
      }
    }
  }

  agents_.resize(static_cast<std::size_t>(m));
  outgoing_.resize(static_cast<std::size_t>(m));
  links_.resize(static_cast<std::size_t>(m));
  mail_.resize(static_cast<std::size_t>(m));
  const int draw_bound = cfg_.random_delays ? cfg_.tau_bar : 0;
  for (int i = 0; i < m; ++i) {
    auto& agent = agents_[static_cast<std::size_t>(i)];
    agent.x = cfg_.initial_states[static_cast<std::size_t>(i)];
    agent.scenarios =
        build_scenarios(cfg_.solve.model, cfg_.solve.N, cfg_.solver.extra_scenarios,
                        mix_key(cfg_.seed, static_cast<std::uint64_t>(i),
                                static_cast<std::uint64_t>(i)));
    mail_[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(m));
    for (const int j : cfg_.neighbors[static_cast<std::size_t>(i)]) {
      Link link;
      link.from = j;
      link.to = i;
      link.tau_bar = draw_bound;
      link.rng = SplitMix64(mix_key(cfg_.seed, static_cast<std::uint64_t>(j),
                                    static_cast<std::uint64_t>(i)));
      links_[static_cast<std::size_t>(i)].push_back(std::move(link));
      outgoing_[static_cast<std::size_t>(j)].push_back(i);
    }
  }
}

const State& World::state(int agent) const {
  if (agent < 0 || agent >= agent_count()) {
    throw std::out_of_range("World::state: bad agent id");
  }
  return agents_[static_cast<std::size_t>(agent)].x;
}

Disturbance World::realized_disturbance(long t) const {
  const double arg =
      cfg_.time_in_seconds ? static_cast<double>(t) * cfg_.solve.model.sample_period
                           : static_cast<double>(t);
  Disturbance d;
  d.w = cfg_.w_amplitude * std::sin(arg / (4.0 * std::numbers::pi));
  d.v = cfg_.v_amplitude * std::cos(arg / (3.0 * std::numbers::pi));
  return d;
}

long World::latest_trigger_before(int agent, long t) const {
  const auto& times = agents_[static_cast<std::size_t>(agent)].trigger_times;
  long latest = -1;
  for (const long tk : times) {
    if (tk < t) latest = std::max(latest, tk);
  }
  return latest;
}

void World::trigger_agent(int i) {
  Agent& agent = agents_[static_cast<std::size_t>(i)];
  const long t = clock_;
  if (!agent.queue.empty()) {
    throw std::logic_error("World: input queue not drained at a trigger");
  }

  SolveInput in;
  in.x0 = agent.x;
  if (cfg_.coupled) {
    if (!agent.has_own) {
      // First trigger: nothing has ever been shared, every neighbor
      // trajectory is assumed to sit at the origin.
      in.neighbors.assign(cfg_.neighbors[static_cast<std::size_t>(i)].size(),
                          std::vector<State>(static_cast<std::size_t>(cfg_.solve.N),
                                             State::Zero()));
    } else {
      for (const int j : cfg_.neighbors[static_cast<std::size_t>(i)]) {
        const auto& box = mail_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const BroadcastMessage& msg = newest_available(box);
        const int offset = static_cast<int>(t) - msg.origin_time;
        if (offset > msg.interval + cfg_.tau_bar) {
          throw std::logic_error("World: message older than its padded span");
        }
        in.neighbors.push_back(
            assemble_neighbor_traj(msg, static_cast<int>(t), cfg_.solve.N));
        AssemblyRecord rec;
        rec.time = t;
        rec.agent = i;
        rec.neighbor = j;
        rec.origin = msg.origin_time;
        rec.interval = msg.interval;
        rec.offset = offset;
        rec.fresh = msg.origin_time >= latest_trigger_before(j, t);
        assemblies_.push_back(std::move(rec));
      }
    }
  }
  in.previous = agent.has_own ? &agent.own : nullptr;
  in.offset = agent.has_own ? static_cast<int>(t) - agent.own.origin_time : 0;

  ControlPlan candidate;
  const ControlPlan* warm = nullptr;
  if (agent.has_plan) {
    candidate = candidate_plan(cfg_.solve, agent.last_plan, agent.plan_origin,
                               agent.last_interval);
    warm = &candidate;
  }

  TriggerDecision decision = select_interval(cfg_.solve, in, t, cfg_.max_interval,
                                             agent.scenarios, cfg_.solver, warm);

  for (const double u : decision.plan.head) {
    agent.queue.push_back(u);
  }
  agent.has_plan = true;
  agent.last_plan = decision.plan;
  agent.plan_origin = agent.x;
  agent.last_interval = decision.interval;
  agent.next_trigger = decision.next_trigger;
  agent.trigger_times.push_back(t);

  BroadcastMessage msg = pad_broadcast(
      std::span<const State>(decision.predicted.data(),
                             static_cast<std::size_t>(cfg_.solve.N)),
      decision.interval, cfg_.tau_bar, static_cast<int>(t));
  agent.own = msg;
  agent.has_own = true;

  if (cfg_.coupled) {
    for (const int to : outgoing_[static_cast<std::size_t>(i)]) {
      auto& incoming = links_[static_cast<std::size_t>(to)];
      const auto it = std::find_if(incoming.begin(), incoming.end(),
                                   [&](const Link& l) { return l.from == i; });
      const SendOutcome out = send(*it, msg, t);
      delays_.push_back({t, i, to, out.delay, out.arrival});
      if (out.arrival <= t) {
        // Same-tick delivery; later-id agents triggering this tick see it.
        deliver_arrived(*it, t, mail_[static_cast<std::size_t>(to)][static_cast<std::size_t>(i)]);
      }
    }
  }

  TriggerRecord rec;
  rec.time = t;
  rec.agent = i;
  rec.interval = decision.interval;
  rec.value_1 = decision.value_1;
  rec.value_H = decision.value_H;
  rec.fallback = decision.fallback;
  rec.predicted = std::move(decision.predicted);
  rec.broadcast = std::move(msg);
  triggers_.push_back(std::move(rec));
}

void World::tick() {
  const long t = clock_;

  for (auto& incoming : links_) {
    for (auto& link : incoming) {
      deliver_arrived(link, t,
                      mail_[static_cast<std::size_t>(link.to)][static_cast<std::size_t>(link.from)]);
    }
  }

  for (int i = 0; i < agent_count(); ++i) {
    if (agents_[static_cast<std::size_t>(i)].next_trigger == t) {
      trigger_agent(i);
    }
  }

  const Disturbance d = realized_disturbance(t);
  for (int i = 0; i < agent_count(); ++i) {
    Agent& agent = agents_[static_cast<std::size_t>(i)];
    if (agent.queue.empty()) {
      throw std::logic_error("World: input queue empty at a dequeue");
    }
    const double u = agent.queue.front();
    agent.queue.pop_front();
    steps_.push_back({t, i, agent.x, u});
    agent.x = step(cfg_.solve.model, agent.x, u, d);
  }

  clock_ = t + 1;
}

void World::run(long steps) {
  for (long s = 0; s < steps; ++s) {
    tick();
  }
}

}  // namespace stmpc
