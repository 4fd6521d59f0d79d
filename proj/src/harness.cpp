#include "stmpc/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "stmpc/rng.hpp"

namespace stmpc {
namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw std::invalid_argument("config: " + field + ": " + why);
}

void expect_keys(const json& obj, const std::string& prefix,
                 std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) known = known || it.key() == key;
    if (!known) bad(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown key");
  }
}

const json* field(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void read_number(const json& obj, const char* key, double& out) {
  if (const json* v = field(obj, key)) {
    if (!v->is_number()) bad(key, "expected a number");
    out = v->get<double>();
  }
}

void read_int(const json& obj, const char* key, int& out) {
  if (const json* v = field(obj, key)) {
    if (!v->is_number_integer()) bad(key, "expected an integer");
    out = v->get<int>();
  }
}

void read_long(const json& obj, const char* key, long& out) {
  if (const json* v = field(obj, key)) {
    if (!v->is_number_integer()) bad(key, "expected an integer");
    out = v->get<long>();
  }
}

void read_seed(const json& obj, const char* key, std::uint64_t& out) {
  if (const json* v = field(obj, key)) {
    if (!v->is_number_integer() || (v->is_number_integer() && v->get<long long>() < 0))
      bad(key, "expected a nonnegative integer");
    out = v->get<std::uint64_t>();
  }
}

void read_bool(const json& obj, const char* key, bool& out) {
  if (const json* v = field(obj, key)) {
    if (!v->is_boolean()) bad(key, "expected true or false");
    out = v->get<bool>();
  }
}

void read_matrix(const json& obj, const char* key, Eigen::Matrix2d& out) {
  const json* v = field(obj, key);
  if (!v) return;
  if (!v->is_array() || v->size() != 2) bad(key, "expected a 2x2 matrix as [[a,b],[c,d]]");
  for (int r = 0; r < 2; ++r) {
    const json& row = (*v)[r];
    if (!row.is_array() || row.size() != 2) bad(key, "expected a 2x2 matrix as [[a,b],[c,d]]");
    for (int c = 0; c < 2; ++c) {
      if (!row[c].is_number()) bad(key, "matrix entries must be numbers");
      out(r, c) = row[c].get<double>();
    }
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class OutFile {
public:
  OutFile(const std::filesystem::path& p) : f_(std::fopen(p.string().c_str(), "wb")) {
    if (!f_) throw std::runtime_error("cannot open " + p.string() + " for writing");
  }
  ~OutFile() {
    if (f_) std::fclose(f_);
  }
  std::FILE* get() { return f_; }

private:
  std::FILE* f_;
};

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "P-DMPC") return Variant::PDMPC;
  if (name == "ST-DMPC") return Variant::STDMPC;
  if (name == "ST-DMPC-D") return Variant::STDMPCD;
  if (name == "P-DeMPC") return Variant::PDeMPC;
  if (name == "ST-DeMPC") return Variant::STDeMPC;
  bad("variant", "unknown name \"" + name +
                     "\" (expected P-DMPC, ST-DMPC, ST-DMPC-D, P-DeMPC or ST-DeMPC)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::PDMPC: return "P-DMPC";
    case Variant::STDMPC: return "ST-DMPC";
    case Variant::STDMPCD: return "ST-DMPC-D";
    case Variant::PDeMPC: return "P-DeMPC";
    case Variant::STDeMPC: return "ST-DeMPC";
  }
  throw std::logic_error("unreachable variant");
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.neighbors = {{1}, {0, 4}, {1, 3}, {2}, {1}};
  cfg.initial_states = {State(1.5, 0.7), State(-0.5, -1.1), State(-2.0, 0.5), State(0.7, -1.0),
                        State(1.95, 0.0)};
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad("(document)", std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) bad("(document)", "expected a JSON object");

  expect_keys(doc, "",
              {"model", "weights", "rho", "kappa", "horizon", "max_interval", "tau_bar", "delta",
               "strict_delta", "nu", "xi", "graph", "initial_states", "steps", "seed", "variant",
               "solver", "time_in_seconds", "w_amplitude", "v_amplitude"});

  ExperimentConfig cfg = default_config();

  if (const json* m = field(doc, "model")) {
    if (!m->is_object()) bad("model", "expected an object");
    expect_keys(*m, "model",
                {"mass", "spring", "damping", "sample_period", "input_min", "input_max",
                 "position_min", "position_max", "w_bound", "v_bound"});
    read_number(*m, "mass", cfg.model.mass);
    read_number(*m, "spring", cfg.model.spring);
    read_number(*m, "damping", cfg.model.damping);
    read_number(*m, "sample_period", cfg.model.sample_period);
    read_number(*m, "input_min", cfg.model.input_min);
    read_number(*m, "input_max", cfg.model.input_max);
    read_number(*m, "position_min", cfg.model.position_min);
    read_number(*m, "position_max", cfg.model.position_max);
    read_number(*m, "w_bound", cfg.model.w_bound);
    read_number(*m, "v_bound", cfg.model.v_bound);
  }

  if (const json* w = field(doc, "weights")) {
    if (!w->is_object()) bad("weights", "expected an object");
    expect_keys(*w, "weights", {"Q", "Qc", "R", "P", "hbar"});
    read_matrix(*w, "Q", cfg.weights.Q);
    read_matrix(*w, "Qc", cfg.weights.Qc);
    read_number(*w, "R", cfg.weights.R);
    read_matrix(*w, "P", cfg.weights.P);
    read_number(*w, "hbar", cfg.weights.hbar);
  }
  cfg.terminal.P = cfg.weights.P;
  read_number(doc, "rho", cfg.terminal.rho);

  if (const json* k = field(doc, "kappa")) {
    if (!k->is_array() || k->size() != 2 || !(*k)[0].is_number() || !(*k)[1].is_number())
      bad("kappa", "expected a pair of numbers");
    cfg.kappa(0) = (*k)[0].get<double>();
    cfg.kappa(1) = (*k)[1].get<double>();
  }

  read_int(doc, "horizon", cfg.N);
  read_int(doc, "max_interval", cfg.max_interval);
  read_int(doc, "tau_bar", cfg.tau_bar);
  read_number(doc, "delta", cfg.delta);
  read_bool(doc, "strict_delta", cfg.strict_delta);
  read_number(doc, "nu", cfg.nu);
  read_number(doc, "xi", cfg.xi);

  if (const json* g = field(doc, "graph")) {
    if (!g->is_array()) bad("graph", "expected an array of neighbor lists");
    cfg.neighbors.clear();
    for (const json& row : *g) {
      if (!row.is_array()) bad("graph", "expected an array of neighbor lists");
      std::vector<int> list;
      for (const json& id : row) {
        if (!id.is_number_integer()) bad("graph", "agent ids must be integers");
        list.push_back(id.get<int>() - 1);  // the file is 1-based
      }
      cfg.neighbors.push_back(std::move(list));
    }
  }

  if (const json* s = field(doc, "initial_states")) {
    if (!s->is_array()) bad("initial_states", "expected an array of [x1, x2] pairs");
    cfg.initial_states.clear();
    for (const json& row : *s) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
        bad("initial_states", "expected an array of [x1, x2] pairs");
      cfg.initial_states.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
  }

  read_long(doc, "steps", cfg.steps);
  read_seed(doc, "seed", cfg.seed);
  if (const json* v = field(doc, "variant")) {
    if (!v->is_string()) bad("variant", "expected a string");
    cfg.variant = parse_variant(v->get<std::string>());
  }

  if (const json* s = field(doc, "solver")) {
    if (!s->is_object()) bad("solver", "expected an object");
    expect_keys(*s, "solver",
                {"budget", "shrink", "step_fraction", "penalty_weight", "extra_scenarios",
                 "a_range", "b_range", "c_range", "tie_tolerance"});
    read_int(*s, "budget", cfg.solver.budget);
    read_number(*s, "shrink", cfg.solver.shrink);
    read_number(*s, "step_fraction", cfg.solver.step_fraction);
    read_number(*s, "penalty_weight", cfg.solver.penalty_weight);
    read_int(*s, "extra_scenarios", cfg.solver.extra_scenarios);
    read_number(*s, "a_range", cfg.solver.a_range);
    read_number(*s, "b_range", cfg.solver.b_range);
    read_number(*s, "c_range", cfg.solver.c_range);
    read_number(*s, "tie_tolerance", cfg.solver.tie_tolerance);
  }

  read_bool(doc, "time_in_seconds", cfg.time_in_seconds);
  read_number(doc, "w_amplitude", cfg.w_amplitude);
  read_number(doc, "v_amplitude", cfg.v_amplitude);

  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot read config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate_config(const ExperimentConfig& cfg) {
  const int M = static_cast<int>(cfg.initial_states.size());
  if (M == 0) bad("initial_states", "at least one agent is required");
  if (cfg.neighbors.size() != static_cast<std::size_t>(M))
    bad("graph", "needs one neighbor list per agent (" + std::to_string(cfg.neighbors.size()) +
                     " lists for " + std::to_string(M) + " agents)");
  for (int i = 0; i < M; ++i)
    for (int j : cfg.neighbors[i]) {
      if (j < 0 || j >= M)
        bad("graph", "agent " + std::to_string(i + 1) + " lists neighbor " + std::to_string(j + 1) +
                         " outside 1.." + std::to_string(M));
      if (j == i) bad("graph", "agent " + std::to_string(i + 1) + " lists itself");
    }

  if (cfg.max_interval < 1) bad("max_interval", "must be at least 1");
  if (cfg.N < cfg.max_interval + 1)
    bad("horizon", "must be at least max_interval + 1 = " + std::to_string(cfg.max_interval + 1));
  if (cfg.tau_bar < 0) bad("tau_bar", "must be nonnegative");
  if (cfg.steps < 0) bad("steps", "must be nonnegative");
  if (!(cfg.model.mass > 0.0)) bad("model.mass", "must be positive");
  if (!(cfg.model.sample_period > 0.0)) bad("model.sample_period", "must be positive");
  if (!(cfg.model.input_max > cfg.model.input_min)) bad("model.input_max", "empty input box");
  if (!(cfg.model.position_max > cfg.model.position_min))
    bad("model.position_max", "empty position box");
  if (cfg.model.w_bound < 0.0 || cfg.model.v_bound < 0.0)
    bad("model.w_bound", "disturbance bounds must be nonnegative");
  if (!(cfg.weights.hbar >= 1.0)) bad("weights.hbar", "must be at least 1");
  if (!(cfg.terminal.rho > 0.0)) bad("rho", "must be positive");
  if (cfg.solver.budget < 1) bad("solver.budget", "must be at least 1");
  if (!(cfg.solver.tie_tolerance >= 0.0)) bad("solver.tie_tolerance", "must be nonnegative");
  if (!(cfg.nu > 0.0)) bad("nu", "must be positive");
  if (cfg.xi < 0.0) bad("xi", "must be nonnegative");
  if (!(cfg.delta > 0.0)) bad("delta", "must be positive");
  if (cfg.w_amplitude < 0.0 || cfg.v_amplitude < 0.0)
    bad("w_amplitude", "disturbance amplitudes must be nonnegative");
  if (cfg.w_amplitude > cfg.model.w_bound + 1e-12 || cfg.v_amplitude > cfg.model.v_bound + 1e-12)
    bad("w_amplitude", "realized disturbance amplitudes exceed the model bounds");

  if (cfg.strict_delta) {
    double bound = validate_delta(cfg.nu, cfg.xi, cfg.model.disturbance_radius(), cfg.N,
                                  cfg.max_interval, cfg.terminal);
    if (cfg.delta + 0.01 < bound) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "%.17g is below the validated consistency bound %.2f; "
                    "raise delta or set strict_delta to false",
                    cfg.delta, bound);
      bad("delta", msg);
    }
  }
}

WorldConfig world_config(const ExperimentConfig& cfg) {
  WorldConfig wc;
  wc.neighbors = cfg.neighbors;
  wc.initial_states = cfg.initial_states;
  const bool periodic = cfg.variant == Variant::PDMPC || cfg.variant == Variant::PDeMPC;
  wc.max_interval = periodic ? 1 : cfg.max_interval;
  wc.tau_bar = cfg.tau_bar;
  wc.random_delays = cfg.variant == Variant::STDMPCD;
  wc.coupled = cfg.variant != Variant::PDeMPC && cfg.variant != Variant::STDeMPC;
  wc.seed = cfg.seed;
  wc.solve = SolveContext{cfg.model, cfg.weights, cfg.terminal, cfg.kappa, cfg.delta, cfg.N};
  wc.solver = cfg.solver;
  wc.time_in_seconds = cfg.time_in_seconds;
  wc.w_amplitude = cfg.w_amplitude;
  wc.v_amplitude = cfg.v_amplitude;
  return wc;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  World world(world_config(cfg));
  world.run(cfg.steps);

  RunResult r;
  r.config = cfg;
  r.steps = world.step_log();
  r.triggers = world.trigger_log();
  r.delays = world.delay_log();
  r.assemblies = world.assembly_log();

  const int M = world.agent_count();
  r.final_states.reserve(M);
  for (int i = 0; i < M; ++i) r.final_states.push_back(world.state(i));

  r.trigger_counts.assign(M, 0);
  r.fallback_counts.assign(M, 0);
  for (const TriggerRecord& t : r.triggers) {
    ++r.trigger_counts[t.agent];
    if (t.fallback) ++r.fallback_counts[t.agent];
  }
  for (const AssemblyRecord& a : r.assemblies) ++(a.fresh ? r.fresh_assemblies : r.stale_assemblies);

  if (r.steps.size() != static_cast<std::size_t>(M) * static_cast<std::size_t>(cfg.steps))
    throw std::logic_error("step log is not one record per agent per tick");

  r.mu.assign(static_cast<std::size_t>(cfg.steps), 0.0);
  r.psi.assign(static_cast<std::size_t>(cfg.steps), 0.0);
  double J = 0.0;
  for (long t = 0; t < cfg.steps; ++t) {
    const StepRecord* row = r.steps.data() + static_cast<std::size_t>(t) * M;
    double mu_t = 0.0;
    double psi_t = 0.0;
    double stage = 0.0;
    for (int i = 0; i < M; ++i) {
      const State& x = row[i].state;
      double own = x.dot(cfg.weights.Q * x);
      double coupling = 0.0;
      for (int j : cfg.neighbors[i]) {
        State diff = x - row[j].state;
        coupling += diff.dot(cfg.weights.Qc * diff);
      }
      mu_t += own;
      psi_t += coupling;
      stage += own + coupling + cfg.weights.R * row[i].input * row[i].input;
    }
    r.mu[static_cast<std::size_t>(t)] = mu_t / M;
    r.psi[static_cast<std::size_t>(t)] = psi_t / M;
    J += stage;
  }
  r.J_bar = J / M;

  const double Tsim = cfg.model.sample_period * static_cast<double>(cfg.steps);
  for (int i = 0; i < M; ++i)
    if (r.trigger_counts[i] > 0)
      r.T_bar += Tsim / (M * static_cast<double>(r.trigger_counts[i]));
  return r;
}

void write_outputs(const RunResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::path dir(out_dir);
  fs::create_directories(dir);

  std::map<std::pair<long, int>, const TriggerRecord*> trig;
  for (const TriggerRecord& t : result.triggers) trig[{t.time, t.agent}] = &t;

  {
    OutFile f(dir / "trajectories.csv");
    std::fprintf(f.get(), "tick,agent,x1,x2,u,triggered,H_star,V1,VH,fallback\n");
    for (const StepRecord& s : result.steps) {
      std::fprintf(f.get(), "%ld,%d,%s,%s,%s,", s.time, s.agent + 1, fmt(s.state(0)).c_str(),
                   fmt(s.state(1)).c_str(), fmt(s.input).c_str());
      auto it = trig.find({s.time, s.agent});
      if (it == trig.end()) {
        std::fprintf(f.get(), "0,,,,\n");
      } else {
        const TriggerRecord& t = *it->second;
        std::fprintf(f.get(), "1,%d,%s,%s,%d\n", t.interval, fmt(t.value_1).c_str(),
                     fmt(t.value_H).c_str(), t.fallback ? 1 : 0);
      }
    }
  }
  {
    OutFile f(dir / "delays.csv");
    std::fprintf(f.get(), "tick,link,delay,arrival\n");
    for (const DelayRecord& d : result.delays)
      std::fprintf(f.get(), "%ld,%d->%d,%d,%ld\n", d.time, d.from + 1, d.to + 1, d.delay,
                   d.arrival);
  }
  {
    OutFile f(dir / "metrics.csv");
    std::fprintf(f.get(), "tick,mu,psi\n");
    for (std::size_t t = 0; t < result.mu.size(); ++t)
      std::fprintf(f.get(), "%zu,%s,%s\n", t, fmt(result.mu[t]).c_str(),
                   fmt(result.psi[t]).c_str());
  }
  {
    nlohmann::ordered_json summary;
    summary["variant"] = variant_name(result.config.variant);
    summary["seed"] = result.config.seed;
    summary["steps"] = result.config.steps;
    summary["T_bar"] = result.T_bar;
    summary["J_bar"] = result.J_bar;
    summary["trigger_counts"] = result.trigger_counts;
    summary["fallback_counts"] = result.fallback_counts;
    summary["fresh_assemblies"] = result.fresh_assemblies;
    summary["stale_assemblies"] = result.stale_assemblies;
    std::vector<std::vector<double>> finals;
    for (const State& x : result.final_states) finals.push_back({x(0), x(1)});
    summary["final_states"] = finals;
    OutFile f(dir / "summary.json");
    std::string text = summary.dump(2);
    text.push_back('\n');
    std::fwrite(text.data(), 1, text.size(), f.get());
  }
}

std::vector<RunResult> run_table(const ExperimentConfig& base, std::uint64_t seed,
                                 const std::string& out_dir) {
  const Variant order[] = {Variant::PDMPC, Variant::STDMPC, Variant::STDMPCD, Variant::PDeMPC,
                           Variant::STDeMPC};
  std::vector<ExperimentConfig> cfgs;
  for (Variant v : order) {
    ExperimentConfig c = base;
    c.variant = v;
    c.seed = seed;
    cfgs.push_back(std::move(c));
  }

  int threads = 1;
  if (const char* env = std::getenv("STMPC_THREADS"))
    threads = std::clamp(std::atoi(env), 1, 16);

  std::vector<RunResult> results(cfgs.size());
  for (std::size_t begin = 0; begin < cfgs.size(); begin += threads) {
    std::size_t end = std::min(cfgs.size(), begin + static_cast<std::size_t>(threads));
    std::vector<std::future<RunResult>> batch;
    for (std::size_t k = begin; k < end; ++k)
      batch.push_back(
          std::async(std::launch::async, [&cfgs, k] { return run_experiment(cfgs[k]); }));
    for (std::size_t k = begin; k < end; ++k) results[k] = batch[k - begin].get();
  }

  namespace fs = std::filesystem;
  fs::path dir(out_dir);
  fs::create_directories(dir);
  for (const RunResult& r : results)
    write_outputs(r, (dir / variant_name(r.config.variant)).string());

  const int M = static_cast<int>(base.initial_states.size());
  OutFile f(dir / "table.csv");
  std::fprintf(f.get(), "variant,seed,T_bar,J_bar");
  for (int i = 1; i <= M; ++i) std::fprintf(f.get(), ",s_%d", i);
  std::fprintf(f.get(), "\n");
  for (const RunResult& r : results) {
    std::fprintf(f.get(), "%s,%llu,%s,%s", variant_name(r.config.variant).c_str(),
                 static_cast<unsigned long long>(r.config.seed), fmt(r.T_bar).c_str(),
                 fmt(r.J_bar).c_str());
    for (int s : r.trigger_counts) std::fprintf(f.get(), ",%d", s);
    std::fprintf(f.get(), "\n");
  }
  return results;
}

ValidationReport validate_experiment(const ExperimentConfig& cfg, int lipschitz_samples,
                                     int rpi_samples) {
  ValidationReport rep;
  rep.delta_bound = validate_delta(cfg.nu, cfg.xi, cfg.model.disturbance_radius(), cfg.N,
                                   cfg.max_interval, cfg.terminal);
  rep.delta_ok = cfg.delta + 0.01 >= rep.delta_bound;

  rep.lipschitz = estimate_lipschitz(cfg.model, LipschitzBox{}, lipschitz_samples, cfg.seed);
  rep.lipschitz_ok = rep.lipschitz.nu > 0.0 && rep.lipschitz.nu <= cfg.nu &&
                     rep.lipschitz.xi > 0.0 && rep.lipschitz.xi <= cfg.xi;

  // Robust invariance of the terminal set under the saturated terminal law:
  // interior states by rejection sampling, boundary states by angle, each
  // stepped under all four disturbance vertices.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cfg.terminal.P);
  const double box = cfg.terminal.rho / std::sqrt(eig.eigenvalues().minCoeff());
  const Eigen::Matrix2d half_inv = eig.operatorInverseSqrt();
  SplitMix64 rng(mix_key(cfg.seed, 0x7e57, 0x1b1));
  const Disturbance vertices[] = {{cfg.model.w_bound, cfg.model.v_bound},
                                  {cfg.model.w_bound, -cfg.model.v_bound},
                                  {-cfg.model.w_bound, cfg.model.v_bound},
                                  {-cfg.model.w_bound, -cfg.model.v_bound}};
  rep.rpi_violations = 0;
  int accepted = 0;
  while (accepted < rpi_samples) {
    State x;
    if (accepted % 2 == 0) {  // boundary sample
      double theta = rng.uniform(0.0, 2.0 * M_PI);
      x = cfg.terminal.rho * (half_inv * State(std::cos(theta), std::sin(theta)));
    } else {  // interior sample
      x = State(rng.uniform(-box, box), rng.uniform(-box, box));
      if (!in_terminal_set(cfg.terminal, x)) continue;
    }
    ++accepted;
    double u = terminal_law(cfg.kappa, cfg.model, x);
    for (const Disturbance& d : vertices)
      if (!in_terminal_set(cfg.terminal, step(cfg.model, x, u, d))) ++rep.rpi_violations;
  }
  rep.rpi_ok = rep.rpi_violations == 0;
  return rep;
}

}  // namespace stmpc
