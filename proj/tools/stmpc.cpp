#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <string>

#include "stmpc/dp_oracle.hpp"
#include "stmpc/harness.hpp"

using namespace stmpc;

namespace {

ExperimentConfig load_or_default(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

void print_run(const RunResult& r, const std::string& out_dir) {
  std::printf("variant %s  seed %llu  steps %ld\n", variant_name(r.config.variant).c_str(),
              static_cast<unsigned long long>(r.config.seed), r.config.steps);
  std::printf("  T_bar %.4f s  J_bar %.4f\n", r.T_bar, r.J_bar);
  std::printf("  triggers");
  for (int s : r.trigger_counts) std::printf(" %d", s);
  int fallbacks = 0;
  for (int f : r.fallback_counts) fallbacks += f;
  std::printf("  fallbacks %d\n", fallbacks);
  std::printf("  wrote %s/{trajectories,delays,metrics}.csv and summary.json\n", out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-triggered distributed min-max MPC benchmark"};
  app.require_subcommand(1);

  std::string sim_config;
  std::string sim_variant;
  std::string sim_out = "out";
  long sim_steps = -1;
  long long sim_seed = -1;
  CLI::App* sim = app.add_subcommand("simulate", "Run one controller variant and write its logs");
  sim->add_option("--config", sim_config, "JSON experiment configuration");
  sim->add_option("--variant", sim_variant, "P-DMPC, ST-DMPC, ST-DMPC-D, P-DeMPC or ST-DeMPC");
  sim->add_option("--seed", sim_seed, "override the configured seed");
  sim->add_option("--steps", sim_steps, "override the configured tick count");
  sim->add_option("--out", sim_out, "output directory (default: out)");

  std::string tab_config;
  std::string tab_out = "out";
  long long tab_seed = -1;
  CLI::App* tab = app.add_subcommand("table1", "Run all five variants at one seed");
  tab->add_option("--config", tab_config, "JSON experiment configuration");
  tab->add_option("--seed", tab_seed, "override the configured seed");
  tab->add_option("--out", tab_out, "output directory (default: out)");

  std::string val_config;
  CLI::App* val = app.add_subcommand(
      "validate", "Check the consistency margin, incremental gains, and terminal set");
  val->add_option("--config", val_config, "JSON experiment configuration");

  CLI::App* orc =
      app.add_subcommand("oracle", "Compare the scenario search against exact value iteration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      ExperimentConfig cfg = load_or_default(sim_config);
      if (!sim_variant.empty()) cfg.variant = parse_variant(sim_variant);
      if (sim_seed >= 0) cfg.seed = static_cast<std::uint64_t>(sim_seed);
      if (sim_steps >= 0) cfg.steps = sim_steps;
      RunResult r = run_experiment(cfg);
      write_outputs(r, sim_out);
      print_run(r, sim_out);
    } else if (tab->parsed()) {
      ExperimentConfig base = load_or_default(tab_config);
      std::uint64_t seed = tab_seed >= 0 ? static_cast<std::uint64_t>(tab_seed) : base.seed;
      std::vector<RunResult> rows = run_table(base, seed, tab_out);
      std::printf("%-10s %8s %10s %10s\n", "variant", "T_bar", "J_bar", "fallbacks");
      for (const RunResult& r : rows) {
        int fallbacks = 0;
        for (int f : r.fallback_counts) fallbacks += f;
        std::printf("%-10s %8.4f %10.4f %10d\n", variant_name(r.config.variant).c_str(), r.T_bar,
                    r.J_bar, fallbacks);
      }
      std::printf("wrote %s/table.csv and one directory per variant\n", tab_out.c_str());
    } else if (val->parsed()) {
      ExperimentConfig cfg = load_or_default(val_config);
      ValidationReport rep = validate_experiment(cfg);
      std::printf("consistency margin: bound %.2f (%.6f), configured %.2f  %s\n", rep.delta_bound,
                  rep.delta_bound, cfg.delta, rep.delta_ok ? "PASS" : "FAIL");
      std::printf("incremental gains: nu_hat %.4f (bound %.2f), xi_hat %.4f (bound %.2f)  %s\n",
                  rep.lipschitz.nu, cfg.nu, rep.lipschitz.xi, cfg.xi,
                  rep.lipschitz_ok ? "PASS" : "FAIL");
      std::printf("terminal set invariance: %d violations  %s\n", rep.rpi_violations,
                  rep.rpi_ok ? "PASS" : "FAIL");
      return rep.ok() ? 0 : 1;
    } else if (orc->parsed()) {
      double exact = dp_oracle(benchmark_instance(), 1.0);
      double search = benchmark_search_value();
      double gap = std::abs(search - exact) / std::abs(exact);
      std::printf("value iteration %.6f  pattern search %.6f  gap %.2f%%  %s\n", exact, search,
                  100.0 * gap, gap <= 0.05 ? "PASS" : "FAIL");
      return gap <= 0.05 ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
