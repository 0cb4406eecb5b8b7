// layercode: layered-resolution coded matrix multiplication experiments.
//
//   layercode simulate --config configs/cluster5.conf --jobs 1000 --out jobs.csv
//   layercode sweep-omega --k 100 --c 500 --jobs 5000 --grid 1.0,1.02,1.04,1.06
//   layercode sweep-deadline --deadline-grid 5,10,15,20
//   layercode bounds
//   layercode verify-codec --trials 200

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layercode/cli/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> seed, jobs, omega, m, k, c, lambda, deadline, out, format, intra_layer, grid,
      deadline_grid, hist, threads, trials, cs2;
  bool with_payload = false;
  std::vector<std::string> sets;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key = value configuration file");
  cmd->add_option("--seed", f.seed, "root RNG seed (falls back to $LAYERCODE_SEED)");
  cmd->add_option("--jobs", f.jobs, "number of job arrivals to simulate");
  cmd->add_option("--omega", f.omega, "redundancy ratio");
  cmd->add_option("--m", f.m, "chunks per element (1 disables layering)");
  cmd->add_option("--k", f.k, "tasks needed per mini-job");
  cmd->add_option("--c", f.c, "unlayered per-task complexity");
  cmd->add_option("--lambda", f.lambda, "Poisson arrival rate");
  cmd->add_option("--deadline", f.deadline, "computation-time deadline (inf disables)");
  cmd->add_option("--out", f.out, "output path (default stdout)");
  cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--intra-layer", f.intra_layer, "concurrent or serial")
      ->check(CLI::IsMember({"concurrent", "serial"}));
  cmd->add_flag("--with-payload", f.with_payload, "run the real codec on small matrices end to end");
  cmd->add_option("--grid", f.grid, "sweep-omega grid, comma separated");
  cmd->add_option("--deadline-grid", f.deadline_grid, "sweep-deadline grid, comma separated");
  cmd->add_option("--hist", f.hist, "simulate: write per-layer delay histogram CSV here");
  cmd->add_option("--threads", f.threads, "parallel sweep points");
  cmd->add_option("--trials", f.trials, "verify-codec random instances");
  cmd->add_option("--cs2", f.cs2, "bounds: service-time squared coefficient of variation");
  cmd->add_option("--set", f.sets, "extra key=value override, repeatable");
}

layercode::cli::ExperimentSpec build_spec(layercode::cli::Mode mode, const Flags& f) {
  using layercode::cli::ConfigError;
  layercode::cli::ExperimentSpec spec;
  spec.mode = mode;
  std::map<std::string, std::string> file;
  if (!f.config.empty()) file = layercode::cli::load_config_file(f.config);
  for (const auto& [key, value] : file) spec.set(key, value);
  if (!f.seed && !file.contains("seed")) {
    if (const char* env = std::getenv("LAYERCODE_SEED"); env && *env) spec.set("seed", env);
  }
  const std::pair<const char*, const std::optional<std::string>*> overrides[] = {
      {"seed", &f.seed},         {"jobs", &f.jobs},       {"omega", &f.omega},
      {"m", &f.m},               {"k", &f.k},             {"c", &f.c},
      {"lambda", &f.lambda},     {"deadline", &f.deadline}, {"out", &f.out},
      {"format", &f.format},     {"intra_layer", &f.intra_layer}, {"omega_grid", &f.grid},
      {"deadline_grid", &f.deadline_grid}, {"hist", &f.hist}, {"threads", &f.threads},
      {"trials", &f.trials},     {"cs2", &f.cs2}};
  for (const auto& [key, value] : overrides) {
    if (*value) spec.set(key, **value);
  }
  if (f.with_payload) spec.set("with_payload", "true");
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    spec.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace layercode::cli;
  CLI::App app{"Layered-resolution coded matrix multiplication: simulation and analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "per-job delay records for one configuration"},
      {"sweep-omega", "mean per-layer delay and lower bounds across redundancy ratios"},
      {"sweep-deadline", "per-layer success rates across deadlines"},
      {"bounds", "closed-form per-layer service and delay bounds"},
      {"verify-codec", "randomised correctness checks of the polynomial codec"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_flags(sub, flags);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    for (auto* sub : subs) {
      if (sub->parsed()) return run_experiment(build_spec(parse_mode(sub->get_name()), flags));
    }
  } catch (const ConfigError& e) {
    std::cerr << "layercode: config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "layercode: error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitConfigError;
}
