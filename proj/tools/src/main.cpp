#include "incstab/cli/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  using namespace incstab::cli;

  CLI::App app{"Incremental stability toolkit"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  double tolerance = 0.0;

  const std::vector<std::pair<Action, const char *>> commands = {
      {Action::simulate, "Integrate each initial condition and write the trajectories"},
      {Action::certify, "Small-gain certification of the coupled model"},
      {Action::estimate, "Fit exponential envelopes to pairwise distances"},
      {Action::invariant_set, "Search for a forward invariant sublevel set"},
      {Action::fc_table, "Tabulate the weight f_c and its derivative"},
      {Action::figures, "Write the three distance-plot CSVs"},
  };
  std::vector<std::pair<Action, CLI::App *>> subs;
  std::vector<CLI::Option *> seed_opts;
  std::vector<CLI::Option *> tol_opts;
  std::vector<CLI::Option *> out_opts;
  std::vector<CLI::Option *> config_opts;
  for (const auto &[action, help] : commands) {
    CLI::App *sub = app.add_subcommand(to_string(action), help);
    config_opts.push_back(sub->add_option("--config", config, "Scenario file")->check(CLI::ExistingFile));
    out_opts.push_back(sub->add_option("--out", out_dir, "Output directory"));
    seed_opts.push_back(sub->add_option("--seed", seed, "Sampler seed"));
    tol_opts.push_back(sub->add_option("--tolerance", tolerance, "Slack of sampled inequality checks"));
    subs.emplace_back(action, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config_error;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i].second->parsed()) continue;
    RunOptions opt;
    if (out_opts[i]->count()) opt.out_dir = out_dir;
    if (seed_opts[i]->count()) opt.seed = seed;
    if (tol_opts[i]->count()) opt.tolerance = tolerance;
    std::optional<std::filesystem::path> cfg;
    if (config_opts[i]->count()) cfg = config;
    return run_command(subs[i].first, cfg, opt, std::cout, std::cerr);
  }
  return exit_internal_error;
}
