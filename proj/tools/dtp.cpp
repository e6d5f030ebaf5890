// dtp: run the planted-distractor experiments.
//
//   dtp demo    one pruned episode, per-step graymaps and a JSONL log
//   dtp sweep   success vs tolerance, tau_hat flagged
//   dtp ablate  dtp / random / no-gaussian / off on the same seeds
//   dtp analyze unimportant attention of success vs failure episodes
//
// Flags override the config file.

#include "dtp/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>

int main(int argc, char **argv) {
  CLI::App app{"Distracting-token pruning experiments on the planted grid world"};
  std::string verb;
  std::string config_path, tau_grid, out_dir, strategy;
  std::optional<int> episodes, bins;
  std::optional<std::uint64_t> seed;

  app.add_option("verb", verb, "demo | sweep | ablate | analyze")
      ->required()
      ->check(CLI::IsMember({"demo", "sweep", "ablate", "analyze"}));
  app.add_option("--config", config_path, "config file ([section] key=value)");
  app.add_option("--tau-grid", tau_grid, "tolerance grid a:b:step or comma list");
  app.add_option("--episodes", episodes, "episodes per suite");
  app.add_option("--seed", seed, "seed of the first episode");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--strategy", strategy,
                 "off | dtp | random_all | random_unimportant | no_gaussian");
  app.add_option("--bins", bins, "normalized-time bins for analyze");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? dtp::exit_ok : dtp::exit_usage;
  }

  try {
    dtp::RunConfig cfg = config_path.empty() ? dtp::RunConfig{} : dtp::load_config(config_path);
    if (!tau_grid.empty())
      cfg.tau_grid = tau_grid;
    if (episodes)
      cfg.episodes = *episodes;
    if (seed)
      cfg.seed = *seed;
    if (!out_dir.empty())
      cfg.out_dir = out_dir;
    if (!strategy.empty()) {
      dtp::parse_strategy(strategy);
      cfg.strategy = strategy;
    }
    if (bins)
      cfg.bins = *bins;
    cfg.validate();

    if (verb == "demo") {
      const auto r = dtp::cmd_demo(cfg);
      std::printf("demo: %s after %d steps, %zu tokens pruned, %zu files in %s\n",
                  r.log.success ? "success" : "failure", r.log.steps_taken,
                  r.log.total_pruned(), r.files.size(),
                  (cfg.out_dir / "demo").string().c_str());
    } else if (verb == "sweep") {
      const auto r = dtp::cmd_sweep(cfg);
      std::printf("sweep: baseline %.3f, tau_hat %s with success %.3f\n",
                  r.baseline.success_rate, dtp::format_number(r.tau_hat).c_str(),
                  r.rows[r.tau_hat_index].summary.success_rate);
    } else if (verb == "ablate") {
      for (const auto &row : dtp::cmd_ablate(cfg))
        std::printf("%-20s success %.3f grasp %.3f\n",
                    std::string(dtp::strategy_name(row.strategy)).c_str(),
                    row.summary.success_rate, row.summary.grasp_rate);
    } else {
      const auto r = dtp::cmd_analyze(cfg);
      if (!r.stats) {
        std::fprintf(stderr,
                     "analyze: insufficient data (%d success, %d failure episodes; need 2 each)\n",
                     r.success_episodes, r.failure_episodes);
        return dtp::exit_insufficient_data;
      }
      std::printf("analyze: U %s, p %s, median failure %.4f vs success %.4f\n",
                  dtp::format_number(r.stats->test.u).c_str(),
                  dtp::format_number(r.stats->test.p_value).c_str(),
                  r.stats->failure_median, r.stats->success_median);
    }
  } catch (const dtp::UsageError &e) {
    std::fprintf(stderr, "dtp %s: %s\n", verb.c_str(), e.what());
    return dtp::exit_usage;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "dtp %s: %s\n", verb.c_str(), e.what());
    return dtp::exit_error;
  }
  return dtp::exit_ok;
}
