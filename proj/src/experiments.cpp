#include "dtp/experiments.hpp"

#include "dtp/export.hpp"

#include <cstdio>
#include <fstream>

namespace dtp {

namespace fs = std::filesystem;

namespace {

Strategy strategy_or(const RunConfig &c, Strategy fallback) {
  return c.strategy.empty() ? fallback : parse_strategy(c.strategy);
}

TaskSpec episode_spec(const RunConfig &c) {
  TaskSpec spec = c.task;
  spec.seed = c.seed;
  return spec;
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out)
    throw IoError("cannot write " + path.string());
}

std::string step_name(int step, const char *what) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "step_%03d_%s.pgm", step, what);
  return buf;
}

std::string na_or(const std::optional<double> &v) {
  return v ? format_number(*v) : "NA";
}

std::vector<std::string> summary_cells(const SuiteSummary &s) {
  return {std::to_string(s.episodes), format_number(s.success_rate),
          format_number(s.grasp_rate), format_number(s.mean_p_alpha),
          format_number(s.mean_prune_count), format_number(s.clamped_fraction)};
}

} // namespace

DemoReport cmd_demo(const RunConfig &config) {
  const Model model = config.build_model();
  const fs::path dir = config.out_dir / "demo";
  ensure_directory(dir);

  DemoReport report;
  const int h = config.task.grid_h, w = config.task.grid_w;
  CsvWriter scales(dir / "scales.csv", {"step", "image", "min", "max"});
  CsvWriter grids(dir / "grids.csv", {"step", "image", "row", "col", "value"});
  CsvWriter masks(dir / "masks.csv", {"step", "index"});
  auto image = [&](int step, const char *what, const Vector &values, bool grid_csv) {
    const fs::path p = dir / step_name(step, what);
    const GrayScale s = write_pgm(p, values, h, w);
    scales.row({std::to_string(step), what, format_number(s.min), format_number(s.max)});
    report.files.push_back(p);
    if (grid_csv)
      for (int v = 0; v < values.size(); ++v)
        grids.row({std::to_string(step), what, std::to_string(v / w),
                   std::to_string(v % w), format_number(values[v])});
  };

  EpisodeOptions opt;
  opt.on_step = [&](const StepTrace &t) {
    if (config.export_heatmaps) {
      image(t.step, "relevance", t.relevance->r, true);
      Vector region = Vector::Zero(t.region->num_visual());
      for (int v : t.region->important)
        region[v] = 1.0;
      image(t.step, "region", region, false);
      image(t.step, "attention", t.pattern->a, true);
    }
    if (config.export_masks) {
      Vector mask = Vector::Zero(t.region->num_visual());
      for (int v : t.mask->indices()) {
        mask[v] = 1.0;
        masks.row({std::to_string(t.step), std::to_string(v)});
      }
      image(t.step, "mask", mask, false);
    }
  };
  report.log = run_episode(model, episode_spec(config), config.dtp,
                           strategy_or(config, Strategy::dtp), opt);
  for (CsvWriter *csv : {&scales, &grids, &masks})
    csv->close();
  for (const char *name : {"scales.csv", "grids.csv", "masks.csv"})
    report.files.push_back(dir / name);

  if (config.export_logs) {
    write_episode_jsonl(dir / "episode.jsonl", report.log);
    report.files.push_back(dir / "episode.jsonl");
  }
  write_text(dir / "config.ini", serialize_config(config));
  return report;
}

TauSweepResult cmd_sweep(const RunConfig &config) {
  const std::vector<double> grid = parse_tau_grid(config.tau_grid);
  const Model model = config.build_model();
  ensure_directory(config.out_dir);

  TauSweepResult result = tau_sweep(model, config.task, config.episodes,
                                    config.seed, grid, config.dtp);

  CsvWriter csv(config.out_dir / "sweep.csv",
                {"row", "tau", "episodes", "success_rate", "grasp_rate",
                 "mean_p_alpha", "mean_prune_count", "clamped_fraction", "tau_hat"});
  auto cells = [](std::string row, std::string tau, const SuiteSummary &s, bool hat) {
    std::vector<std::string> c{std::move(row), std::move(tau)};
    for (auto &x : summary_cells(s))
      c.push_back(std::move(x));
    c.push_back(hat ? "1" : "0");
    return c;
  };
  csv.row(cells("baseline", "NA", result.baseline, false));
  for (std::size_t i = 0; i < result.rows.size(); ++i)
    csv.row(cells("dtp", format_number(result.rows[i].tau), result.rows[i].summary,
                  i == result.tau_hat_index));
  csv.close();
  write_text(config.out_dir / "sweep.ini", serialize_config(config));
  return result;
}

std::vector<AblationRow> cmd_ablate(const RunConfig &config) {
  const Model model = config.build_model();
  ensure_directory(config.out_dir);

  const Strategy order[] = {Strategy::dtp, Strategy::random_all,
                            Strategy::random_unimportant, Strategy::no_gaussian,
                            Strategy::off};
  std::vector<AblationRow> rows;
  std::vector<EpisodeLog> all;
  for (Strategy s : order) {
    auto logs = run_suite(model, config.task, config.episodes, config.seed,
                          config.dtp, s);
    rows.push_back({s, summarize(logs), std::nullopt});
    all.insert(all.end(), std::make_move_iterator(logs.begin()),
               std::make_move_iterator(logs.end()));
  }
  write_episode_summary_csv(config.out_dir / "ablation_episodes.csv", all);
  const double off_sr = rows.back().summary.success_rate;
  for (auto &r : rows)
    if (off_sr > 0.0)
      r.relative_success = r.summary.success_rate / off_sr;

  CsvWriter csv(config.out_dir / "ablation.csv",
                {"strategy", "tolerance", "episodes", "success_rate", "grasp_rate",
                 "mean_p_alpha", "mean_prune_count", "clamped_fraction",
                 "relative_success"});
  for (const auto &r : rows) {
    std::vector<std::string> c{std::string(strategy_name(r.strategy)),
                               format_number(config.dtp.tolerance)};
    for (auto &x : summary_cells(r.summary))
      c.push_back(std::move(x));
    c.push_back(na_or(r.relative_success));
    csv.row(c);
  }
  csv.close();
  write_text(config.out_dir / "ablate.ini", serialize_config(config));
  return rows;
}

AnalysisReport cmd_analyze(const RunConfig &config) {
  const Model model = config.build_model();
  const auto logs = run_suite(model, config.task, config.episodes, config.seed,
                              config.dtp, strategy_or(config, Strategy::off));
  AnalysisReport report;
  for (const auto &l : logs)
    ++(l.success ? report.success_episodes : report.failure_episodes);
  report.stats = compare_groups(logs, config.bins);
  if (!report.stats)
    return report;

  ensure_directory(config.out_dir);
  const GroupStats &g = *report.stats;
  CsvWriter csv(config.out_dir / "analysis.csv", {"statistic", "value"});
  csv.row({"success_episodes", std::to_string(report.success_episodes)});
  csv.row({"failure_episodes", std::to_string(report.failure_episodes)});
  csv.row({"success_steps", std::to_string(g.success_values.size())});
  csv.row({"failure_steps", std::to_string(g.failure_values.size())});
  csv.row({"u_failure", format_number(g.test.u)});
  csv.row({"p_value", format_number(g.test.p_value)});
  csv.row({"exact", g.test.exact ? "1" : "0"});
  csv.row({"success_median", format_number(g.success_median)});
  csv.row({"failure_median", format_number(g.failure_median)});
  csv.close();

  std::string table;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-8s %-8s %-22s %-9s %-22s %s\n", "bin",
                "t_start", "t_end", "success_mean", "success_n", "failure_mean",
                "failure_n");
  table += line;
  for (int b = 0; b < config.bins; ++b) {
    const double t0 = static_cast<double>(b) / config.bins;
    const double t1 = static_cast<double>(b + 1) / config.bins;
    std::snprintf(line, sizeof line, "%-4d %-8s %-8s %-22s %-9d %-22s %d\n", b,
                  format_number(t0).c_str(), format_number(t1).c_str(),
                  na_or(g.success_curve.mean[b]).c_str(), g.success_curve.count[b],
                  na_or(g.failure_curve.mean[b]).c_str(), g.failure_curve.count[b]);
    table += line;
  }
  write_text(config.out_dir / "curves.txt", table);
  write_episode_summary_csv(config.out_dir / "analysis_episodes.csv", logs);
  write_text(config.out_dir / "analyze.ini", serialize_config(config));
  return report;
}

} // namespace dtp
