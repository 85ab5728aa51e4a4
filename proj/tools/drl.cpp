#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "drl/harness.hpp"

using namespace drl;

namespace {

void log_line(const std::string& s) { std::cerr << s << std::endl; }

int cmd_train(const std::string& path, bool resume, bool quiet) {
  const RunConfig cfg = load_run_config(path);
  TrainOptions opt;
  opt.resume = resume;
  if (!quiet) opt.log = log_line;
  const EvalReport r = run_training(cfg, opt);
  std::cout << "run " << r.run_name << "\n";
  std::cout << "dir " << run_directory(cfg).string() << "\n";
  std::cout << "episodes " << r.rewards.size();
  if (r.frames > 0) std::cout << " frames " << r.frames;
  std::cout << "\n";
  if (!r.running_avg.empty()) std::cout << "running_avg " << detail::fmt(r.running_avg.back()) << "\n";
  if (!r.final_eval.empty())
    std::cout << "final_eval mean " << detail::fmt(r.final_eval.mean()) << " std " << detail::fmt(r.final_eval.stddev())
              << " (random " << detail::fmt(r.baseline.mean()) << ")\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, std::string env, std::size_t episodes, std::uint64_t seed, bool json) {
  const Checkpoint ck = load_checkpoint(ckpt);
  if (env.empty()) env = ck.env;
  const EvalStats s = evaluate_agent(ck.agent, env, episodes, seed);
  if (json) {
    std::cout << Json{{"env", env}, {"episodes", episodes}, {"seed", seed}, {"mean", s.mean}, {"std", s.stddev},
                      {"rewards", s.rewards}}
                     .dump(1)
              << "\n";
  } else {
    std::cout << "env " << env << " episodes " << episodes << " seed " << seed << "\n";
    std::cout << "mean " << detail::fmt(s.mean) << " std " << detail::fmt(s.stddev) << "\n";
  }
  return 0;
}

int cmd_tune(const std::string& path, std::size_t workers, bool quiet) {
  GridSpec g = load_grid_spec(path);
  if (workers > 0) g.workers = workers;
  const GridResult r = grid_search(g, quiet ? std::function<void(const std::string&)>{} : log_line);
  for (const auto& s : r.sweeps) {
    std::cout << s.parameter << ": ";
    if (s.winner) std::cout << s.candidates[*s.winner].label << " (" << s.rule << (s.tie ? ", tie" : "") << ")\n";
    else std::cout << "no winner (all runs failed)\n";
    for (std::size_t c = 0; c < s.candidates.size(); ++c)
      std::cout << "  " << s.candidates[c].label << " wins " << s.wins[c] << " mean_rank " << detail::fmt(s.mean_rank[c])
                << "\n";
  }
  std::cout << "results are advisory; the defaults are not changed\n";
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, std::string out) {
  const EvalReport ra = load_report(a), rb = load_report(b);
  const Comparison c = compare_reports(ra, rb);
  if (out.empty()) out = (output_root("runs") / ("compare_" + ra.run_name + "_vs_" + rb.run_name)).string();
  emit_comparison(c, out);
  for (std::size_t i = 0; i < c.ranking.size(); ++i)
    std::cout << i + 1 << ". " << c.ranking[i].label << " mean " << detail::fmt(c.ranking[i].mean) << " std "
              << detail::fmt(c.ranking[i].stddev) << "\n";
  std::cout << "wilcoxon p " << detail::fmt(c.test.p_value) << " h " << c.test.h << " (" << c.test.method
            << ", n_effective " << c.test.n_effective << ")\n";
  std::cout << "dir " << out << "\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  const EvalReport r = load_report(dir);
  emit_report(r, dir);
  if (r.final_eval.summary) std::cout << stats_block(r);
  else std::cout << "run = " << r.run_name << "\nepisodes = " << r.rewards.size() << "\n(no final evaluation)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep and tabular reinforcement learning agents"};
  app.require_subcommand(1);

  std::string path, ckpt, env, report_a, report_b, out, run_dir;
  bool resume = false, quiet = false, json = false;
  std::size_t episodes = 100, workers = 0;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "train an agent from a run config");
  train->add_option("config", path, "run config file")->required()->check(CLI::ExistingFile);
  train->add_flag("--resume", resume, "continue from the run's checkpoint");
  train->add_flag("-q,--quiet", quiet, "no progress lines");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with frozen parameters");
  eval->add_option("checkpoint", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--env", env, "environment (default: the checkpoint's)");
  eval->add_option("--episodes", episodes, "evaluation episodes")->capture_default_str();
  eval->add_option("--seed", seed, "evaluation seed")->capture_default_str();
  eval->add_flag("--json", json, "print JSON");

  auto* tune = app.add_subcommand("tune", "grid search over hyperparameters");
  tune->add_option("gridspec", path, "grid spec file")->required()->check(CLI::ExistingFile);
  tune->add_option("--workers", workers, "concurrent runs (default: from the spec)");
  tune->add_flag("-q,--quiet", quiet, "no progress lines");

  auto* compare = app.add_subcommand("compare", "paired Wilcoxon test on two runs' final evaluations");
  compare->add_option("report_a", report_a, "run directory or report.json")->required()->check(CLI::ExistingPath);
  compare->add_option("report_b", report_b, "run directory or report.json")->required()->check(CLI::ExistingPath);
  compare->add_option("--out", out, "output directory");

  auto* report = app.add_subcommand("report", "regenerate CSVs, plots and stats for a run");
  report->add_option("run_dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  auto* defaults = app.add_subcommand("defaults", "print the default run config for an environment");
  defaults->add_option("--env", env, "environment")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(path, resume, quiet);
    if (*eval) return cmd_eval(ckpt, env, episodes, seed, json);
    if (*tune) return cmd_tune(path, workers, quiet);
    if (*compare) return cmd_compare(report_a, report_b, out);
    if (*report) return cmd_report(run_dir);
    if (*defaults) {
      std::cout << to_json(RunConfig::defaults_for(env)).dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
