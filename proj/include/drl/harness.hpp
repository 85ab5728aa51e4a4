#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "drl/checkpoint.hpp"
#include "drl/stats.hpp"
#include "drl/svg.hpp"

namespace drl {

namespace fs = std::filesystem;

inline constexpr std::size_t kRunningWindow = 100;

/// Mean of the last min(k, window) values at every k.
inline std::vector<double> running_average(std::span<const double> x, std::size_t window = kRunningWindow) {
  if (window == 0) throw ContractError("running average window must be positive");
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const std::size_t first = k + 1 > window ? k + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t i = first; i <= k; ++i) sum += x[i];
    out[k] = sum / static_cast<double>(k + 1 - first);
  }
  return out;
}

// --- evaluation ------------------------------------------------------------

struct EvalStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> rewards;
};

inline double eval_episode(const AnyAgent& agent, Environment& env, std::uint64_t episode_seed, Rng& rng) {
  if (const auto* deep = std::get_if<DeepAgent>(&agent)) return run_eval_episode(*deep, env, episode_seed, rng);
  const auto& t = std::get<TabularAgent>(agent);
  std::size_t s = detail::state_index(env.reset(episode_seed), t.q.states());
  double total = 0.0;
  for (;;) {
    const StepResult r = env.step(epsilon_greedy(t.q.row(s), env.legal_actions(), t.eval_epsilon, rng));
    total += r.reward;
    if (r.done) return total;
    s = detail::state_index(r.observation, t.q.states());
  }
}

inline EvalStats summarize(std::vector<double> rewards) {
  EvalStats out;
  if (!rewards.empty()) out.mean = stats::mean(rewards);
  if (rewards.size() >= 2) out.stddev = stats::stddev(rewards);
  out.rewards = std::move(rewards);
  return out;
}

/// Frozen-parameter episodes with eval-mode action selection. Episode i
/// resets with seed i; actions draw from a stream derived from seed.
inline EvalStats evaluate_agent(const AnyAgent& agent, const std::string& env_name, std::size_t episodes,
                                std::uint64_t seed) {
  const auto env = make_env(env_name, seed);
  check_compatible(agent, env->spec());
  Rng rng = Rng(seed).split(1);
  std::vector<double> rewards;
  rewards.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) rewards.push_back(eval_episode(agent, *env, i, rng));
  return summarize(std::move(rewards));
}

inline EvalStats evaluate_during_training(const AnyAgent& agent, const std::string& env_name, std::size_t episodes = 100,
                                          std::uint64_t seed = 0) {
  return evaluate_agent(agent, env_name, episodes, seed);
}

/// Uniform random actions, same episode seeding as evaluate_agent.
inline EvalStats evaluate_random(const std::string& env_name, std::size_t episodes, std::uint64_t seed) {
  const auto env = make_env(env_name, seed);
  Rng rng = Rng(seed).split(2);
  std::vector<double> rewards;
  for (std::size_t i = 0; i < episodes; ++i) {
    env->reset(i);
    double total = 0.0;
    for (bool done = false; !done;) {
      const StepResult r = env->step(rng.uniform_index(env->spec().action_count));
      total += r.reward;
      done = r.done;
    }
    rewards.push_back(total);
  }
  return summarize(std::move(rewards));
}

struct FinalEval {
  std::vector<double> rewards;
  std::optional<stats::UnivariateSummary> summary;
  std::vector<stats::HistogramBin> histogram;
  std::vector<stats::QQPoint> qq;

  bool empty() const { return rewards.empty(); }
  double mean() const { return rewards.empty() ? 0.0 : stats::mean(rewards); }
  double stddev() const { return rewards.size() < 2 ? 0.0 : stats::stddev(rewards); }
};

/// Summary, histogram and Q-Q points over the final-evaluation rewards.
inline FinalEval summarize_final(std::vector<double> rewards, std::size_t requested) {
  if (rewards.size() != requested)
    throw Error("final evaluation produced " + std::to_string(rewards.size()) + " rewards, " +
                std::to_string(requested) + " requested");
  FinalEval out;
  out.rewards = std::move(rewards);
  if (out.rewards.size() >= 2) {
    out.summary = stats::univariate(out.rewards);
    const auto bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(std::sqrt(out.rewards.size()))), 1, 40);
    out.histogram = stats::histogram(out.rewards, bins);
    if (out.summary->stddev > 0.0) out.qq = stats::qq_points(out.rewards);
  }
  return out;
}

inline FinalEval evaluate_final(const AnyAgent& agent, const std::string& env_name, std::size_t episodes = 1000,
                                std::uint64_t seed = 0) {
  return summarize_final(evaluate_agent(agent, env_name, episodes, seed).rewards, episodes);
}

inline EvalStats evaluate_checkpoint(const fs::path& checkpoint, const std::string& env_name, std::size_t episodes,
                                     std::uint64_t seed) {
  return evaluate_agent(load_checkpoint(checkpoint).agent, env_name, episodes, seed);
}

// --- report ------------------------------------------------------------------

struct EvalPoint {
  std::size_t episode = 0;  // training episodes completed
  std::uint64_t frames = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct RankedEntry {
  std::string label;
  double mean = 0.0;
  double stddev = 0.0;
};

struct EvalReport {
  std::string run_name;
  Json config;
  std::vector<double> rewards;
  std::vector<double> running_avg;
  std::vector<double> max_deltas;  // tabular agents
  std::vector<double> losses;      // deep agents, mean TD loss per episode
  std::vector<EvalPoint> evals;
  FinalEval final_eval;
  FinalEval baseline;  // uniform random policy, same seeds
  std::vector<RankedEntry> ranking;
  std::optional<std::size_t> rank;  // 1-based position of this agent in ranking
  std::uint64_t frames = 0;
  std::optional<std::size_t> resumed_from;
  bool replay_restored = true;
  bool stopped_early = false;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline Json to_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json final_to_json(const FinalEval& f) {
  Json j{{"rewards", f.rewards}};
  if (f.summary) {
    j["summary"] = {{"n", f.summary->n},
                    {"mean", f.summary->mean},
                    {"median", f.summary->median},
                    {"std", f.summary->stddev},
                    {"skewness", to_json(f.summary->skewness)},
                    {"kurtosis", to_json(f.summary->kurtosis)}};
  }
  return j;
}

inline FinalEval final_from_json(const Json& j) {
  auto rewards = require<std::vector<double>>(j, "rewards");
  const std::size_t n = rewards.size();
  return summarize_final(std::move(rewards), n);
}

}  // namespace detail

inline Json to_json(const EvalReport& r) {
  Json evals = Json::array();
  for (const auto& e : r.evals)
    evals.push_back({{"episode", e.episode}, {"frames", e.frames}, {"mean", e.mean}, {"std", e.stddev}});
  Json ranking = Json::array();
  for (const auto& e : r.ranking) ranking.push_back({{"label", e.label}, {"mean", e.mean}, {"std", e.stddev}});
  return Json{{"run_name", r.run_name},
              {"config", r.config},
              {"frames", r.frames},
              {"running_window", kRunningWindow},
              {"rewards", r.rewards},
              {"running_avg", r.running_avg},
              {"max_deltas", r.max_deltas},
              {"losses", r.losses},
              {"evals", evals},
              {"final_eval", detail::final_to_json(r.final_eval)},
              {"random_baseline", detail::final_to_json(r.baseline)},
              {"ranking", ranking},
              {"rank", r.rank ? Json(*r.rank) : Json(nullptr)},
              {"resumed_from", r.resumed_from ? Json(*r.resumed_from) : Json(nullptr)},
              {"replay_restored", r.replay_restored},
              {"stopped_early", r.stopped_early}};
}

inline EvalReport report_from_json(const Json& j) {
  EvalReport r;
  r.run_name = detail::require<std::string>(j, "run_name");
  r.config = detail::require<Json>(j, "config");
  r.frames = detail::require<std::uint64_t>(j, "frames");
  r.rewards = detail::require<std::vector<double>>(j, "rewards");
  r.running_avg = running_average(r.rewards);
  r.max_deltas = detail::require<std::vector<double>>(j, "max_deltas");
  r.losses = detail::require<std::vector<double>>(j, "losses");
  for (const auto& e : detail::require<Json>(j, "evals"))
    r.evals.push_back({detail::require<std::size_t>(e, "episode"), detail::require<std::uint64_t>(e, "frames"),
                       detail::require<double>(e, "mean"), detail::require<double>(e, "std")});
  r.final_eval = detail::final_from_json(detail::require<Json>(j, "final_eval"));
  r.baseline = detail::final_from_json(detail::require<Json>(j, "random_baseline"));
  for (const auto& e : detail::require<Json>(j, "ranking"))
    r.ranking.push_back({detail::require<std::string>(e, "label"), detail::require<double>(e, "mean"),
                         detail::require<double>(e, "std")});
  if (!j.at("rank").is_null()) r.rank = j.at("rank").get<std::size_t>();
  if (!j.at("resumed_from").is_null()) r.resumed_from = j.at("resumed_from").get<std::size_t>();
  r.replay_restored = detail::require<bool>(j, "replay_restored");
  r.stopped_early = detail::require<bool>(j, "stopped_early");
  return r;
}

inline EvalReport load_report(const fs::path& path) {
  return report_from_json(read_json_file(fs::is_directory(path) ? path / "report.json" : path));
}

/// Sorts entries by mean (descending, stable) and returns the 1-based
/// position of `label`.
inline std::optional<std::size_t> rank_entries(std::vector<RankedEntry>& entries, const std::string& label) {
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.mean > b.mean; });
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].label == label) return i + 1;
  return std::nullopt;
}

inline std::string rewards_csv(const EvalReport& r) {
  std::string s = "episode,reward,running_avg\n";
  for (std::size_t i = 0; i < r.rewards.size(); ++i)
    s += std::to_string(i + 1) + "," + detail::fmt(r.rewards[i]) + "," + detail::fmt(r.running_avg[i]) + "\n";
  return s;
}

inline std::string stats_block(const EvalReport& r) {
  const auto& f = r.final_eval;
  std::string s;
  auto kv = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  kv("run", r.run_name);
  kv("episodes", std::to_string(f.rewards.size()));
  kv("mean", detail::fmt(f.summary->mean));
  kv("median", detail::fmt(f.summary->median));
  kv("std", detail::fmt(f.summary->stddev));
  kv("skewness", f.summary->skewness ? detail::fmt(*f.summary->skewness) : "-");
  kv("kurtosis", f.summary->kurtosis ? detail::fmt(*f.summary->kurtosis) : "-");
  kv("min", detail::fmt(*std::min_element(f.rewards.begin(), f.rewards.end())));
  kv("max", detail::fmt(*std::max_element(f.rewards.begin(), f.rewards.end())));
  if (!r.baseline.empty()) {
    kv("random_mean", detail::fmt(r.baseline.mean()));
    kv("random_std", detail::fmt(r.baseline.stddev()));
  }
  if (r.rank) kv("rank", std::to_string(*r.rank) + " of " + std::to_string(r.ranking.size()));
  if (r.resumed_from) kv("resumed_from_episode", std::to_string(*r.resumed_from));
  kv("replay_restored", r.replay_restored ? "true" : "false");
  if (r.stopped_early) kv("stopped_early", "true");
  return s;
}

/// Writes the CSVs, stats block, plots and report.json into dir. Output is
/// a pure function of the report.
inline void emit_report(const EvalReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  write_file_atomic(dir / "rewards.csv", rewards_csv(r));
  {
    std::string s = "episode,running_avg\n";
    for (std::size_t i = 0; i < r.running_avg.size(); ++i)
      s += std::to_string(i + 1) + "," + detail::fmt(r.running_avg[i]) + "\n";
    write_file_atomic(dir / "running_average.csv", s);
  }
  {
    std::string s = "episode,frames,mean,std\n";
    for (const auto& e : r.evals)
      s += std::to_string(e.episode) + "," + std::to_string(e.frames) + "," + detail::fmt(e.mean) + "," +
           detail::fmt(e.stddev) + "\n";
    write_file_atomic(dir / "evals.csv", s);
  }
  {
    std::string s = "episode,reward\n";
    for (std::size_t i = 0; i < r.final_eval.rewards.size(); ++i)
      s += std::to_string(i + 1) + "," + detail::fmt(r.final_eval.rewards[i]) + "\n";
    write_file_atomic(dir / "final_eval.csv", s);
  }
  for (const char* stale : {"stats.txt", "histogram.csv", "qq.csv", "final_ranked.svg"}) fs::remove(dir / stale);
  if (r.final_eval.summary) {
    write_file_atomic(dir / "stats.txt", stats_block(r));
    std::string h = "lo,hi,count\n";
    for (const auto& b : r.final_eval.histogram)
      h += detail::fmt(b.lo) + "," + detail::fmt(b.hi) + "," + std::to_string(b.count) + "\n";
    write_file_atomic(dir / "histogram.csv", h);
    std::string q = "theoretical,sample\n";
    for (const auto& p : r.final_eval.qq) q += detail::fmt(p.theoretical) + "," + detail::fmt(p.sample) + "\n";
    write_file_atomic(dir / "qq.csv", q);
  }

  svg::Series curve{"running average (" + std::to_string(kRunningWindow) + ")", {}, r.running_avg, {}};
  for (std::size_t i = 0; i < r.running_avg.size(); ++i) curve.x.push_back(double(i + 1));
  write_file_atomic(dir / "running_average.svg",
                    svg::line_chart(r.run_name + ": training reward", "episode", "reward", {curve}));
  svg::Series ev{"frozen eval mean +/- std", {}, {}, {}};
  for (const auto& e : r.evals) {
    ev.x.push_back(double(e.episode));
    ev.y.push_back(e.mean);
    ev.band.push_back(e.stddev);
  }
  write_file_atomic(dir / "eval_curve.svg", svg::line_chart(r.run_name + ": evaluation during training",
                                                            "training episodes", "reward", {ev}));
  if (!r.ranking.empty()) {
    std::vector<svg::Bar> bars;
    for (const auto& e : r.ranking) bars.push_back({e.label, e.mean, e.stddev});
    write_file_atomic(dir / "final_ranked.svg", svg::bar_chart(r.run_name + ": post-training evaluation", "mean reward", bars));
  }
  write_file_atomic(dir / "report.json", to_json(r).dump(1) + "\n");
}

// --- training ----------------------------------------------------------------

struct TrainOptions {
  bool resume = false;
  std::function<void(const std::string&)> log;  // progress lines; may be empty
  std::optional<fs::path> run_dir;              // used as is, bypassing the output root
  // Checked after each frozen evaluation; true ends training there.
  std::function<bool(const EvalPoint&)> stop_when;
};

namespace detail {

// Independent seeds for the different consumers of a run.
inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t purpose) { return Rng(seed).split(purpose).next_u64(); }
inline constexpr std::uint64_t kInitStream = 1, kActStream = 2, kEvalStream = 3, kFinalStream = 4;

inline AnyAgent fresh_agent(const RunConfig& cfg, const EnvSpec& spec) {
  if (is_tabular(cfg.agent)) {
    TabularAgent t;
    t.config = cfg.tabular;
    t.q = QTable(spec.state_count, spec.action_count, cfg.tabular.count_increment);
    t.eval_epsilon = cfg.deep.eval_epsilon;
    return t;
  }
  Rng init = Rng(cfg.seed).split(kInitStream);
  return DeepAgent::create(cfg.deep, td_mode(cfg.agent), spec, init);
}

inline std::uint64_t episodes_done(const AnyAgent& a) {
  if (const auto* d = std::get_if<DeepAgent>(&a)) return d->episode;
  return std::get<TabularAgent>(a).episode;
}

inline std::uint64_t frames_done(const AnyAgent& a) {
  if (const auto* d = std::get_if<DeepAgent>(&a)) return d->frames_seen;
  return 0;
}

inline std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

/// Trains per the run config, writing rewards.csv/evals.csv row by row and a
/// checkpoint at every evaluation, then runs the final evaluation and emits
/// the full report. A resumed run reloads the last checkpoint and reward
/// log; its replay memory starts empty.
inline EvalReport run_training(const RunConfig& cfg, const TrainOptions& opt = {}) {
  cfg.validate();
  const auto env = make_env(cfg.env, cfg.seed);
  const fs::path dir = opt.run_dir ? *opt.run_dir : run_directory(cfg);
  fs::create_directories(dir);
  const Json cfg_json = to_json(cfg);

  EvalReport report;
  report.run_name = cfg.run_name();
  report.config = cfg_json;

  Checkpoint ck{cfg.agent, cfg.env, cfg.seed, detail::fresh_agent(cfg, env->spec())};
  const fs::path ck_path = dir / "checkpoint.ckpt";
  if (opt.resume && fs::exists(ck_path)) {
    Checkpoint loaded = load_checkpoint(ck_path);
    if (loaded.kind != cfg.agent || loaded.env != cfg.env) throw ConfigError("checkpoint in " + dir.string() + " belongs to another run");
    check_compatible(loaded.agent, env->spec());
    ck.agent = std::move(loaded.agent);
    const std::size_t done = detail::episodes_done(ck.agent);
    auto rows = detail::read_csv_rows(dir / "rewards.csv");
    if (rows.size() < done) throw ConfigError("reward log shorter than the checkpoint's episode count");
    for (std::size_t i = 0; i < done; ++i) report.rewards.push_back(std::stod(rows[i].at(1)));
    for (const auto& row : detail::read_csv_rows(dir / "evals.csv"))
      if (std::stoull(row.at(0)) <= done)
        report.evals.push_back({std::stoull(row.at(0)), std::stoull(row.at(1)), std::stod(row.at(2)), std::stod(row.at(3))});
    report.resumed_from = done;
    report.replay_restored = false;
    if (auto* d = std::get_if<DeepAgent>(&ck.agent); d && d->pixel() == false && opt.log)
      opt.log("resumed at episode " + std::to_string(done) + "; replay memory starts empty");
  } else if (opt.resume && opt.log) {
    opt.log("no checkpoint in " + dir.string() + "; starting fresh");
  }
  write_file_atomic(dir / "config.json", cfg_json.dump(1) + "\n");

  report.running_avg = running_average(report.rewards);
  {
    std::string head = "episode,reward,running_avg\n";
    for (std::size_t i = 0; i < report.rewards.size(); ++i)
      head += std::to_string(i + 1) + "," + detail::fmt(report.rewards[i]) + "," + detail::fmt(report.running_avg[i]) + "\n";
    write_file_atomic(dir / "rewards.csv", head);
    std::string evals = "episode,frames,mean,std\n";
    for (const auto& e : report.evals)
      evals += std::to_string(e.episode) + "," + std::to_string(e.frames) + "," + detail::fmt(e.mean) + "," +
               detail::fmt(e.stddev) + "\n";
    write_file_atomic(dir / "evals.csv", evals);
  }
  std::ofstream rewards_out(dir / "rewards.csv", std::ios::app);
  std::ofstream evals_out(dir / "evals.csv", std::ios::app);

  const std::size_t total = cfg.episodes();
  for (std::size_t ep = report.rewards.size(); ep < total; ++ep) {
    if (cfg.frame_budget && detail::frames_done(ck.agent) >= *cfg.frame_budget) break;
    Rng rng = Rng(cfg.seed).split(detail::kActStream).split(ep);
    double reward = 0.0;
    if (auto* deep = std::get_if<DeepAgent>(&ck.agent)) {
      const auto out = run_training_episode(*deep, *env, ep, rng);
      reward = out.reward;
      report.losses.push_back(out.mean_loss);
    } else {
      auto& t = std::get<TabularAgent>(ck.agent);
      const auto out = cfg.agent == AgentKind::TabularQ ? q_learning_episode(*env, t.q, t.config, ep, rng)
                                                         : sarsa_episode(*env, t.q, t.config, ep, rng);
      ++t.episode;
      reward = out.reward;
      report.max_deltas.push_back(out.max_delta);
    }
    report.rewards.push_back(reward);
    report.running_avg = running_average(report.rewards);
    rewards_out << ep + 1 << "," << detail::fmt(reward) << "," << detail::fmt(report.running_avg.back()) << "\n";
    rewards_out.flush();

    if (cfg.eval.interval > 0 && (ep + 1) % cfg.eval.interval == 0) {
      const auto ev = evaluate_during_training(ck.agent, cfg.env, cfg.eval.episodes,
                                               detail::derived_seed(cfg.seed, detail::kEvalStream));
      const EvalPoint p{ep + 1, detail::frames_done(ck.agent), ev.mean, ev.stddev};
      report.evals.push_back(p);
      evals_out << p.episode << "," << p.frames << "," << detail::fmt(p.mean) << "," << detail::fmt(p.stddev) << "\n";
      evals_out.flush();
      save_checkpoint(ck_path, ck);
      if (opt.log)
        opt.log("episode " + std::to_string(ep + 1) + " frames " + std::to_string(p.frames) + " running avg " +
                detail::fmt(report.running_avg.back()) + " eval " + detail::fmt(p.mean) + " +/- " + detail::fmt(p.stddev));
      if (opt.stop_when && opt.stop_when(p)) {
        report.stopped_early = true;
        break;
      }
    }
  }
  rewards_out.close();
  evals_out.close();
  report.frames = detail::frames_done(ck.agent);
  save_checkpoint(ck_path, ck);

  if (cfg.eval.final_episodes > 0) {
    const auto seed = detail::derived_seed(cfg.seed, detail::kFinalStream);
    report.final_eval = evaluate_final(ck.agent, cfg.env, cfg.eval.final_episodes, seed);
    report.baseline = summarize_final(evaluate_random(cfg.env, cfg.eval.final_episodes, seed).rewards, cfg.eval.final_episodes);
    report.ranking = {{std::string(to_string(cfg.agent)), report.final_eval.mean(), report.final_eval.stddev()},
                      {"random", report.baseline.mean(), report.baseline.stddev()}};
    report.rank = rank_entries(report.ranking, std::string(to_string(cfg.agent)));
  }
  emit_report(report, dir);
  return report;
}

// --- comparison ----------------------------------------------------------------

struct Comparison {
  std::string label_a, label_b;
  stats::WilcoxonResult test;
  std::vector<RankedEntry> ranking;
};

/// Paired Wilcoxon signed-rank test on two final-evaluation reward lists.
inline Comparison compare_reports(const EvalReport& a, const EvalReport& b) {
  if (a.final_eval.empty() || b.final_eval.empty()) throw ContractError("both reports need a final evaluation");
  if (a.final_eval.rewards.size() != b.final_eval.rewards.size())
    throw ContractError("paired comparison needs equally long final evaluations");
  Comparison c;
  c.label_a = a.run_name;
  c.label_b = b.run_name == a.run_name ? b.run_name + " (b)" : b.run_name;
  c.test = stats::wilcoxon_signed_rank(a.final_eval.rewards, b.final_eval.rewards);
  c.ranking = {{c.label_a, a.final_eval.mean(), a.final_eval.stddev()}, {c.label_b, b.final_eval.mean(), b.final_eval.stddev()}};
  rank_entries(c.ranking, c.label_a);
  return c;
}

inline Json to_json(const Comparison& c) {
  Json ranking = Json::array();
  for (const auto& e : c.ranking) ranking.push_back({{"label", e.label}, {"mean", e.mean}, {"std", e.stddev}});
  return Json{{"a", c.label_a},
              {"b", c.label_b},
              {"p_value", c.test.p_value},
              {"h", c.test.h},
              {"method", c.test.method},
              {"statistic", c.test.statistic},
              {"w_plus", c.test.w_plus},
              {"w_minus", c.test.w_minus},
              {"n_effective", c.test.n_effective},
              {"z", c.test.z},
              {"ranks", c.test.ranks},
              {"ranking", ranking}};
}

inline void emit_comparison(const Comparison& c, const fs::path& dir) {
  fs::create_directories(dir);
  write_file_atomic(dir / "comparison.json", to_json(c).dump(1) + "\n");
  std::vector<svg::Bar> bars;
  for (const auto& e : c.ranking) bars.push_back({e.label, e.mean, e.stddev});
  write_file_atomic(dir / "ranked.svg", svg::bar_chart("post-training evaluation", "mean reward", bars));
}

// --- grid search ---------------------------------------------------------------

struct GridSpec {
  std::string name = "grid";
  Json base;  // run config document
  std::vector<std::pair<std::string, std::vector<Json>>> parameters;
  bool one_at_a_time = true;
  std::size_t cases = 1;    // seeds per candidate
  std::size_t workers = 1;  // concurrent child runs
};

inline GridSpec grid_spec_from_json(const Json& j) {
  detail::check_keys(j, {"name", "base", "parameters", "one_at_a_time", "cases", "workers"}, "grid spec");
  GridSpec g;
  detail::read(j, "name", g.name);
  g.base = j.contains("base") ? j["base"] : Json::object();
  detail::read(j, "one_at_a_time", g.one_at_a_time);
  detail::read(j, "cases", g.cases);
  detail::read(j, "workers", g.workers);
  const Json& params = detail::require<Json>(j, "parameters");
  if (!params.is_object() || params.empty()) throw ConfigError("grid spec needs at least one parameter");
  for (const auto& [k, v] : params.items()) {
    if (!v.is_array() || v.empty()) throw ConfigError("parameter '" + k + "' needs a non-empty candidate list");
    g.parameters.emplace_back(k, std::vector<Json>(v.begin(), v.end()));
  }
  if (g.cases == 0) throw ConfigError("grid spec needs at least one case");
  if (g.workers == 0) g.workers = 1;
  return g;
}

inline GridSpec load_grid_spec(const fs::path& path) { return grid_spec_from_json(read_json_file(path)); }

namespace detail {

/// Sets a dotted path in a run config document. Bare names that are not
/// top-level fields go to agent_config or tabular_config.
inline void set_parameter(Json& cfg, const std::string& name, const Json& value) {
  static const std::set<std::string> top = {"env", "agent", "backend", "policy", "seed", "frame_budget", "output_dir"};
  static const std::set<std::string> tab = {"alpha0", "t_epsilon", "t_epsilon_increment", "increment_every",
                                            "count_increment", "fixed_epsilon"};
  std::string path = name;
  if (name.find('.') == std::string::npos && !top.contains(name)) {
    const bool tabular = cfg.contains("agent") && cfg["agent"].get<std::string>().rfind("tabular", 0) == 0;
    path = (tab.contains(name) || (tabular && (name == "gamma" || name == "episodes")) ? "tabular_config." : "agent_config.") + name;
  }
  Json* node = &cfg;
  std::stringstream ss(path);
  std::vector<std::string> parts;
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) (*node)[parts[i]] = Json::object();
    node = &(*node)[parts[i]];
  }
  (*node)[parts.back()] = value;
}

inline std::string value_label(const Json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '+') c = '_';
  return s;
}

}  // namespace detail

struct GridRun {
  std::size_t candidate = 0;
  std::size_t case_index = 0;
  std::uint64_t seed = 0;
  std::optional<double> score;  // empty when the child failed
  std::string status = "ok";
  std::vector<double> curve;  // running average
};

struct GridCandidate {
  std::string parameter;  // "a=x, b=y" for full grids
  std::vector<std::pair<std::string, Json>> values;
  std::string label;
};

struct GridSweep {
  std::string parameter;
  std::vector<GridCandidate> candidates;
  std::vector<GridRun> runs;  // candidate-major, then case
  std::vector<std::size_t> wins;
  std::vector<double> mean_rank;
  std::optional<std::size_t> winner;
  std::string rule;  // "majority", "secondary" or "none"
  bool tie = false;
};

struct GridResult {
  std::vector<GridSweep> sweeps;
};

/// Score used for ranking: final-eval mean when present, else the last
/// frozen-eval mean, else the last running average.
inline double curve_score(const EvalReport& r) {
  if (!r.final_eval.empty()) return r.final_eval.mean();
  if (!r.evals.empty()) return r.evals.back().mean;
  return r.running_avg.empty() ? 0.0 : r.running_avg.back();
}

/// Winner rule: a candidate best in more than half of the cases wins.
/// Otherwise the two candidates with the most wins are compared by mean
/// rank over all cases. Remaining ties go to the first listed.
inline void rank_sweep(GridSweep& s, std::size_t cases) {
  const std::size_t n = s.candidates.size();
  s.wins.assign(n, 0);
  s.mean_rank.assign(n, 0.0);
  auto score = [&](std::size_t c, std::size_t k) { return s.runs[c * cases + k].score; };
  std::vector<bool> alive(n, false);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t k = 0; k < cases; ++k) alive[c] = alive[c] || score(c, k).has_value();
  if (std::none_of(alive.begin(), alive.end(), [](bool b) { return b; })) {
    s.rule = "none";
    return;
  }
  for (std::size_t k = 0; k < cases; ++k) {
    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < n; ++c) {
      const auto v = score(c, k);
      if (!v) continue;
      if (!best || *v > *score(*best, k)) best = c;
      else if (*v == *score(*best, k)) s.tie = true;
    }
    if (best) ++s.wins[*best];
    for (std::size_t c = 0; c < n; ++c) {
      const auto v = score(c, k);
      double rank = 1.0;  // failed runs rank last
      if (!v) rank = double(n);
      else
        for (std::size_t o = 0; o < n; ++o)
          if (o != c && score(o, k) && *score(o, k) > *v) rank += 1.0;
      s.mean_rank[c] += rank / double(cases);
    }
  }
  for (std::size_t c = 0; c < n; ++c)
    if (2 * s.wins[c] > cases) {
      s.winner = c;
      s.rule = "majority";
      return;
    }
  std::vector<std::size_t> order(n);
  for (std::size_t c = 0; c < n; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (s.wins[a] != s.wins[b]) return s.wins[a] > s.wins[b];
    return s.mean_rank[a] < s.mean_rank[b];
  });
  s.rule = "secondary";
  if (n == 1) {
    s.winner = order[0];
    return;
  }
  const std::size_t a = std::min(order[0], order[1]), b = std::max(order[0], order[1]);
  if (s.mean_rank[a] == s.mean_rank[b]) {
    s.tie = true;
    s.winner = a;
  } else {
    s.winner = s.mean_rank[a] < s.mean_rank[b] ? a : b;
  }
}

inline GridResult grid_search(const GridSpec& g, const std::function<void(const std::string&)>& log = {}) {
  const fs::path root = output_root(g.base.contains("output_dir") ? g.base["output_dir"].get<std::string>() : "runs") /
                        ("tune_" + g.name);
  const RunConfig base = run_config_from_json(g.base);
  base.validate();

  GridResult result;
  if (g.one_at_a_time) {
    for (const auto& [name, values] : g.parameters) {
      GridSweep s;
      s.parameter = name;
      for (const auto& v : values) s.candidates.push_back({name, {{name, v}}, name + "=" + detail::value_label(v)});
      result.sweeps.push_back(std::move(s));
    }
  } else {
    GridSweep s;
    std::vector<std::vector<std::pair<std::string, Json>>> combos{{}};
    for (const auto& [name, values] : g.parameters) {
      std::vector<std::vector<std::pair<std::string, Json>>> next;
      for (const auto& c : combos)
        for (const auto& v : values) {
          auto e = c;
          e.emplace_back(name, v);
          next.push_back(std::move(e));
        }
      combos = std::move(next);
      s.parameter += (s.parameter.empty() ? "" : "*") + name;
    }
    for (auto& c : combos) {
      std::string label;
      for (const auto& [k, v] : c) label += (label.empty() ? "" : ",") + k + "=" + detail::value_label(v);
      s.candidates.push_back({s.parameter, std::move(c), label});
    }
    result.sweeps.push_back(std::move(s));
  }

  struct Job {
    std::size_t sweep, candidate, case_index;
    RunConfig cfg;
    fs::path dir;
  };
  std::vector<Job> jobs;
  for (std::size_t si = 0; si < result.sweeps.size(); ++si) {
    auto& s = result.sweeps[si];
    s.runs.resize(s.candidates.size() * g.cases);
    for (std::size_t c = 0; c < s.candidates.size(); ++c)
      for (std::size_t k = 0; k < g.cases; ++k) {
        GridRun& run = s.runs[c * g.cases + k];
        run.candidate = c;
        run.case_index = k;
        run.seed = detail::derived_seed(base.seed, 1000 + k);  // shared across candidates
        Json cj = g.base;
        for (const auto& [name, v] : s.candidates[c].values) detail::set_parameter(cj, name, v);
        cj["seed"] = run.seed;
        try {
          RunConfig rc = run_config_from_json(cj);
          rc.validate();
          const fs::path dir = root / detail::value_label(s.parameter) /
                               (std::to_string(c) + "_" + detail::value_label(s.candidates[c].label)) /
                               ("case" + std::to_string(k));
          jobs.push_back({si, c, k, std::move(rc), dir});
        } catch (const std::exception& e) {
          run.status = std::string("failed: ") + e.what();
        }
      }
  }

  // Each child owns its RNG streams and output directory; results land in
  // preassigned slots so the outcome does not depend on scheduling.
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const std::function<void()> worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      GridRun& run = result.sweeps[job.sweep].runs[job.candidate * g.cases + job.case_index];
      try {
        TrainOptions opt;
        opt.run_dir = job.dir;
        const EvalReport rep = run_training(job.cfg, opt);
        run.score = curve_score(rep);
        run.curve = rep.running_avg;
      } catch (const std::exception& e) {
        run.status = std::string("failed: ") + e.what();
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        log(result.sweeps[job.sweep].candidates[job.candidate].label + " case " + std::to_string(job.case_index) + ": " +
            (run.score ? detail::fmt(*run.score) : run.status));
      }
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(g.workers, std::max<std::size_t>(jobs.size(), 1));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& s : result.sweeps) rank_sweep(s, g.cases);

  fs::create_directories(root);
  std::string csv = "parameter,candidate,case,seed,score,status\n";
  Json winners = Json::array();
  for (const auto& s : result.sweeps) {
    for (const auto& r : s.runs)
      csv += s.parameter + "," + s.candidates[r.candidate].label + "," + std::to_string(r.case_index) + "," +
             std::to_string(r.seed) + "," + (r.score ? detail::fmt(*r.score) : "") + "," + r.status + "\n";
    Json w{{"parameter", s.parameter},
           {"winner", s.winner ? Json(s.candidates[*s.winner].label) : Json(nullptr)},
           {"rule", s.rule},
           {"tie", s.tie},
           {"advisory", true}};
    Json table = Json::array();
    for (std::size_t c = 0; c < s.candidates.size(); ++c)
      table.push_back({{"candidate", s.candidates[c].label}, {"wins", s.wins[c]}, {"mean_rank", s.mean_rank[c]}});
    w["candidates"] = table;
    winners.push_back(w);

    std::vector<svg::Series> curves;
    for (std::size_t c = 0; c < s.candidates.size(); ++c) {
      const auto& r = s.runs[c * g.cases];
      svg::Series ser{s.candidates[c].label, {}, r.curve, {}};
      for (std::size_t i = 0; i < r.curve.size(); ++i) ser.x.push_back(double(i + 1));
      curves.push_back(std::move(ser));
    }
    write_file_atomic(root / (detail::value_label(s.parameter) + "_curves.svg"),
                      svg::line_chart(s.parameter + " sweep (case 0)", "episode", "running average reward", curves));
  }
  write_file_atomic(root / "summary.csv", csv);
  write_file_atomic(root / "winners.json", winners.dump(1) + "\n");
  return result;
}

}  // namespace drl
