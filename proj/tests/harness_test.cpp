#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "drl/harness.hpp"

using namespace drl;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("drl_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small CartPole DQN that runs in well under a second.
RunConfig small_cartpole(const fs::path& out, std::size_t episodes = 12) {
  RunConfig c = RunConfig::defaults_for("cartpole");
  c.agent = AgentKind::Dqn;
  c.seed = 3;
  c.deep.hidden = {16};
  c.deep.episodes = episodes;
  c.deep.replay_capacity = 500;
  c.deep.replay_start = 40;
  c.deep.minibatch = 8;
  c.deep.copy_period = 25;
  c.deep.alpha = 1e-3;
  c.eval = {4, 3, 20};
  c.output_dir = out.string();
  return c;
}

RunConfig maze_tabular(const fs::path& out, std::size_t episodes) {
  RunConfig c = RunConfig::defaults_for("maze_runner");
  c.tabular.episodes = episodes;
  c.eval.final_episodes = 10;
  c.output_dir = out.string();
  return c;
}

struct EnvGuard {
  explicit EnvGuard(const std::string& value) { setenv(kOutputDirVariable, value.c_str(), 1); }
  ~EnvGuard() { unsetenv(kOutputDirVariable); }
};

}  // namespace

TEST(RunningAverage, MatchesSlidingWindow) {
  Rng rng(5);
  std::vector<double> x(350);
  for (auto& v : x) v = rng.uniform(-50.0, 500.0);
  const auto got = running_average(x);
  std::deque<double> win;
  for (std::size_t k = 0; k < x.size(); ++k) {
    win.push_back(x[k]);
    if (win.size() > 100) win.pop_front();
    double s = 0;
    for (double v : win) s += v;
    EXPECT_NEAR(got[k], s / double(win.size()), 1e-9) << k;
  }
  EXPECT_THROW(running_average(x, 0), ContractError);
  EXPECT_TRUE(running_average(std::vector<double>{}).empty());
}

TEST(Checkpoint, HashMatchesPublishedFnvVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Checkpoint, DeepRoundTripIsBitExact) {
  for (Backend b : {Backend::BP, Backend::DFA}) {
    AgentConfig cfg = AgentConfig::classic_control();
    cfg.backend = b;
    cfg.hidden = {8, 8};
    cfg.replay_start = 20;
    cfg.minibatch = 4;
    auto env = make_env("cartpole", 1);
    Rng init(1);
    DeepAgent agent = DeepAgent::create(cfg, TdMode::QLearning, env->spec(), init);
    Rng rng(2);
    for (int e = 0; e < 5; ++e) run_training_episode(agent, *env, e, rng);
    ASSERT_GT(agent.global_step, 0u);

    const fs::path dir = scratch(std::string("ckpt_") + std::string(to_string(b)));
    fs::create_directories(dir);
    save_checkpoint(dir / "a.ckpt", Checkpoint{AgentKind::Dqn, "cartpole", 1, agent});
    const Checkpoint back = load_checkpoint(dir / "a.ckpt");
    const auto& got = std::get<DeepAgent>(back.agent);

    Matrix probe(4, 7);
    Rng pr(9);
    for (auto& v : probe.values()) v = pr.uniform(-1.0, 1.0);
    const std::pair<const Network*, const Network*> pairs[] = {{&agent.online(), &got.online()},
                                                               {&agent.target(), &got.target()}};
    for (const auto& [mine, theirs] : pairs) {
      const Matrix a = predict(*mine, probe), c = predict(*theirs, probe);
      ASSERT_EQ(a.values().size(), c.values().size());
      EXPECT_EQ(0, std::memcmp(a.data(), c.data(), a.values().size() * sizeof(double)));
    }
    EXPECT_EQ(got.global_step, agent.global_step);
    EXPECT_EQ(got.episode, agent.episode);
    EXPECT_EQ(got.frames_seen, agent.frames_seen);
    if (b == Backend::DFA) {
      const auto& fa = std::get<DenseLayer>(agent.online().layers()[0]).feedback;
      const auto& fb = std::get<DenseLayer>(got.online().layers()[0]).feedback;
      ASSERT_TRUE(fa && fb);
      EXPECT_TRUE(std::ranges::equal(fa->values(), fb->values()));
    }
    // saving the loaded agent reproduces the file
    EXPECT_EQ(serialize_checkpoint(back), slurp(dir / "a.ckpt"));
  }
}

TEST(Checkpoint, TabularRoundTrip) {
  const fs::path out = scratch("tab_ckpt");
  const RunConfig cfg = maze_tabular(out, 30);
  run_training(cfg);
  const Checkpoint ck = load_checkpoint(run_directory(cfg) / "checkpoint.ckpt");
  const auto& t = std::get<TabularAgent>(ck.agent);
  EXPECT_EQ(t.episode, 30u);
  EXPECT_EQ(serialize_checkpoint(ck), slurp(run_directory(cfg) / "checkpoint.ckpt"));
}

TEST(Checkpoint, CorruptionIsDetected) {
  const fs::path out = scratch("corrupt");
  const RunConfig cfg = maze_tabular(out, 5);
  run_training(cfg);
  const std::string good = slurp(run_directory(cfg) / "checkpoint.ckpt");
  EXPECT_NO_THROW(parse_checkpoint(good));
  EXPECT_THROW(parse_checkpoint(good.substr(0, good.size() - 10)), ChecksumError);
  std::string flipped = good;
  flipped[flipped.size() / 2] ^= 0x01;
  EXPECT_THROW(parse_checkpoint(flipped), ChecksumError);
  std::string version = good;
  version.replace(0, 9, "DRLCKPT 9");
  EXPECT_THROW(parse_checkpoint(version), ChecksumError);
  EXPECT_THROW(parse_checkpoint("hello"), ChecksumError);
  EXPECT_THROW(parse_checkpoint(""), ChecksumError);
}

TEST(Checkpoint, WrongEnvironmentShapeRejected) {
  const fs::path out = scratch("arch");
  RunConfig cfg = small_cartpole(out, 2);
  cfg.eval = {0, 1, 0};
  run_training(cfg);
  const fs::path ck = run_directory(cfg) / "checkpoint.ckpt";
  EXPECT_NO_THROW(evaluate_checkpoint(ck, "cartpole", 2, 0));
  EXPECT_THROW(evaluate_checkpoint(ck, "acrobot", 2, 0), ArchitectureError);      // 6 inputs
  EXPECT_THROW(evaluate_checkpoint(ck, "mountaincar", 2, 0), ArchitectureError);  // 2 inputs
}

TEST(Evaluate, FrozenAndRepeatable) {
  const fs::path out = scratch("frozen");
  RunConfig cfg = small_cartpole(out, 6);
  cfg.eval = {0, 1, 0};
  run_training(cfg);
  const fs::path ck = run_directory(cfg) / "checkpoint.ckpt";
  const std::string before = slurp(ck);
  const Checkpoint loaded = load_checkpoint(ck);
  const auto a = evaluate_agent(loaded.agent, "cartpole", 20, 11);
  const auto b = evaluate_agent(loaded.agent, "cartpole", 20, 11);
  EXPECT_EQ(a.rewards, b.rewards);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stddev, b.stddev);
  EXPECT_EQ(serialize_checkpoint(loaded), before);
  EXPECT_EQ(slurp(ck), before);
}

TEST(Evaluate, RandomCartPoleBaseline) {
  const auto r = evaluate_random("cartpole", 2000, 1);
  // A uniform random policy balances for about 22 steps.
  EXPECT_GT(r.mean, 20.0);
  EXPECT_LT(r.mean, 25.0);
  EXPECT_EQ(r.rewards.size(), 2000u);
}

TEST(Evaluate, UntrainedAgentBehavesLikeRandom) {
  // Before replay start the training policy is uniform, so episode returns
  // of a fresh agent sit on the random baseline.
  AgentConfig cfg = AgentConfig::classic_control();
  cfg.replay_capacity = 1000000;
  cfg.replay_start = 1000000;
  cfg.minibatch = 32;
  auto env = make_env("cartpole", 4);
  Rng init(4), rng(5);
  DeepAgent agent = DeepAgent::create(cfg, TdMode::QLearning, env->spec(), init);
  std::vector<double> rewards;
  for (int e = 0; e < 1000; ++e) rewards.push_back(run_training_episode(agent, *env, e, rng).reward);
  const auto base = evaluate_random("cartpole", 1000, 6);
  const double se = std::sqrt(stats::stddev(rewards) * stats::stddev(rewards) / 1000 +
                              base.stddev * base.stddev / 1000);
  EXPECT_LT(std::abs(stats::mean(rewards) - base.mean), 4.0 * se);
}

TEST(Evaluate, FinalEvalLengthChecked) {
  EXPECT_THROW(summarize_final({1.0, 2.0}, 3), Error);
  const auto f = summarize_final({1.0, 2.0, 4.0}, 3);
  ASSERT_TRUE(f.summary);
  EXPECT_DOUBLE_EQ(f.summary->mean, 7.0 / 3.0);
  EXPECT_FALSE(f.histogram.empty());
  EXPECT_EQ(f.qq.size(), 3u);
}

TEST(Harness, DeterministicPolicyGivesDashStats) {
  const fs::path out = scratch("dash");
  // a converged table followed greedily takes the same path every episode
  RunConfig cfg = maze_tabular(out, 3000);
  cfg.deep.eval_epsilon = 0.0;
  const EvalReport r = run_training(cfg);
  ASSERT_EQ(r.final_eval.rewards.size(), 10u);
  ASSERT_TRUE(r.final_eval.summary);
  EXPECT_EQ(r.final_eval.summary->stddev, 0.0);
  EXPECT_FALSE(r.final_eval.summary->skewness);
  EXPECT_FALSE(r.final_eval.summary->kurtosis);
  EXPECT_TRUE(r.final_eval.qq.empty());
  const std::string s = slurp(run_directory(cfg) / "stats.txt");
  EXPECT_NE(s.find("skewness = -"), std::string::npos);
  EXPECT_NE(s.find("kurtosis = -"), std::string::npos);
}

TEST(Harness, ZeroEpisodeRunWritesHeaders) {
  const fs::path out = scratch("zero");
  RunConfig cfg = small_cartpole(out, 0);
  cfg.eval.final_episodes = 0;
  const EvalReport r = run_training(cfg);
  EXPECT_TRUE(r.rewards.empty());
  EXPECT_TRUE(r.final_eval.empty());
  const fs::path dir = run_directory(cfg);
  EXPECT_EQ(slurp(dir / "rewards.csv"), "episode,reward,running_avg\n");
  EXPECT_EQ(slurp(dir / "evals.csv"), "episode,frames,mean,std\n");
  EXPECT_EQ(slurp(dir / "final_eval.csv"), "episode,reward\n");
  EXPECT_FALSE(fs::exists(dir / "stats.txt"));
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "running_average.svg"));
}

TEST(Harness, IdenticalConfigsGiveIdenticalFiles) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const EvalReport ra = run_training(small_cartpole(a));
  const EvalReport rb = run_training(small_cartpole(b));
  EXPECT_EQ(ra.rewards, rb.rewards);
  const fs::path da = run_directory(small_cartpole(a)), db = run_directory(small_cartpole(b));
  for (const char* f : {"rewards.csv", "evals.csv", "final_eval.csv", "running_average.csv", "stats.txt",
                        "histogram.csv", "qq.csv", "running_average.svg", "eval_curve.svg", "final_ranked.svg",
                        "checkpoint.ckpt"}) {
    ASSERT_TRUE(fs::exists(da / f)) << f;
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
  }
  // report.json differs only in output_dir
  Json ja = read_json_file(da / "report.json"), jb = read_json_file(db / "report.json");
  ja["config"].erase("output_dir");
  jb["config"].erase("output_dir");
  EXPECT_EQ(ja, jb);

  RunConfig other = small_cartpole(scratch("det_c"));
  other.seed = 4;
  EXPECT_NE(run_training(other).rewards, ra.rewards);
}

TEST(Harness, RewardCsvMatchesReport) {
  const fs::path out = scratch("csv");
  const RunConfig cfg = small_cartpole(out);
  const EvalReport r = run_training(cfg);
  ASSERT_EQ(r.rewards.size(), 12u);
  ASSERT_EQ(r.evals.size(), 3u);
  EXPECT_EQ(r.evals[0].episode, 4u);
  EXPECT_EQ(slurp(run_directory(cfg) / "rewards.csv"), rewards_csv(r));
  EXPECT_EQ(r.losses.size(), 12u);
  EXPECT_EQ(r.ranking.size(), 2u);
  ASSERT_TRUE(r.rank);

  const EvalReport back = load_report(run_directory(cfg));
  EXPECT_EQ(to_json(back), to_json(r));
  // re-emitting reproduces the directory
  const fs::path again = scratch("csv_again");
  emit_report(back, again);
  for (const char* f : {"rewards.csv", "evals.csv", "stats.txt", "eval_curve.svg", "report.json"})
    EXPECT_EQ(slurp(again / f), slurp(run_directory(cfg) / f)) << f;
}

TEST(Harness, FrameBudgetStopsTraining) {
  const fs::path out = scratch("budget");
  RunConfig cfg = small_cartpole(out, 1000);
  cfg.frame_budget = 150;
  cfg.eval = {0, 1, 0};
  const EvalReport r = run_training(cfg);
  EXPECT_GE(r.frames, 150u);
  EXPECT_LT(r.rewards.size(), 1000u);
  double steps = 0;
  for (std::size_t i = 0; i + 1 < r.rewards.size(); ++i) steps += r.rewards[i];
  EXPECT_LT(steps, 150.0);  // CartPole pays 1 per frame
}

TEST(Harness, StopConditionEndsTrainingAtAnEval) {
  const fs::path out = scratch("stop");
  RunConfig cfg = small_cartpole(out, 40);
  TrainOptions opt;
  opt.stop_when = [](const EvalPoint& p) { return p.episode == 8; };
  const EvalReport r = run_training(cfg, opt);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.rewards.size(), 8u);
  EXPECT_EQ(r.evals.size(), 2u);
  EXPECT_EQ(r.final_eval.rewards.size(), 20u);
  EXPECT_EQ(std::get<DeepAgent>(load_checkpoint(run_directory(cfg) / "checkpoint.ckpt").agent).episode, 8u);
}

TEST(Harness, ResumeContinuesFromCheckpoint) {
  const fs::path out = scratch("resume");
  RunConfig first = small_cartpole(out, 8);
  const EvalReport r1 = run_training(first);
  RunConfig longer = first;
  longer.deep.episodes = 16;
  const EvalReport r2 = run_training(longer, {true, {}});
  ASSERT_TRUE(r2.resumed_from);
  EXPECT_EQ(*r2.resumed_from, 8u);
  EXPECT_FALSE(r2.replay_restored);
  ASSERT_EQ(r2.rewards.size(), 16u);
  EXPECT_EQ(std::vector<double>(r2.rewards.begin(), r2.rewards.begin() + 8), r1.rewards);
  EXPECT_EQ(r2.evals.size(), 4u);
  // the reward log on disk covers both legs exactly once
  EXPECT_EQ(slurp(run_directory(longer) / "rewards.csv"), rewards_csv(r2));
}

TEST(Harness, OutputDirectoryOverride) {
  const fs::path over = scratch("override");
  EnvGuard guard(over.string());
  RunConfig cfg = maze_tabular("ignored_dir", 3);
  EXPECT_EQ(run_directory(cfg), over / cfg.run_name());
  run_training(cfg);
  EXPECT_TRUE(fs::exists(over / cfg.run_name() / "report.json"));
  EXPECT_FALSE(fs::exists("ignored_dir"));
}

TEST(Harness, InvalidConfigWritesNothing) {
  const fs::path out = scratch("invalid");
  RunConfig cfg = small_cartpole(out);
  cfg.deep.gamma = 1.5;
  EXPECT_THROW(run_training(cfg), ConfigError);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Config, ParsesAndRejectsUnknownKeys) {
  const Json j = Json::parse(R"({"env": "cliff_walker", "agent": "tabular-sarsa", "seed": 7,
                                 "tabular_config": {"episodes": 25, "gamma": 0.8}})");
  const RunConfig c = run_config_from_json(j);
  EXPECT_EQ(c.agent, AgentKind::TabularSarsa);
  EXPECT_EQ(c.tabular.episodes, 25u);
  EXPECT_EQ(c.tabular.gamma, 0.8);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(run_config_from_json(to_json(c)).run_name(), c.run_name());
  EXPECT_EQ(to_json(run_config_from_json(to_json(c))), to_json(c));

  EXPECT_THROW(run_config_from_json(Json::parse(R"({"env": "cartpole", "sed": 1})")), ConfigError);
  EXPECT_THROW(run_config_from_json(Json::parse(R"({"agent_config": {"alpah": 1}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(Json::parse(R"({"env": "pong"})")), ConfigError);
  EXPECT_THROW(run_config_from_json(Json::parse(R"({"agent": "dqn", "env": "maze_runner", "seed": "x"})")), ConfigError);
}

TEST(Config, FileWithComments) {
  const fs::path dir = scratch("cfgfile");
  fs::create_directories(dir);
  std::ofstream(dir / "run.json") << "// cartpole with softmax\n{\n  \"env\": \"cartpole\", // env\n  \"policy\": \"softmax\"\n}\n";
  const RunConfig c = load_run_config(dir / "run.json");
  EXPECT_EQ(c.deep.policy, PolicyKind::Softmax);
  EXPECT_THROW(load_run_config(dir / "missing.json"), ConfigError);
}

TEST(Config, DefaultsPerEnvironment) {
  const RunConfig classic = RunConfig::defaults_for("acrobot");
  EXPECT_EQ(classic.deep.alpha, 1e-4);
  EXPECT_EQ(classic.deep.copy_period, 200u);
  EXPECT_EQ(classic.deep.episodes, 1000u);
  const RunConfig px = RunConfig::defaults_for("pixel_catch");
  EXPECT_EQ(px.deep.alpha, 2.5e-4);
  EXPECT_EQ(px.deep.copy_period, 10000u);
  EXPECT_EQ(px.deep.replay_capacity, 500000u);
  EXPECT_EQ(px.deep.replay_start, 50000u);
  EXPECT_EQ(px.deep.action_repeat, 4u);
  EXPECT_EQ(px.deep.epsilon_schedule.final_frame, 500000u);
  EXPECT_TRUE(is_tabular(RunConfig::defaults_for("cliff_walker").agent));
}

TEST(Compare, PairedWilcoxonOnFinalRewards) {
  EvalReport a, b;
  a.run_name = "a";
  b.run_name = "b";
  a.final_eval = summarize_final({10, 12, 9, 15, 11, 13, 14, 10}, 8);
  b.final_eval = summarize_final({8, 11, 9, 10, 7, 12, 9, 9}, 8);
  const Comparison c = compare_reports(a, b);
  const auto direct = stats::wilcoxon_signed_rank(a.final_eval.rewards, b.final_eval.rewards);
  EXPECT_EQ(c.test.p_value, direct.p_value);
  EXPECT_EQ(c.test.n_effective, 7u);  // one zero difference dropped
  EXPECT_EQ(c.ranking.front().label, "a");
  const fs::path dir = scratch("compare");
  emit_comparison(c, dir);
  EXPECT_TRUE(fs::exists(dir / "comparison.json"));
  EXPECT_TRUE(fs::exists(dir / "ranked.svg"));

  b.final_eval = summarize_final({1, 2, 3}, 3);
  EXPECT_THROW(compare_reports(a, b), ContractError);
  b.final_eval = {};
  EXPECT_THROW(compare_reports(a, b), ContractError);
}

namespace {

GridSweep sweep_with(const std::vector<std::vector<std::optional<double>>>& scores) {
  GridSweep s;
  const std::size_t cases = scores.front().size();
  for (std::size_t c = 0; c < scores.size(); ++c) {
    s.candidates.push_back({"p", {}, "c" + std::to_string(c)});
    for (std::size_t k = 0; k < cases; ++k) {
      GridRun r;
      r.candidate = c;
      r.case_index = k;
      r.score = scores[c][k];
      s.runs.push_back(r);
    }
  }
  rank_sweep(s, cases);
  return s;
}

}  // namespace

TEST(GridRank, MajorityWins) {
  const auto s = sweep_with({{1, 5, 1}, {2, 4, 3}, {0, 0, 0}});
  ASSERT_TRUE(s.winner);
  EXPECT_EQ(*s.winner, 1u);
  EXPECT_EQ(s.rule, "majority");
  EXPECT_FALSE(s.tie);
}

TEST(GridRank, SecondaryRuleUsesMeanRank) {
  // wins: c0 two, c1 two, c2 none over four cases; c1 ranks better overall
  const auto s = sweep_with({{9, 9, 0, 0}, {1, 1, 9, 9}, {5, 5, 5, 5}});
  EXPECT_EQ(s.wins, (std::vector<std::size_t>{2, 2, 0}));
  ASSERT_TRUE(s.winner);
  EXPECT_EQ(s.rule, "secondary");
  // c0 ranks 1,1,3,3 (mean 2); c1 ranks 3,3,1,1 (mean 2): tie -> first listed
  EXPECT_TRUE(s.tie);
  EXPECT_EQ(*s.winner, 0u);

  // c1 now second in the cases it loses: ranks 2,2,1,1
  const auto u = sweep_with({{9, 9, 0, 0}, {6, 6, 9, 9}, {5, 5, 5, 5}});
  EXPECT_EQ(u.mean_rank[1], 1.5);
  EXPECT_EQ(u.mean_rank[0], 2.0);
  ASSERT_TRUE(u.winner);
  EXPECT_EQ(*u.winner, 1u);
  EXPECT_FALSE(u.tie);
}

TEST(GridRank, SingleCandidateAndFailures) {
  const auto one = sweep_with({{3}});
  ASSERT_TRUE(one.winner);
  EXPECT_EQ(*one.winner, 0u);
  const auto failed = sweep_with({{std::nullopt, std::nullopt}, {std::nullopt, std::nullopt}});
  EXPECT_FALSE(failed.winner);
  EXPECT_EQ(failed.rule, "none");
  const auto partial = sweep_with({{std::nullopt, std::nullopt}, {1, 1}});
  ASSERT_TRUE(partial.winner);
  EXPECT_EQ(*partial.winner, 1u);
}

TEST(GridRank, EqualScoresFlaggedAsTie) {
  const auto s = sweep_with({{2, 2, 2}, {2, 2, 2}});
  EXPECT_TRUE(s.tie);
  ASSERT_TRUE(s.winner);
  EXPECT_EQ(*s.winner, 0u);
}

TEST(GridSearch, RunsCandidatesOnCommonSeeds) {
  const fs::path out = scratch("grid");
  const Json spec = Json::parse(R"({
    "name": "maze",
    "base": {"env": "maze_runner", "agent": "tabular-q", "tabular_config": {"episodes": 40},
             "eval": {"interval": 0, "episodes": 1, "final_episodes": 5}},
    "parameters": {"gamma": [0.5, 0.9], "alpha0": [1.0, 0.5, "bad"]},
    "cases": 2,
    "workers": 2
  })");
  GridSpec g = grid_spec_from_json(spec);
  g.base["output_dir"] = out.string();
  const GridResult r = grid_search(g);
  ASSERT_EQ(r.sweeps.size(), 2u);
  const auto& gamma = r.sweeps[0];
  EXPECT_EQ(gamma.runs.size(), 4u);
  EXPECT_EQ(gamma.runs[0].seed, gamma.runs[2].seed);
  EXPECT_EQ(gamma.runs[1].seed, gamma.runs[3].seed);
  EXPECT_NE(gamma.runs[0].seed, gamma.runs[1].seed);
  for (const auto& run : gamma.runs) EXPECT_TRUE(run.score) << run.status;
  EXPECT_TRUE(gamma.winner);
  // a candidate that cannot be parsed fails without stopping the sweep
  const auto& alpha = r.sweeps[1];
  EXPECT_FALSE(alpha.runs[4].score);
  EXPECT_NE(alpha.runs[4].status.find("failed"), std::string::npos);
  EXPECT_TRUE(alpha.runs[0].score);
  const fs::path root = out / "tune_maze";
  EXPECT_TRUE(fs::exists(root / "summary.csv"));
  EXPECT_TRUE(fs::exists(root / "winners.json"));
  // one directory per candidate and case, even when candidates share a seed
  for (const char* c : {"0_gamma_0.5", "1_gamma_0.9"})
    for (const char* k : {"case0", "case1"}) EXPECT_TRUE(fs::exists(root / "gamma" / c / k / "report.json")) << c << k;
  const Json winners = read_json_file(root / "winners.json");
  EXPECT_EQ(winners.size(), 2u);

  // same result with one worker, under the output override
  g.workers = 1;
  const fs::path over = scratch("grid1");
  EnvGuard guard(over.string());
  const GridResult serial = grid_search(g);
  EXPECT_TRUE(fs::exists(over / "tune_maze" / "gamma" / "1_gamma_0.9" / "case1" / "report.json"));
  EXPECT_EQ(std::distance(fs::directory_iterator(over), fs::directory_iterator{}), 1);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t i = 0; i < r.sweeps[s].runs.size(); ++i)
      EXPECT_EQ(serial.sweeps[s].runs[i].score, r.sweeps[s].runs[i].score);
}

TEST(GridSearch, SpecValidation) {
  EXPECT_THROW(grid_spec_from_json(Json::parse(R"({"parameters": {}})")), ConfigError);
  EXPECT_THROW(grid_spec_from_json(Json::parse(R"({"parameters": {"gamma": []}})")), ConfigError);
  EXPECT_THROW(grid_spec_from_json(Json::parse(R"({"parameters": {"gamma": [1]}, "cases": 0})")), ConfigError);
  EXPECT_THROW(grid_spec_from_json(Json::parse(R"({"parameters": {"gamma": [1]}, "extra": 1})")), ConfigError);
  Json cfg = Json::parse(R"({"agent": "dqn"})");
  detail::set_parameter(cfg, "alpha", 0.5);
  detail::set_parameter(cfg, "eval.interval", 3);
  detail::set_parameter(cfg, "seed", 2);
  EXPECT_EQ(cfg["agent_config"]["alpha"], 0.5);
  EXPECT_EQ(cfg["eval"]["interval"], 3);
  EXPECT_EQ(cfg["seed"], 2);
  Json tab = Json::parse(R"({"agent": "tabular-q"})");
  detail::set_parameter(tab, "gamma", 0.7);
  EXPECT_EQ(tab["tabular_config"]["gamma"], 0.7);
}
