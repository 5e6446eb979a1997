#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace intentmarl;
using namespace intentmarl::testing;

namespace {

ExperimentConfig small_config() {
  auto c = load_config(source_path("configs/default.json"));
  c.training_reward_iterations = 60;
  c.checkpoints = {20, 60};
  c.eval_entry_events = 40;
  c.seeds = {1, 2};
  return c;
}

}  // namespace

TEST(Config, DefaultLoadsAndResolvesScenes) {
  const auto c = load_config(source_path("configs/default.json"));
  EXPECT_TRUE(std::filesystem::exists(c.scene_train)) << c.scene_train;
  EXPECT_TRUE(std::filesystem::exists(c.scene_test)) << c.scene_test;
  EXPECT_EQ(c.n_robots, 3);
  EXPECT_EQ(c.training_reward_iterations, 500);
  EXPECT_EQ(c.seeds.size(), 5u);
  EXPECT_EQ(c.eval_entry_events, 200);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(config_from_json({{"n_robots", -1}}), ConfigError);
  EXPECT_THROW(config_from_json({{"policies", {"rnn"}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"learner", {{"epsilon_start", 2.0}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"intent", {{"window", 0}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"seeds", nlohmann::json::array()}}), ConfigError);
  EXPECT_THROW(config_from_json({{"n_robots", "three"}}), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Train, ZeroIterationsReturnsInitialTheta) {
  auto c = small_config();
  c.training_reward_iterations = 0;
  const auto r = train(c, train_scene(), 1);
  EXPECT_EQ(r.final.theta, Theta{});
  EXPECT_EQ(r.final.iterations, 0);
  c.learner.init = InitMode::Uniform;
  EXPECT_EQ(train(c, train_scene(), 1).final.theta, initial_learner(c.learner, 1).theta);
}

TEST(Train, ZeroRatesKeepTheta) {
  auto c = small_config();
  c.learner.alpha = 0.0;
  c.learner.beta_lr = 0.0;
  c.learner.init = InitMode::Uniform;
  const auto r = train(c, train_scene(), 3);
  EXPECT_EQ(r.final.theta, initial_learner(c.learner, 3).theta);
  EXPECT_EQ(r.final.r_bar, 0.0);
  EXPECT_EQ(r.final.iterations, 60);
}

TEST(Train, CheckpointsAtMilestones) {
  const auto c = small_config();
  const auto r = train(c, train_scene(), 1);
  ASSERT_EQ(r.checkpoints.size(), 2u);
  EXPECT_EQ(r.checkpoints[0].iterations, 20);
  EXPECT_EQ(r.checkpoints[1].iterations, 60);
  EXPECT_EQ(r.checkpoints[1].theta, r.final.theta);
  EXPECT_FALSE(r.diverged);
  EXPECT_EQ(static_cast<long>(r.metrics.r_bar_trace.size()), 60);
}

TEST(Train, BaselinesDoNotTrain) {
  EXPECT_THROW(train(small_config(), train_scene(), 1, PolicyKind::Greedy), std::invalid_argument);
}

TEST(Train, StepBudgetMarksPartial) {
  auto c = small_config();
  c.step_budget = 10;
  const auto r = train(c, train_scene(), 1);
  EXPECT_TRUE(r.metrics.partial);
  EXPECT_EQ(r.metrics.steps, 10);
}

TEST(Evaluate, AllEntriesObserved) {
  auto doc = corridor_doc(9);
  doc["spawn_prob"] = 0.5;
  doc["fov_radius"] = 20.0;
  auto c = small_config();
  c.n_robots = 2;
  const auto m = evaluate(c, make_scene(doc), PolicyKind::Random, std::nullopt, 1);
  EXPECT_EQ(m.n_e, c.eval_entry_events);
  EXPECT_EQ(m.capture_rate(), 1.0);
}

TEST(Evaluate, ZeroRobotsCaptureNothing) {
  auto c = small_config();
  c.n_robots = 0;
  const auto m = evaluate(c, train_scene(), PolicyKind::Random, std::nullopt, 1);
  EXPECT_EQ(m.n_e, c.eval_entry_events);
  EXPECT_EQ(m.capture_rate(), 0.0);
}

TEST(Evaluate, LearnerNeedsTheta) {
  EXPECT_THROW(evaluate(small_config(), train_scene(), PolicyKind::IntentAware, std::nullopt, 1),
               std::invalid_argument);
}

TEST(Evaluate, StepBudgetMarksPartial) {
  auto c = small_config();
  c.step_budget = 5;
  const auto m = evaluate(c, train_scene(), PolicyKind::Greedy, std::nullopt, 1);
  EXPECT_TRUE(m.partial);
}

TEST(Transfer, TypedThetaRunsOnFourBuildingScene) {
  const auto c = small_config();
  const auto trained = train(c, train_scene(), 1);
  const auto m = transfer(c, trained.final, test_scene(), 1);
  EXPECT_EQ(m.n_e, c.eval_entry_events);
  EXPECT_GE(m.capture_rate(), 0.0);
}

TEST(Transfer, ZeroThetaMatchesIntentBlindZeroTheta) {
  // With theta = 0 every utility ties, so beliefs cannot matter.
  const auto c = small_config();
  const ThetaCheckpoint zero{};
  const auto a = transfer(c, zero, test_scene(), 2, PolicyKind::IntentAware);
  const auto b = transfer(c, zero, test_scene(), 2, PolicyKind::IntentBlind);
  EXPECT_EQ(a.n_o, b.n_o);
  EXPECT_EQ(a.steps, b.steps);
}

TEST(Determinism, TrainAndEvaluateRepeat) {
  const auto c = small_config();
  std::ostringstream t1, t2;
  const auto a = train(c, train_scene(), 4, PolicyKind::IntentAware, &t1);
  const auto b = train(c, train_scene(), 4, PolicyKind::IntentAware, &t2);
  EXPECT_EQ(a.final.theta, b.final.theta);
  EXPECT_EQ(a.metrics.steps, b.metrics.steps);
  EXPECT_EQ(t1.str(), t2.str());
  std::ostringstream e1, e2;
  const auto ma = evaluate(c, train_scene(), PolicyKind::IntentAware, a.final, 4, &e1);
  const auto mb = evaluate(c, train_scene(), PolicyKind::IntentAware, b.final, 4, &e2);
  EXPECT_EQ(ma.n_o, mb.n_o);
  EXPECT_EQ(e1.str(), e2.str());
}

TEST(Determinism, DifferentSeedsDiffer) {
  const auto c = small_config();
  EXPECT_NE(train(c, train_scene(), 1).final.theta, train(c, train_scene(), 2).final.theta);
}

TEST(Trace, EmptyRunIsHeaderOnly) {
  auto c = small_config();
  c.training_reward_iterations = 0;
  std::stringstream out;
  train(c, train_scene(), 1, PolicyKind::IntentAware, &out);
  const auto text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  const auto s = replay_trace(out);
  EXPECT_EQ(s.steps, 0);
  EXPECT_EQ(s.n_e, 0);
}

TEST(Trace, ReplayReproducesMetrics) {
  const auto c = small_config();
  for (const auto kind : {PolicyKind::IntentAware, PolicyKind::Greedy, PolicyKind::Random}) {
    std::optional<ThetaCheckpoint> theta;
    if (uses_learner(kind)) theta = train(c, train_scene(), 5).final;
    std::stringstream trace;
    const auto m = evaluate(c, train_scene(), kind, theta, 5, &trace);
    const auto s = replay_trace(trace);
    EXPECT_EQ(s.n_e, m.n_e);
    EXPECT_EQ(s.n_o, m.n_o);
    EXPECT_EQ(s.steps, m.steps);
    EXPECT_EQ(s.distinct_steps, m.distinct_steps);
    EXPECT_EQ(s.capture_rate(), m.capture_rate());
    EXPECT_EQ(s.distinct_building_fraction(), m.distinct_building_fraction());
  }
}

TEST(Trace, ReplayOfTrainingRun) {
  const auto c = small_config();
  std::stringstream trace;
  const auto r = train(c, train_scene(), 6, PolicyKind::IntentAware, &trace);
  const auto s = replay_trace(trace);
  EXPECT_EQ(s.n_e, r.metrics.n_e);
  EXPECT_EQ(s.n_o, r.metrics.n_o);
  EXPECT_EQ(s.steps, r.metrics.steps);
}

TEST(Trace, RecordFieldsPresentInOrder) {
  const auto c = small_config();
  std::stringstream trace;
  train(c, train_scene(), 7, PolicyKind::IntentAware, &trace);
  std::string header, line;
  std::getline(trace, header);
  const auto h = nlohmann::ordered_json::parse(header);
  EXPECT_EQ(h["schema"], "intentmarl.trace");
  EXPECT_EQ(h["version"], 1);
  EXPECT_EQ(h.begin().key(), "type");
  bool saw_delta = false, saw_utilities = false;
  while (std::getline(trace, line)) {
    const auto j = nlohmann::ordered_json::parse(line);
    ASSERT_EQ(j["type"], "step");
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys.front(), "type");
    EXPECT_EQ(keys[1], "step");
    EXPECT_EQ(keys[2], "robots");
    for (const auto& r : j["robots"]) {
      EXPECT_TRUE(r.contains("pos") && r.contains("pursued") && r.contains("chosen") && r.contains("r_bar"));
      saw_delta |= r.contains("delta");
      saw_utilities |= r.contains("utilities") && r.contains("beliefs");
    }
  }
  EXPECT_TRUE(saw_delta);
  EXPECT_TRUE(saw_utilities);
}

TEST(Trace, MalformedInputRejected) {
  std::istringstream bad("{\"type\":\"step\",\"step\":1}\n");
  EXPECT_THROW(replay_trace(bad), TraceError);
  std::istringstream junk("not json\n");
  EXPECT_THROW(replay_trace(junk), TraceError);
  std::istringstream empty("");
  EXPECT_THROW(replay_trace(empty), TraceError);
}

TEST(Trace, SinkFailureAborts) {
  std::ostringstream out;
  out.setstate(std::ios::badbit);
  EXPECT_THROW(train(small_config(), train_scene(), 1, PolicyKind::IntentAware, &out), TraceError);
}

TEST(Trace, DistinctBuildings) {
  const std::set<std::string> b{"B1", "B2", "B3"};
  const std::vector<std::string> ok{"B1", "B3"}, dup{"B1", "B1"}, other{"B1", "E1"}, none;
  EXPECT_TRUE(distinct_buildings(ok, b));
  EXPECT_FALSE(distinct_buildings(dup, b));
  EXPECT_FALSE(distinct_buildings(other, b));
  EXPECT_FALSE(distinct_buildings(none, b));
}

TEST(AverageReward, TracksMeanRewardPerUpdate) {
  // Frozen theta (alpha = 0): r_bar should settle near the mean reward over
  // the updates it was fed. Median relative error over 5 seeds within 20%.
  auto c = load_config(source_path("configs/default.json"));
  c.learner.alpha = 0.0;
  c.training_reward_iterations = 3000;
  c.checkpoints = {};
  std::vector<double> errors;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::stringstream trace;
    const auto r = train(c, train_scene(), seed, PolicyKind::IntentAware, &trace);
    std::string line;
    std::getline(trace, line);
    double sum = 0.0;
    long n = 0;
    while (std::getline(trace, line)) {
      const auto j = nlohmann::json::parse(line);
      for (const auto& rob : j["robots"]) {
        if (rob.contains("delta")) {
          sum += rob["reward"].get<double>();
          ++n;
        }
      }
    }
    ASSERT_GT(n, 1000);
    const double mean_reward = sum / static_cast<double>(n);
    // Average of r_bar over the second half of training.
    const auto& tr = r.metrics.r_bar_trace;
    double tail = 0.0;
    for (std::size_t i = tr.size() / 2; i < tr.size(); ++i) tail += tr[i];
    tail /= static_cast<double>(tr.size() - tr.size() / 2);
    errors.push_back(std::abs(tail - mean_reward) / std::abs(mean_reward));
  }
  std::sort(errors.begin(), errors.end());
  EXPECT_LE(errors[2], 0.2) << "median relative error " << errors[2];
}

TEST(Compare, TwoKindsOneSeed) {
  auto c = small_config();
  c.seeds = {1};
  c.policies = {PolicyKind::Random, PolicyKind::Greedy};
  c.scene_test.clear();
  const auto t = compare(c);
  EXPECT_EQ(t.columns, (std::vector<long>{20, 60}));
  EXPECT_EQ(t.rows.size(), 4u);
  // Baselines do not learn: identical across milestone columns.
  EXPECT_EQ(t.rates(PolicyKind::Random, "train", 20), t.rates(PolicyKind::Random, "train", 60));
  std::ostringstream csv;
  write_csv(t, csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "policy,seed,checkpoint,scene,n_e,n_o,capture_rate,distinct_building_fraction");
}

TEST(Compare, FullPipelineSmall) {
  auto c = small_config();
  const auto t = compare(c);
  for (const auto k : c.policies) {
    EXPECT_EQ(t.rates(k, "train", 60).size(), 2u);
    EXPECT_EQ(t.rates(k, "test", 0).size(), 2u);
  }
  EXPECT_EQ(t.final_theta.size(), 4u);  // intent_aware and intent_blind, two seeds each
  std::ostringstream table;
  print_table(t, c.policies, table);
  EXPECT_NE(table.str().find("intent_aware"), std::string::npos);
}

TEST(Compare, NeedsTwoKinds) {
  auto c = small_config();
  c.policies = {PolicyKind::Random};
  EXPECT_THROW(compare(c), ConfigError);
}

TEST(Stats, MeanAndStddev) {
  EXPECT_EQ(mean({}), 0.0);
  EXPECT_DOUBLE_EQ(mean({1.0, 2.0, 3.0}), 2.0);
  EXPECT_DOUBLE_EQ(stddev({1.0, 2.0, 3.0}), 1.0);
  EXPECT_EQ(stddev({5.0}), 0.0);
}
