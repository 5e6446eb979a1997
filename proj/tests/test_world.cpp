#include <gtest/gtest.h>

#include <numeric>

#include "support.hpp"

using namespace intentmarl;
using namespace intentmarl::testing;

TEST(FieldOfView, CentreAlwaysIncluded) {
  const std::vector<Cell> pos{{3, 3}};
  EXPECT_EQ(field_of_view({3, 3}, 0.0, pos).size(), 1u);
  EXPECT_EQ(field_of_view({3, 3}, 7.5, pos).size(), 1u);
}

TEST(FieldOfView, BoundaryInclusiveBeyondExcluded) {
  const std::vector<Cell> pos{{3, 4}, {0, 0}, {6, 0}};
  EXPECT_EQ(field_of_view({0, 0}, 5.0, pos), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(field_of_view({0, 0}, 4.99, pos), (std::vector<std::size_t>{1}));
  EXPECT_TRUE(in_view({0, 0}, 5.0, {3, 4}));
  EXPECT_FALSE(in_view({0, 0}, 5.0, {4, 4}));
}

TEST(AssignRewards, TwoOfThreeObserve) {
  const std::vector<Cell> robots{{0, 0}, {1, 0}, {9, 9}};
  std::vector<int> observers;
  const auto r = assign_rewards({0, 1}, robots, 1.5, &observers);
  EXPECT_EQ(r, (std::vector<double>{0.5, 0.5, 0.0}));
  EXPECT_EQ(observers, (std::vector<int>{0, 1}));
}

TEST(AssignRewards, NobodyObservesPenaltyShared) {
  const std::vector<Cell> robots{{5, 5}, {6, 6}, {7, 7}};
  const auto r = assign_rewards({0, 0}, robots, 1.0);
  for (const double v : r) EXPECT_DOUBLE_EQ(v, -1.0 / 3.0);
}

TEST(AssignRewards, NoRobots) {
  EXPECT_TRUE(assign_rewards({0, 0}, std::vector<Cell>{}, 1.0).empty());
}

TEST(AssignRewards, NoEventNoReward) {
  EXPECT_EQ(robot_reward(std::vector<RewardEvent>{}, 0), 0.0);
}

TEST(SpawnHumans, ZeroProbabilityNeverSpawns) {
  const Scene s = load_scene(plus_doc(11));
  PathPlanner planner(s);
  Rng rng(1);
  int next = 0;
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(spawn_humans(s, rng, planner, next).empty());
  EXPECT_EQ(next, 0);
}

TEST(SpawnHumans, ForcedOutcome) {
  auto doc = corridor_doc(6);
  doc["spawn_prob"] = 1.0;
  const Scene s = load_scene(doc);
  PathPlanner planner(s);
  Rng rng(3);
  int next = 0;
  const auto hs = spawn_humans(s, rng, planner, next);
  ASSERT_EQ(hs.size(), 1u);
  EXPECT_EQ(hs[0].position, (Cell{0, 0}));
  EXPECT_EQ(s.goals[hs[0].goal].id, "B");
  EXPECT_EQ(hs[0].path.back(), (Cell{5, 0}));
  EXPECT_EQ(hs[0].path.size(), 5u);
  EXPECT_EQ(next, 1);
}

TEST(SpawnHumans, EmpiricalFrequency) {
  const auto s = train_scene();
  ASSERT_DOUBLE_EQ(s->spawn_prob, 0.05);
  PathPlanner planner(*s);
  Rng rng(2024);
  int next = 0;
  int spawned = 0;
  for (int i = 0; i < 10000; ++i) spawned += static_cast<int>(spawn_humans(*s, rng, planner, next).size());
  // A human heading to an entrance may be dropped only if no other entrance exists.
  EXPECT_NEAR(spawned / 10000.0, 0.05, 0.01);
}

TEST(SpawnHumans, ExitTargetsDifferentEntrance) {
  auto doc = plus_doc(11);
  doc["spawn_prob"] = 1.0;
  doc["human_building_prob"] = 0.0;
  const Scene s = load_scene(doc);
  PathPlanner planner(s);
  Rng rng(9);
  int next = 0;
  for (int i = 0; i < 200; ++i) {
    const auto hs = spawn_humans(s, rng, planner, next);
    ASSERT_EQ(hs.size(), 1u);
    EXPECT_EQ(s.goals[hs[0].goal].kind, GoalKind::Entrance);
    EXPECT_NE(s.goals[hs[0].goal].position, hs[0].position);
  }
}

TEST(WorldStep, FixedPointWithoutHumans) {
  auto scene = make_scene(plus_doc(11));
  WorldState w(scene, 2);
  w.set_robot_position(0, scene->goals[0].position);
  w.set_robot_position(1, scene->goals[1].position);
  const std::vector<GoalRef> goals{static_goal(*scene, 0), static_goal(*scene, 1)};
  Rng rng(1);
  const auto before = w.robot_positions();
  const auto hist = w.robots()[0].position_history.size();
  for (int i = 0; i < 5; ++i) {
    const auto res = w.step(goals, rng);
    EXPECT_TRUE(res.events.empty());
    EXPECT_TRUE(res.observation.humans.empty());
  }
  EXPECT_EQ(w.robot_positions(), before);
  EXPECT_EQ(w.robots()[0].position_history.size(), hist + 5);
  EXPECT_EQ(w.step_count(), 5);
}

namespace {

HumanAgent human_near_door(const Scene& s, int id) {
  HumanAgent h;
  h.id = id;
  h.position = {3, 0};
  h.goal = s.find_goal("B");
  h.path = {{4, 0}};
  return h;
}

}  // namespace

TEST(WorldStep, ObservedEntryRewardsObserver) {
  auto scene = make_scene(corridor_doc(5));
  WorldState w(scene, 1);
  w.set_robot_position(0, {4, 0});
  w.add_human(human_near_door(*scene, 0));
  Rng rng(1);
  const std::vector<GoalRef> goals{goal_ref(*scene, "B")};
  const auto res = w.step(goals, rng);
  ASSERT_EQ(res.events.size(), 1u);
  EXPECT_EQ(res.events[0].observers, (std::vector<int>{0}));
  EXPECT_EQ(res.events[0].per_robot_reward, (std::vector<double>{1.0}));
  EXPECT_EQ(robot_reward(res.events, 0), 1.0);
  EXPECT_TRUE(w.humans().empty());
}

TEST(WorldStep, UnobservedEntryPenalisesTeam) {
  auto scene = make_scene(corridor_doc(5));
  WorldState w(scene, 3);
  for (std::size_t i = 0; i < 3; ++i) w.set_robot_position(i, {0, 0});
  w.add_human(human_near_door(*scene, 0));
  Rng rng(1);
  const std::vector<GoalRef> goals(3, goal_ref(*scene, "E"));
  const auto res = w.step(goals, rng);
  ASSERT_EQ(res.events.size(), 1u);
  EXPECT_TRUE(res.events[0].observers.empty());
  for (const double r : res.events[0].per_robot_reward) EXPECT_DOUBLE_EQ(r, -1.0 / 3.0);
}

TEST(WorldStep, RewardConservation) {
  auto doc = plus_doc(11);
  doc["spawn_prob"] = 1.0;
  auto scene = make_scene(doc);
  WorldState w(scene, 3);
  Rng rng(5), pick(6);
  long events = 0;
  std::vector<GoalRef> goals(3);
  while (events < 2000) {
    const auto feasible = w.robot_feasible_goals();
    for (auto& g : goals) g = feasible[uniform_index(pick, feasible.size())];
    for (const auto& e : w.step(goals, rng).events) {
      const double sum = std::accumulate(e.per_robot_reward.begin(), e.per_robot_reward.end(), 0.0);
      EXPECT_NEAR(std::abs(sum), 1.0, 1e-12);
      EXPECT_EQ(sum > 0, !e.observers.empty());
      ++events;
    }
  }
}

TEST(WorldStep, ExitingHumanProducesNoEvent) {
  auto scene = make_scene(corridor_doc(5));
  WorldState w(scene, 1);
  HumanAgent h;
  h.id = 0;
  h.position = {1, 0};
  h.goal = scene->find_goal("E");
  h.path = {{0, 0}};
  w.add_human(h);
  Rng rng(1);
  const std::vector<GoalRef> goals{goal_ref(*scene, "B")};
  EXPECT_TRUE(w.step(goals, rng).events.empty());
  EXPECT_TRUE(w.humans().empty());
}

TEST(WorldStep, TrackedHumanBecomesGoalThenExpires) {
  auto doc = corridor_doc(30);
  doc["fov_radius"] = 1.0;
  doc["track_ttl"] = 3;
  auto scene = make_scene(doc);
  WorldState w(scene, 1);
  w.set_robot_position(0, {2, 0});
  HumanAgent h;
  h.id = 7;
  h.position = {1, 0};
  h.goal = scene->find_goal("B");
  for (int x = 2; x < 30; ++x) h.path.push_back({x, 0});
  w.add_human(h);
  Rng rng(1);
  // Robot hovers in place while the human walks past.
  std::vector<GoalRef> goals{GoalRef::hover()};
  auto res = w.step(goals, rng);
  ASSERT_EQ(res.observation.humans.size(), 1u);
  EXPECT_TRUE(w.goal_live(GoalRef::human(7)));
  const auto feasible = w.robot_feasible_goals();
  EXPECT_NE(std::find(feasible.begin(), feasible.end(), GoalRef::human(7)), feasible.end());
  // Human walks away at speed 1; out of view from step 2 on.
  int live_steps = 0;
  for (int i = 0; i < 6; ++i) {
    w.step(goals, rng);
    if (w.goal_live(GoalRef::human(7))) ++live_steps;
  }
  EXPECT_FALSE(w.goal_live(GoalRef::human(7)));
  EXPECT_LE(live_steps, 3);
}

TEST(WorldStep, LostHumanGoalFallsBackToHover) {
  auto scene = make_scene(corridor_doc(10));
  WorldState w(scene, 1);
  Rng rng(1);
  const std::vector<GoalRef> goals{GoalRef::human(42)};
  const Cell before = w.robots()[0].position;
  const auto res = w.step(goals, rng);
  EXPECT_EQ(res.observation.hover_fallback, (std::vector<int>{0}));
  EXPECT_TRUE(w.robots()[0].goal.is_hover());
  EXPECT_EQ(w.robots()[0].position, before);
}

TEST(WorldStep, RobotsMoveAtTheirSpeed) {
  auto doc = plus_doc(11);
  doc["robot_speed"] = 2;
  auto scene = make_scene(doc);
  WorldState w(scene, 1);
  w.set_robot_position(0, {0, 0});
  Rng rng(1);
  const std::vector<GoalRef> goals{goal_ref(*scene, "EE")};
  w.step(goals, rng);
  EXPECT_EQ(manhattan(w.robots()[0].position, {0, 0}), 2);
}

TEST(WorldState, FeasibleGoals) {
  auto scene = make_scene(plus_doc(11));
  WorldState w(scene, 1);
  EXPECT_EQ(w.robot_feasible_goals().size(), 9u);
  EXPECT_EQ(w.human_feasible_goals().size(), 8u);
}

TEST(WorldState, CopyIsIndependent) {
  auto doc = plus_doc(11);
  doc["spawn_prob"] = 0.5;
  auto scene = make_scene(doc);
  WorldState a(scene, 2);
  Rng r1(4), r2(4);
  const std::vector<GoalRef> goals{goal_ref(*scene, "BN"), goal_ref(*scene, "BS")};
  for (int i = 0; i < 10; ++i) a.step(goals, r1);
  WorldState b = a;
  Rng r1c = r1;
  for (int i = 0; i < 20; ++i) {
    a.step(goals, r1);
    b.step(goals, r1c);
  }
  EXPECT_EQ(a.robot_positions(), b.robot_positions());
  EXPECT_EQ(a.humans().size(), b.humans().size());
}
