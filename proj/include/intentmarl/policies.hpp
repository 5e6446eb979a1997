#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "intent.hpp"
#include "learner.hpp"
#include "world.hpp"

namespace intentmarl {

enum class PolicyKind { IntentAware, Random, Greedy, IntentBlind };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::IntentAware: return "intent_aware";
    case PolicyKind::Random: return "random";
    case PolicyKind::Greedy: return "greedy";
    case PolicyKind::IntentBlind: return "intent_blind";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(const std::string& s) {
  if (s == "intent_aware" || s == "intent-aware" || s == "ours") return PolicyKind::IntentAware;
  if (s == "random") return PolicyKind::Random;
  if (s == "greedy") return PolicyKind::Greedy;
  if (s == "intent_blind" || s == "intent-blind") return PolicyKind::IntentBlind;
  throw std::invalid_argument("unknown policy kind '" + s + "'");
}

inline bool uses_learner(PolicyKind k) { return k == PolicyKind::IntentAware || k == PolicyKind::IntentBlind; }

struct DecisionRecord {
  int step = 0;
  int robot = 0;
  UtilityTable utilities;  // empty for baselines and kept goals
  BeliefMap beliefs;       // empty for baselines and kept goals
  GoalRef chosen = GoalRef::hover();
  bool kept = false;
  double reward = 0.0;
  std::optional<double> delta;
  double r_bar = 0.0;
};

/// Uniform re-draw every `period` steps (and whenever the current goal is gone).
inline GoalRef random_policy(std::span<const GoalRef> feasible, int step, int period, Rng& rng,
                             std::optional<GoalRef> current = {}) {
  if (feasible.empty()) throw std::invalid_argument("random_policy: empty feasible set");
  if (period < 1) throw std::invalid_argument("random_policy: period must be >= 1");
  const bool current_ok = current && std::find(feasible.begin(), feasible.end(), *current) != feasible.end();
  if (current_ok && step % period != 0) return *current;
  return feasible[uniform_index(rng, feasible.size())];
}

/// Tracks the nearest visible human (ties: lowest id); otherwise behaves as random_policy.
inline GoalRef greedy_policy(const TeamObservation& obs, Cell robot_position, std::span<const GoalRef> feasible, int step,
                             int period, Rng& rng, std::optional<GoalRef> current = {}) {
  const ObservedAgent* nearest = nullptr;
  double best = 0.0;
  for (const auto& h : obs.humans) {
    if (std::find(feasible.begin(), feasible.end(), GoalRef::human(h.id)) == feasible.end()) continue;
    const double d = euclidean(robot_position, h.position);
    if (!nearest || d < best || (d == best && h.id < nearest->id)) {
      nearest = &h;
      best = d;
    }
  }
  if (nearest) return GoalRef::human(nearest->id);
  return random_policy(feasible, step, period, rng, current);
}

enum class LearnMode { Train, Evaluate };

/// Per-run decision state for a team of robots sharing one policy kind.
/// Robots decide sequentially in ascending id order; learner updates are
/// applied to the shared LearnerState in that order.
class TeamController {
 public:
  TeamController(PolicyKind kind, int n_robots, PredictorConfig intent, int baseline_period)
      : kind_(kind), intent_(intent), period_(baseline_period), robots_(static_cast<std::size_t>(n_robots)) {
    validate(intent_);
    if (period_ < 1) throw std::invalid_argument("baseline period must be >= 1");
  }

  PolicyKind kind() const { return kind_; }

  /// One decision per robot for the observation just pushed into `history`.
  /// `learner` is required for utility-based kinds and is only written in Train mode.
  std::vector<GoalRef> decide(WorldState& world, const ObservationHistory& history, const TeamObservation& obs,
                              std::span<const RewardEvent> events, LearnerState* learner, LearnMode mode, Rng& rng,
                              std::vector<DecisionRecord>* records = nullptr) {
    if (uses_learner(kind_) && !learner) throw std::invalid_argument("utility-based policy needs a learner");
    std::vector<GoalRef> goals;
    goals.reserve(robots_.size());
    const auto feasible = world.robot_feasible_goals();
    std::optional<BeliefMap> beliefs;
    const int step = obs.step;

    for (std::size_t i = 0; i < robots_.size(); ++i) {
      auto& st = robots_[i];
      const int id = static_cast<int>(i);
      const double r = robot_reward(events, id);
      DecisionRecord rec;
      rec.step = step;
      rec.robot = id;
      rec.reward = r;
      const bool current_live = st.goal && world.goal_live(*st.goal) && !st.goal->is_hover();
      const std::optional<GoalRef> current = current_live ? st.goal : std::nullopt;
      const Cell pos = world.robots()[i].position;

      switch (kind_) {
        case PolicyKind::Random: {
          const GoalRef g = random_policy(feasible, step, period_, rng, current);
          rec.kept = current && g == *current;
          st.goal = g;
          break;
        }
        case PolicyKind::Greedy: {
          const GoalRef g = greedy_policy(obs, pos, feasible, step, period_, rng, current);
          rec.kept = current && g == *current;
          st.goal = g;
          break;
        }
        case PolicyKind::IntentAware:
        case PolicyKind::IntentBlind: {
          const double epsilon = mode == LearnMode::Train ? learner->epsilon : 0.0;
          if (current && st.features &&
              maybe_keep_goal(r, learner->keep_probability(), rng) == KeepDecision::Keep) {
            rec.kept = true;
            break;
          }
          if (!beliefs) beliefs = compute_beliefs(world, history, learner->theta);
          const AgentKey self{AgentType::Robot, id};
          const auto live = [&world](GoalRef g) { return world.goal_live(g); };
          const auto evals = evaluate_goals(learner->theta, feasible, *beliefs, self, live);
          UtilityTable table;
          table.reserve(evals.size());
          for (const auto& e : evals) table.emplace_back(e.goal, e.utility);
          const GoalRef g = select_goal(table, epsilon, rng);
          const auto chosen = std::find_if(evals.begin(), evals.end(), [g](const auto& e) { return e.goal == g; });
          if (r != 0.0 && mode == LearnMode::Train && st.features) {
            const double delta = td_error(r, learner->r_bar, chosen->utility, q_value(learner->theta, *st.features));
            *learner = apply_update(*learner, delta, *st.features);
            rec.delta = delta;
          }
          st.features = chosen->features;
          st.goal = g;
          if (records) {
            rec.utilities = std::move(table);
            for (const auto& [agent, b] : *beliefs) {
              if (agent != self) rec.beliefs.emplace(agent, b);
            }
          }
          break;
        }
      }
      if (learner) rec.r_bar = learner->r_bar;
      rec.chosen = *st.goal;
      goals.push_back(*st.goal);
      if (records) records->push_back(std::move(rec));
    }
    return goals;
  }

 private:
  struct RobotState {
    std::optional<GoalRef> goal;
    std::optional<FeatureVector> features;  // features of (h, g) at the last decision
  };

  BeliefMap compute_beliefs(WorldState& world, const ObservationHistory& history, const Theta& theta) const {
    if (kind_ == PolicyKind::IntentBlind) return uniform_beliefs(history, world);
    PriorScore score;
    if (intent_.prior_mode == PriorMode::QSoftmax) {
      score = [&theta](GoalRef g) { return theta.self_value(goal_type(g.kind)); };
    }
    return update_beliefs(history, world, intent_, score);
  }

  PolicyKind kind_;
  PredictorConfig intent_;
  int period_;
  std::vector<RobotState> robots_;
};

}  // namespace intentmarl
