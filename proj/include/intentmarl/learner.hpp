#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "intent.hpp"
#include "theta.hpp"
#include "world.hpp"

namespace intentmarl {

/// Predicate telling whether a goal instance is still live.
using GoalLiveness = std::function<bool(GoalRef)>;

/// Feature vector for pursuing `own_goal` given beliefs about the other agents.
///
/// The self slot of the own goal's type is 1. Each other agent j adds
/// p(g | h) to slot (type(own), type(j), type(g), same/different instance).
/// Mass on dead goals is dropped without renormalising; `dropped` receives it.
inline FeatureVector build_features(GoalRef own_goal, const BeliefMap& beliefs, std::optional<AgentKey> exclude = {},
                                    const GoalLiveness& live = {}, double* dropped = nullptr) {
  FeatureVector phi;
  const GoalType own = goal_type(own_goal.kind);
  phi[self_slot(own)] = 1.0;
  double lost = 0.0;
  for (const auto& [agent, belief] : beliefs) {
    if (exclude && agent == *exclude) continue;
    for (const auto& [goal, p] : belief.entries) {
      if (p == 0.0) continue;
      if (live && !live(goal)) {
        lost += p;
        continue;
      }
      const auto rel = goal == own_goal ? Relation::SameInstance : Relation::DifferentInstance;
      if (const auto slot = influence_slot(own, agent.type, goal_type(goal.kind), rel)) phi[*slot] += p;
    }
  }
  if (dropped) *dropped = lost;
  return phi;
}

inline double q_value(const Theta& theta, const FeatureVector& phi) {
  double q = 0.0;
  for (std::size_t i = 0; i < kNumParams; ++i) q += theta[i] * phi[i];
  return q;
}

struct GoalEvaluation {
  GoalRef goal;
  FeatureVector features;
  double utility = 0.0;
};

inline std::vector<GoalEvaluation> evaluate_goals(const Theta& theta, std::span<const GoalRef> feasible,
                                                  const BeliefMap& beliefs, std::optional<AgentKey> exclude = {},
                                                  const GoalLiveness& live = {}) {
  if (feasible.empty()) throw std::invalid_argument("utilities: empty feasible goal list");
  std::vector<GoalEvaluation> out;
  out.reserve(feasible.size());
  for (const GoalRef g : feasible) {
    GoalEvaluation e{g, build_features(g, beliefs, exclude, live), 0.0};
    e.utility = q_value(theta, e.features);
    out.push_back(std::move(e));
  }
  return out;
}

using UtilityTable = std::vector<std::pair<GoalRef, double>>;

inline UtilityTable utilities(const Theta& theta, std::span<const GoalRef> feasible, const BeliefMap& beliefs,
                              std::optional<AgentKey> exclude = {}, const GoalLiveness& live = {}) {
  UtilityTable out;
  for (const auto& e : evaluate_goals(theta, feasible, beliefs, exclude, live)) out.emplace_back(e.goal, e.utility);
  return out;
}

/// Indices of the maximal utilities. Values within a tiny tolerance relative to
/// the largest magnitude count as tied, so the set is invariant under positive scaling.
inline std::vector<std::size_t> argmax_set(const UtilityTable& u) {
  double best = -std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (const auto& [g, v] : u) {
    best = std::max(best, v);
    scale = std::max(scale, std::abs(v));
  }
  const double tol = 1e-9 * scale;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i].second >= best - tol) out.push_back(i);
  }
  return out;
}

/// Epsilon-greedy choice with uniform random tie-breaking among maxima.
inline GoalRef select_goal(const UtilityTable& u, double epsilon, Rng& rng) {
  if (u.empty()) throw std::invalid_argument("select_goal: empty utilities");
  if (uniform01(rng) < epsilon) return u[uniform_index(rng, u.size())].first;
  const auto best = argmax_set(u);
  return u[best[best.size() == 1 ? 0 : uniform_index(rng, best.size())]].first;
}

enum class KeepDecision { Keep, Redecide };

/// Rewarded steps always re-decide; otherwise keep with `keep_probability`.
inline KeepDecision maybe_keep_goal(double reward, double keep_probability, Rng& rng) {
  if (reward != 0.0) return KeepDecision::Redecide;
  return uniform01(rng) < keep_probability ? KeepDecision::Keep : KeepDecision::Redecide;
}

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LearnerState {
  Theta theta;
  double r_bar = 0.0;
  double alpha = 0.05;    // theta step size
  double beta_lr = 0.01;  // average-reward step size
  double epsilon = 0.1;
  double f = 5.0;         // goal update frequency; keep probability 1/f unless overridden
  std::optional<double> keep_prob;

  double keep_probability() const { return keep_prob ? *keep_prob : 1.0 / f; }
};

inline void validate(const LearnerState& s) {
  if (!(s.alpha >= 0.0) || !(s.beta_lr >= 0.0)) throw std::invalid_argument("learning rates must be >= 0");
  if (!(s.epsilon >= 0.0 && s.epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (!(s.f >= 1.0)) throw std::invalid_argument("f must be >= 1");
  if (s.keep_prob && !(*s.keep_prob >= 0.0 && *s.keep_prob <= 1.0)) throw std::invalid_argument("keep_prob must lie in [0, 1]");
}

/// Differential TD error: r - r_bar + Q(h', g') - Q(h, g).
inline double td_error(double reward, double r_bar, double q_next, double q_cur) { return reward - r_bar + q_next - q_cur; }

/// Semi-gradient step. The gradient of a linear Q is its feature vector.
inline LearnerState apply_update(LearnerState s, double delta, const FeatureVector& phi) {
  if (!std::isfinite(delta)) throw DivergenceError("non-finite TD error");
  for (std::size_t i = 0; i < kNumParams; ++i) s.theta[i] += s.alpha * delta * phi[i];
  s.r_bar += s.beta_lr * delta;
  if (!s.theta.finite() || !std::isfinite(s.r_bar)) {
    std::ostringstream msg;
    msg << "learner diverged (delta=" << delta << ", r_bar=" << s.r_bar << ")";
    throw DivergenceError(msg.str());
  }
  return s;
}

enum class RelationshipKind {
  CooperationSameGoal,
  CooperationDifferentGoal,
  CompetitionSameGoal,
  CompetitionDifferentGoal,
  NoEffect,
};

inline const char* to_string(RelationshipKind k) {
  switch (k) {
    case RelationshipKind::CooperationSameGoal: return "cooperation on same goal";
    case RelationshipKind::CooperationDifferentGoal: return "cooperation on different goals";
    case RelationshipKind::CompetitionSameGoal: return "competition on same goal";
    case RelationshipKind::CompetitionDifferentGoal: return "competition on different goals";
    case RelationshipKind::NoEffect: return "no effect";
  }
  return "?";
}

inline RelationshipKind classify(const ParamKey& key, double value, double epsilon_negligible) {
  if (std::abs(value) < epsilon_negligible) return RelationshipKind::NoEffect;
  const bool same = key.relation == Relation::SameInstance;
  if (value > 0.0) return same ? RelationshipKind::CooperationSameGoal : RelationshipKind::CooperationDifferentGoal;
  return same ? RelationshipKind::CompetitionSameGoal : RelationshipKind::CompetitionDifferentGoal;
}

struct RelationshipEntry {
  ParamKey key;
  double value = 0.0;
  RelationshipKind kind = RelationshipKind::NoEffect;
};

/// Classifies every influence slot of theta; self values are not relationships.
inline std::vector<RelationshipEntry> relationship_report(const Theta& theta, double epsilon_negligible) {
  std::vector<RelationshipEntry> out;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& key = param_key(i);
    if (key.self) continue;
    out.push_back({key, theta[i], classify(key, theta[i], epsilon_negligible)});
  }
  return out;
}

inline std::string format_report(const Theta& theta, double epsilon_negligible) {
  std::ostringstream os;
  os << "self values\n";
  for (const GoalType t : kGoalTypes) {
    os << "  " << to_string(t) << ": " << theta.self_value(t) << '\n';
  }
  os << "influences (own goal | other agent | other goal | relation)\n";
  for (const auto& e : relationship_report(theta, epsilon_negligible)) {
    os << "  " << e.key.name() << ": " << e.value << "  -> " << to_string(e.kind) << '\n';
  }
  return os.str();
}

}  // namespace intentmarl
