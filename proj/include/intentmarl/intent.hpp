#pragma once

#include <cmath>
#include <compare>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dtw.hpp"
#include "pathfinding.hpp"
#include "world.hpp"

namespace intentmarl {

struct AgentKey {
  AgentType type = AgentType::Robot;
  int id = 0;

  friend constexpr auto operator<=>(const AgentKey&, const AgentKey&) = default;
};

/// Probability distribution over one agent's candidate goals, sorted by goal.
struct Belief {
  AgentKey subject;
  std::vector<std::pair<GoalRef, double>> entries;

  double mass(GoalRef g) const {
    for (const auto& [goal, p] : entries) {
      if (goal == g) return p;
    }
    return 0.0;
  }
  double total() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.second;
    return s;
  }
};

enum class PriorMode { Uniform, QSoftmax };

struct PredictorConfig {
  double beta_temp = 1.0;  // inverse temperature of the Gibbs likelihood
  int window = 20;         // trailing observed cells used for matching
  PriorMode prior_mode = PriorMode::Uniform;
  double prior_temperature = 1.0;
};

inline void validate(const PredictorConfig& c) {
  if (!(c.beta_temp >= 0.0)) throw std::invalid_argument("beta_temp must be >= 0");
  if (c.window < 1) throw std::invalid_argument("window must be >= 1");
  if (!(c.prior_temperature > 0.0)) throw std::invalid_argument("prior_temperature must be > 0");
}

inline std::span<const Cell> trailing_window(std::span<const Cell> observed, int window) {
  const auto w = static_cast<std::size_t>(std::max(window, 1));
  return observed.size() > w ? observed.subspan(observed.size() - w) : observed;
}

/// Predicted trajectory toward `goal`, anchored at the first observed cell and
/// sampled at the agent's speed, truncated to the observed length. std::nullopt
/// when the goal is unreachable for this agent type.
inline std::optional<Trajectory> predict_trajectory(PathPlanner& planner, std::span<const Cell> observed, Cell goal,
                                                    AgentType type, int speed = 1) {
  if (observed.empty()) throw std::invalid_argument("predict_trajectory: empty observation");
  const auto path = planner.path(type, observed.front(), goal);
  if (!path) return std::nullopt;
  const std::size_t step = static_cast<std::size_t>(std::max(speed, 1));
  const std::size_t distinct = (path->size() - 1 + step - 1) / step + 1;
  const std::size_t n = std::min(observed.size(), distinct);
  Trajectory out;
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t) out.push_back((*path)[std::min(t * step, path->size() - 1)]);
  return out;
}

/// DTW distance between the trailing window and the prediction; +inf when unreachable.
inline double goal_distance(PathPlanner& planner, std::span<const Cell> observed, Cell goal, const PredictorConfig& config,
                            AgentType type, int speed = 1) {
  const auto window = trailing_window(observed, config.window);
  const auto predicted = predict_trajectory(planner, window, goal, type, speed);
  if (!predicted) return std::numeric_limits<double>::infinity();
  return dtw_distance(window, *predicted);
}

/// Unnormalized Gibbs weight exp(-beta_temp * d); 0 for unreachable goals.
inline double likelihood(PathPlanner& planner, std::span<const Cell> observed, Cell goal, const PredictorConfig& config,
                         AgentType type, int speed = 1) {
  const double d = goal_distance(planner, observed, goal, config, type, speed);
  if (std::isinf(d)) return 0.0;
  return std::exp(-config.beta_temp * d);
}

/// Normalized posterior p(g|h) proportional to prior(g) * exp(-beta_temp * d(g)).
/// Evaluated in log space so long trajectories cannot underflow every weight.
/// Falls back to the prior when no goal has positive weight.
inline Belief posterior_from_distances(AgentKey subject, std::span<const GoalRef> candidates,
                                       std::span<const double> distances, std::span<const double> prior,
                                       double beta_temp) {
  if (candidates.empty()) throw std::invalid_argument("posterior: empty candidate set");
  if (distances.size() != candidates.size() || prior.size() != candidates.size()) {
    throw std::invalid_argument("posterior: size mismatch");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(candidates.size(), kNegInf);
  double best = kNegInf;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (prior[i] > 0.0 && std::isfinite(distances[i])) {
      logw[i] = std::log(prior[i]) - beta_temp * distances[i];
      best = std::max(best, logw[i]);
    }
  }
  Belief b;
  b.subject = subject;
  b.entries.reserve(candidates.size());
  if (best == kNegInf) {
    for (std::size_t i = 0; i < candidates.size(); ++i) b.entries.emplace_back(candidates[i], prior[i]);
  } else {
    double z = 0.0;
    for (const double lw : logw) z += lw == kNegInf ? 0.0 : std::exp(lw - best);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      b.entries.emplace_back(candidates[i], logw[i] == kNegInf ? 0.0 : std::exp(logw[i] - best) / z);
    }
  }
  std::sort(b.entries.begin(), b.entries.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  return b;
}

inline Belief posterior(PathPlanner& planner, AgentKey subject, std::span<const Cell> observed,
                        std::span<const GoalRef> candidates, std::span<const Cell> goal_positions,
                        std::span<const double> prior, const PredictorConfig& config, int speed = 1) {
  if (candidates.empty()) throw std::invalid_argument("posterior: empty candidate set");
  std::vector<double> distances;
  distances.reserve(candidates.size());
  for (const Cell goal : goal_positions) distances.push_back(goal_distance(planner, observed, goal, config, subject.type, speed));
  return posterior_from_distances(subject, candidates, distances, prior, config.beta_temp);
}

/// Per-agent position slices of the team observation stream.
class ObservationHistory {
 public:
  explicit ObservationHistory(std::size_t cap = 64) : cap_(std::max<std::size_t>(cap, 1)) {}

  void push(const TeamObservation& obs) {
    step_ = obs.step;
    visible_.clear();
    for (const auto& r : obs.robots) append({AgentType::Robot, r.id}, r.position);
    for (const auto& h : obs.humans) {
      append({AgentType::Human, h.id}, h.position);
      visible_.push_back({AgentType::Human, h.id});
    }
    robots_.clear();
    for (const auto& r : obs.robots) robots_.push_back({AgentType::Robot, r.id});
    std::erase_if(tracks_, [&](const auto& kv) { return kv.second.last_step + kForgetAfter < step_; });
  }

  std::span<const Cell> trajectory(AgentKey agent) const {
    const auto it = tracks_.find(agent);
    if (it == tracks_.end()) return {};
    return it->second.cells;
  }

  /// Teammate robots (always) followed by humans in the latest observation.
  std::vector<AgentKey> known_agents() const {
    std::vector<AgentKey> out = robots_;
    out.insert(out.end(), visible_.begin(), visible_.end());
    return out;
  }
  int step() const { return step_; }

 private:
  static constexpr int kForgetAfter = 64;

  struct Track {
    Trajectory cells;
    int last_step = 0;
  };

  void append(AgentKey key, Cell c) {
    auto& t = tracks_[key];
    t.cells.push_back(c);
    t.last_step = step_;
    if (t.cells.size() > 2 * cap_) t.cells.erase(t.cells.begin(), t.cells.end() - static_cast<std::ptrdiff_t>(cap_));
  }

  std::size_t cap_;
  int step_ = 0;
  std::map<AgentKey, Track> tracks_;
  std::vector<AgentKey> robots_;
  std::vector<AgentKey> visible_;
};

using BeliefMap = std::map<AgentKey, Belief>;

/// Score used by the QSoftmax prior (the querying agent's own value of a goal).
using PriorScore = std::function<double(GoalRef)>;

inline std::vector<GoalRef> feasible_goals_for(const WorldState& world, AgentType type) {
  return type == AgentType::Robot ? world.robot_feasible_goals() : world.human_feasible_goals();
}

inline std::vector<double> make_prior(std::span<const GoalRef> goals, const PredictorConfig& config,
                                      const PriorScore& score) {
  std::vector<double> prior(goals.size(), 1.0 / static_cast<double>(goals.size()));
  if (config.prior_mode == PriorMode::QSoftmax && score) {
    std::vector<double> s(goals.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < goals.size(); ++i) {
      s[i] = score(goals[i]) / config.prior_temperature;
      best = std::max(best, s[i]);
    }
    double z = 0.0;
    for (auto& v : s) z += (v = std::exp(v - best));
    for (std::size_t i = 0; i < goals.size(); ++i) prior[i] = s[i] / z;
  }
  return prior;
}

/// Belief over every agent currently known to the team: teammate robots and
/// humans in view. Agents with fewer than two observed positions get the prior.
inline BeliefMap update_beliefs(const ObservationHistory& history, WorldState& world, const PredictorConfig& config,
                                const PriorScore& score = {}) {
  BeliefMap out;
  const auto robot_goals = world.robot_feasible_goals();
  const auto human_goals = world.human_feasible_goals();
  auto positions_of = [&](std::span<const GoalRef> goals) {
    std::vector<Cell> pos;
    pos.reserve(goals.size());
    for (const GoalRef g : goals) pos.push_back(*world.goal_position(g));
    return pos;
  };
  const auto robot_pos = positions_of(robot_goals);
  const auto human_pos = positions_of(human_goals);
  const auto robot_prior = make_prior(robot_goals, config, score);
  const auto human_prior = make_prior(human_goals, config, score);

  for (const AgentKey agent : history.known_agents()) {
    const bool robot = agent.type == AgentType::Robot;
    const auto& goals = robot ? robot_goals : human_goals;
    const auto& prior = robot ? robot_prior : human_prior;
    const auto traj = history.trajectory(agent);
    if (traj.size() < 2) {
      Belief b;
      b.subject = agent;
      for (std::size_t i = 0; i < goals.size(); ++i) b.entries.emplace_back(goals[i], prior[i]);
      std::sort(b.entries.begin(), b.entries.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      out.emplace(agent, std::move(b));
      continue;
    }
    const int speed = robot ? world.scene().robot_speed : world.scene().human_speed;
    out.emplace(agent, posterior(world.planner(), agent, traj, goals, robot ? robot_pos : human_pos, prior, config, speed));
  }
  return out;
}

/// Uniform beliefs over each known agent's feasible goals (intent-blind ablation).
inline BeliefMap uniform_beliefs(const ObservationHistory& history, const WorldState& world) {
  BeliefMap out;
  const auto robot_goals = world.robot_feasible_goals();
  const auto human_goals = world.human_feasible_goals();
  for (const AgentKey agent : history.known_agents()) {
    const auto& goals = agent.type == AgentType::Robot ? robot_goals : human_goals;
    Belief b;
    b.subject = agent;
    for (const GoalRef g : goals) b.entries.emplace_back(g, 1.0 / static_cast<double>(goals.size()));
    std::sort(b.entries.begin(), b.entries.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    out.emplace(agent, std::move(b));
  }
  return out;
}

}  // namespace intentmarl
