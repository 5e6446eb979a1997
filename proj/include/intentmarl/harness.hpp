#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "intent.hpp"
#include "learner.hpp"
#include "policies.hpp"
#include "scene.hpp"
#include "theta.hpp"
#include "trace.hpp"
#include "world.hpp"

namespace intentmarl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InitMode { Zero, Uniform };

struct LearnerConfig {
  double alpha = 0.05;
  double beta_lr = 0.01;
  double epsilon_start = 0.1;
  double epsilon_end = 0.01;
  double f = 5.0;
  std::optional<double> keep_prob;
  InitMode init = InitMode::Zero;
};

struct ExperimentConfig {
  std::string scene_train;
  std::string scene_test;
  int n_robots = 3;
  std::vector<PolicyKind> policies = {PolicyKind::IntentAware, PolicyKind::Greedy, PolicyKind::Random};
  LearnerConfig learner;
  PredictorConfig intent;
  long training_reward_iterations = 500;
  std::vector<long> checkpoints = {100, 200, 300, 500, 1000};
  long eval_entry_events = 200;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int baseline_period = 20;
  long step_budget = 1'000'000;
  double epsilon_negligible = 0.01;
};

inline void validate(const ExperimentConfig& c) {
  if (c.n_robots < 0) throw ConfigError("config 'n_robots' must be >= 0");
  if (c.training_reward_iterations < 0) throw ConfigError("config 'training_reward_iterations' must be >= 0");
  if (c.eval_entry_events < 1) throw ConfigError("config 'eval_entry_events' must be >= 1");
  if (c.seeds.empty()) throw ConfigError("config 'seeds' must not be empty");
  if (c.baseline_period < 1) throw ConfigError("config 'baseline_period' must be >= 1");
  if (c.step_budget < 1) throw ConfigError("config 'step_budget' must be >= 1");
  if (c.policies.empty()) throw ConfigError("config 'policies' must not be empty");
  const auto& l = c.learner;
  if (!(l.alpha >= 0.0) || !(l.beta_lr >= 0.0)) throw ConfigError("config learner rates must be >= 0");
  if (!(l.epsilon_start >= 0.0 && l.epsilon_start <= 1.0) || !(l.epsilon_end >= 0.0 && l.epsilon_end <= 1.0)) {
    throw ConfigError("config learner epsilon must lie in [0, 1]");
  }
  if (!(l.f >= 1.0)) throw ConfigError("config learner 'f' must be >= 1");
  if (l.keep_prob && !(*l.keep_prob >= 0.0 && *l.keep_prob <= 1.0)) throw ConfigError("config learner 'keep_prob' must lie in [0, 1]");
  try {
    validate(c.intent);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config intent: ") + e.what());
  }
}

inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (base_dir / path).lexically_normal().string();
  };
  try {
    c.scene_train = resolve(j.value("scene_train", std::string{}));
    c.scene_test = resolve(j.value("scene_test", std::string{}));
    c.n_robots = j.value("n_robots", c.n_robots);
    if (j.contains("policies")) {
      c.policies.clear();
      for (const auto& p : j["policies"]) c.policies.push_back(parse_policy_kind(p.get<std::string>()));
    }
    if (j.contains("learner")) {
      const auto& l = j["learner"];
      c.learner.alpha = l.value("alpha", c.learner.alpha);
      c.learner.beta_lr = l.value("beta_lr", c.learner.beta_lr);
      c.learner.epsilon_start = l.value("epsilon_start", c.learner.epsilon_start);
      c.learner.epsilon_end = l.value("epsilon_end", c.learner.epsilon_end);
      c.learner.f = l.value("f", c.learner.f);
      if (l.contains("keep_prob") && !l["keep_prob"].is_null()) c.learner.keep_prob = l["keep_prob"].get<double>();
      const auto init = l.value("init", std::string("zero"));
      if (init == "zero") c.learner.init = InitMode::Zero;
      else if (init == "uniform") c.learner.init = InitMode::Uniform;
      else throw ConfigError("config learner 'init' must be 'zero' or 'uniform'");
    }
    if (j.contains("intent")) {
      const auto& i = j["intent"];
      c.intent.beta_temp = i.value("beta_temp", c.intent.beta_temp);
      c.intent.window = i.value("window", c.intent.window);
      const auto mode = i.value("prior_mode", std::string("uniform"));
      if (mode == "uniform") c.intent.prior_mode = PriorMode::Uniform;
      else if (mode == "q_softmax") c.intent.prior_mode = PriorMode::QSoftmax;
      else throw ConfigError("config intent 'prior_mode' must be 'uniform' or 'q_softmax'");
      c.intent.prior_temperature = i.value("prior_temperature", c.intent.prior_temperature);
    }
    c.training_reward_iterations = j.value("training_reward_iterations", c.training_reward_iterations);
    if (j.contains("checkpoints")) c.checkpoints = j["checkpoints"].get<std::vector<long>>();
    c.eval_entry_events = j.value("eval_entry_events", c.eval_entry_events);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    c.baseline_period = j.value("baseline_period", c.baseline_period);
    c.step_budget = j.value("step_budget", c.step_budget);
    c.epsilon_negligible = j.value("epsilon_negligible", c.epsilon_negligible);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return config_from_json(j, std::filesystem::path(path).parent_path());
}

struct Metrics {
  long n_e = 0;
  long n_o = 0;
  long steps = 0;
  long distinct_steps = 0;
  bool partial = false;  // step budget exhausted before reaching the target
  std::vector<double> r_bar_trace;

  double capture_rate() const { return n_e > 0 ? static_cast<double>(n_o) / static_cast<double>(n_e) : 0.0; }
  double distinct_building_fraction() const {
    return steps > 0 ? static_cast<double>(distinct_steps) / static_cast<double>(steps) : 0.0;
  }
};

/// Independent streams for world randomness and for decisions, derived from one seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x1A7E57u};
  return Rng(seq);
}

enum RngStream : std::uint64_t {
  kTrainWorld = 1,
  kTrainPolicy = 2,
  kEvalWorld = 3,
  kEvalPolicy = 4,
  kInit = 5,
};

/// One running simulation: world, observation history, and team decisions.
class Simulation {
 public:
  Simulation(std::shared_ptr<const Scene> scene, int n_robots, PolicyKind kind, const PredictorConfig& intent,
             int baseline_period, Rng world_rng, Rng policy_rng)
      : world_(std::move(scene), n_robots),
        history_(static_cast<std::size_t>(std::max(intent.window, 1)) * 2),
        controller_(kind, n_robots, intent, baseline_period),
        world_rng_(std::move(world_rng)),
        policy_rng_(std::move(policy_rng)) {}

  /// Observes the initial state and takes the first decisions.
  void start(LearnerState* learner, LearnMode mode, TraceWriter* trace) {
    const auto obs = world_.observe();
    history_.push(obs);
    decide(obs, {}, learner, mode, trace);
  }

  /// Advances one step and re-decides; returns the step's reward events.
  std::vector<RewardEvent> tick(LearnerState* learner, LearnMode mode, TraceWriter* trace) {
    auto result = world_.step(goals_, world_rng_);
    history_.push(result.observation);
    last_distinct_ = pursuing_distinct_buildings();
    decide(result.observation, result.events, learner, mode, trace);
    return std::move(result.events);
  }

  bool last_step_distinct() const { return last_distinct_; }
  const WorldState& world() const { return world_; }

 private:
  void decide(const TeamObservation& obs, std::span<const RewardEvent> events, LearnerState* learner, LearnMode mode,
              TraceWriter* trace) {
    std::vector<DecisionRecord> records;
    goals_ = controller_.decide(world_, history_, obs, events, learner, mode, policy_rng_, trace ? &records : nullptr);
    if (trace && obs.step > 0) trace->step(world_, obs, events, records);
  }

  bool pursuing_distinct_buildings() const {
    const auto& robots = world_.robots();
    if (robots.empty()) return false;
    std::set<int> seen;
    for (const auto& r : robots) {
      if (r.goal.kind != GoalKind::Building || !seen.insert(r.goal.index).second) return false;
    }
    return true;
  }

  WorldState world_;
  ObservationHistory history_;
  TeamController controller_;
  Rng world_rng_;
  Rng policy_rng_;
  std::vector<GoalRef> goals_;
  bool last_distinct_ = false;
};

inline LearnerState initial_learner(const LearnerConfig& c, std::uint64_t seed) {
  LearnerState s;
  s.alpha = c.alpha;
  s.beta_lr = c.beta_lr;
  s.epsilon = c.epsilon_start;
  s.f = c.f;
  s.keep_prob = c.keep_prob;
  if (c.init == InitMode::Uniform) {
    Rng rng = make_rng(seed, kInit);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (std::size_t i = 0; i < kNumParams; ++i) s.theta[i] = u(rng);
  }
  return s;
}

struct TrainResult {
  ThetaCheckpoint final;
  std::vector<ThetaCheckpoint> checkpoints;  // in milestone order, each with its iteration count
  Metrics metrics;
  bool diverged = false;
  std::string divergence_message;
};

/// Runs the continuing task until `training_reward_iterations` steps with a
/// reward event have occurred. Snapshots theta at each configured milestone.
inline TrainResult train(const ExperimentConfig& config, std::shared_ptr<const Scene> scene, std::uint64_t seed,
                         PolicyKind kind = PolicyKind::IntentAware, std::ostream* trace_out = nullptr) {
  if (!uses_learner(kind)) throw std::invalid_argument("train: policy kind does not learn");
  LearnerState learner = initial_learner(config.learner, seed);
  TrainResult out;
  const long target = config.training_reward_iterations;
  std::vector<long> milestones;
  for (const long m : config.checkpoints) {
    if (m <= target) milestones.push_back(m);
  }
  std::sort(milestones.begin(), milestones.end());
  milestones.erase(std::unique(milestones.begin(), milestones.end()), milestones.end());

  auto snapshot = [&](long it) { return ThetaCheckpoint{learner.theta, learner.r_bar, it}; };
  std::optional<TraceWriter> trace;
  if (trace_out) {
    trace.emplace(*trace_out);
    trace->header(*scene, kind, LearnMode::Train, seed, config.n_robots);
  }
  if (target == 0) {
    out.final = snapshot(0);
    return out;
  }
  Simulation sim(scene, config.n_robots, kind, config.intent, config.baseline_period, make_rng(seed, kTrainWorld),
                 make_rng(seed, kTrainPolicy));
  long iterations = 0;
  std::size_t next_milestone = 0;
  try {
    sim.start(&learner, LearnMode::Train, trace ? &*trace : nullptr);
    while (iterations < target && out.metrics.steps < config.step_budget) {
      const double progress = static_cast<double>(iterations) / static_cast<double>(target);
      learner.epsilon = config.learner.epsilon_start + (config.learner.epsilon_end - config.learner.epsilon_start) * progress;
      const auto events = sim.tick(&learner, LearnMode::Train, trace ? &*trace : nullptr);
      ++out.metrics.steps;
      if (sim.last_step_distinct()) ++out.metrics.distinct_steps;
      if (events.empty()) continue;
      ++iterations;
      for (const auto& e : events) {
        ++out.metrics.n_e;
        if (!e.observers.empty()) ++out.metrics.n_o;
      }
      out.metrics.r_bar_trace.push_back(learner.r_bar);
      while (next_milestone < milestones.size() && milestones[next_milestone] == iterations) {
        out.checkpoints.push_back(snapshot(iterations));
        ++next_milestone;
      }
    }
  } catch (const DivergenceError& e) {
    out.diverged = true;
    out.divergence_message = e.what();
  }
  out.metrics.partial = iterations < target;
  out.final = snapshot(iterations);
  return out;
}

/// Frozen-policy evaluation (epsilon = 0, no updates) until `entry_events`
/// building entries have occurred or the step budget runs out.
inline Metrics evaluate(const ExperimentConfig& config, std::shared_ptr<const Scene> scene, PolicyKind kind,
                        const std::optional<ThetaCheckpoint>& theta, std::uint64_t seed,
                        std::ostream* trace_out = nullptr) {
  std::optional<LearnerState> learner;
  if (uses_learner(kind)) {
    if (!theta) throw std::invalid_argument("evaluate: utility-based policy needs a theta checkpoint");
    learner = initial_learner(config.learner, seed);
    learner->theta = theta->theta;
    learner->r_bar = theta->r_bar;
    learner->epsilon = 0.0;
  }
  std::optional<TraceWriter> trace;
  if (trace_out) {
    trace.emplace(*trace_out);
    trace->header(*scene, kind, LearnMode::Evaluate, seed, config.n_robots);
  }
  Metrics m;
  Simulation sim(scene, config.n_robots, kind, config.intent, config.baseline_period, make_rng(seed, kEvalWorld),
                 make_rng(seed, kEvalPolicy));
  LearnerState* lp = learner ? &*learner : nullptr;
  sim.start(lp, LearnMode::Evaluate, trace ? &*trace : nullptr);
  while (m.n_e < config.eval_entry_events) {
    if (m.steps >= config.step_budget) {
      m.partial = true;
      break;
    }
    const auto events = sim.tick(lp, LearnMode::Evaluate, trace ? &*trace : nullptr);
    ++m.steps;
    if (sim.last_step_distinct()) ++m.distinct_steps;
    for (const auto& e : events) {
      ++m.n_e;
      if (!e.observers.empty()) ++m.n_o;
    }
  }
  return m;
}

/// Evaluates a theta learned elsewhere on another scene. Typed slots make the
/// parameters independent of how many goals or agents the new scene has.
inline Metrics transfer(const ExperimentConfig& config, const ThetaCheckpoint& theta, std::shared_ptr<const Scene> test_scene,
                        std::uint64_t seed, PolicyKind kind = PolicyKind::IntentAware) {
  return evaluate(config, std::move(test_scene), kind, theta, seed);
}

/// Runs `jobs` on up to hardware_concurrency threads; results keep job order.
template <typename Result>
std::vector<Result> run_parallel(std::vector<std::function<Result()>> jobs) {
  std::vector<Result> results(jobs.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), jobs.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        try {
          results[i] = jobs[i]();
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

struct ComparisonRow {
  PolicyKind policy = PolicyKind::Random;
  std::uint64_t seed = 0;
  long checkpoint = 0;
  std::string scene;  // "train" or "test"
  Metrics metrics;
};

struct ComparisonTable {
  std::vector<long> columns;  // checkpoint iterations evaluated on the training scene
  std::vector<ComparisonRow> rows;
  std::map<std::pair<PolicyKind, std::uint64_t>, ThetaCheckpoint> final_theta;

  std::vector<double> rates(PolicyKind kind, const std::string& scene, long checkpoint) const {
    std::vector<double> out;
    for (const auto& r : rows) {
      if (r.policy == kind && r.scene == scene && (scene == "test" || r.checkpoint == checkpoint)) {
        out.push_back(r.metrics.capture_rate());
      }
    }
    return out;
  }
  std::vector<double> distinct_fractions(PolicyKind kind, const std::string& scene, long checkpoint) const {
    std::vector<double> out;
    for (const auto& r : rows) {
      if (r.policy == kind && r.scene == scene && (scene == "test" || r.checkpoint == checkpoint)) {
        out.push_back(r.metrics.distinct_building_fraction());
      }
    }
    return out;
  }
};

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Per policy and seed: learners train and are evaluated at every milestone;
/// baselines are evaluated once and repeated across the milestone columns.
/// Every policy is also evaluated on the test scene (learners with final theta).
inline ComparisonTable compare(const ExperimentConfig& config) {
  if (config.policies.size() < 2) throw ConfigError("compare needs at least two policy kinds");
  auto train_scene = std::make_shared<const Scene>(load_scene_file(config.scene_train));
  std::shared_ptr<const Scene> test_scene;
  if (!config.scene_test.empty()) test_scene = std::make_shared<const Scene>(load_scene_file(config.scene_test));

  ComparisonTable table;
  for (const long m : config.checkpoints) {
    if (m <= config.training_reward_iterations) table.columns.push_back(m);
  }
  std::sort(table.columns.begin(), table.columns.end());
  table.columns.erase(std::unique(table.columns.begin(), table.columns.end()), table.columns.end());
  if (table.columns.empty() || table.columns.back() != config.training_reward_iterations) {
    table.columns.push_back(config.training_reward_iterations);
  }

  struct JobOutput {
    std::vector<ComparisonRow> rows;
    std::optional<ThetaCheckpoint> final_theta;
  };
  std::vector<std::function<JobOutput()>> jobs;
  for (const PolicyKind kind : config.policies) {
    for (const auto seed : config.seeds) {
      jobs.push_back([&, kind, seed]() {
        JobOutput out;
        if (uses_learner(kind)) {
          auto cfg = config;
          cfg.checkpoints = table.columns;
          const auto trained = train(cfg, train_scene, seed, kind);
          if (trained.diverged) throw DivergenceError("seed " + std::to_string(seed) + ": " + trained.divergence_message);
          for (const long col : table.columns) {
            const auto it = std::find_if(trained.checkpoints.begin(), trained.checkpoints.end(),
                                         [col](const auto& c) { return c.iterations == col; });
            const ThetaCheckpoint& ck = it != trained.checkpoints.end() ? *it : trained.final;
            out.rows.push_back({kind, seed, col, "train", evaluate(config, train_scene, kind, ck, seed)});
          }
          out.final_theta = trained.final;
          if (test_scene) {
            out.rows.push_back({kind, seed, trained.final.iterations, "test",
                                transfer(config, trained.final, test_scene, seed, kind)});
          }
        } else {
          const auto m = evaluate(config, train_scene, kind, std::nullopt, seed);
          for (const long col : table.columns) out.rows.push_back({kind, seed, col, "train", m});
          if (test_scene) {
            out.rows.push_back({kind, seed, config.training_reward_iterations, "test",
                                evaluate(config, test_scene, kind, std::nullopt, seed)});
          }
        }
        return out;
      });
    }
  }
  auto outputs = run_parallel<JobOutput>(std::move(jobs));
  std::size_t k = 0;
  for (const PolicyKind kind : config.policies) {
    for (const auto seed : config.seeds) {
      auto& o = outputs[k++];
      for (auto& r : o.rows) table.rows.push_back(std::move(r));
      if (o.final_theta) table.final_theta.emplace(std::make_pair(kind, seed), *o.final_theta);
    }
  }
  return table;
}

/// Slotwise mean of the final theta over all seeds of one policy kind.
inline Theta mean_theta(const ComparisonTable& table, PolicyKind kind) {
  Theta out;
  int n = 0;
  for (const auto& [key, ck] : table.final_theta) {
    if (key.first != kind) continue;
    for (std::size_t i = 0; i < kNumParams; ++i) out[i] += ck.theta[i];
    ++n;
  }
  if (n > 0) {
    for (auto& v : out.values) v /= n;
  }
  return out;
}

inline void write_csv(const ComparisonTable& table, std::ostream& os) {
  os << "policy,seed,checkpoint,scene,n_e,n_o,capture_rate,distinct_building_fraction\n";
  for (const auto& r : table.rows) {
    os << to_string(r.policy) << ',' << r.seed << ',' << r.checkpoint << ',' << r.scene << ',' << r.metrics.n_e << ','
       << r.metrics.n_o << ',' << std::setprecision(6) << r.metrics.capture_rate() << ','
       << r.metrics.distinct_building_fraction() << '\n';
  }
}

/// Console layout: one row per policy, one column per training milestone plus the test scene.
inline void print_table(const ComparisonTable& table, const std::vector<PolicyKind>& policies, std::ostream& os) {
  os << std::left << std::setw(14) << "iterations";
  for (const long c : table.columns) os << std::setw(16) << c;
  os << std::setw(16) << "test scene" << '\n';
  for (const PolicyKind kind : policies) {
    os << std::setw(14) << to_string(kind);
    auto cell = [&](const std::vector<double>& v) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(1) << 100.0 * mean(v) << " +- " << 100.0 * stddev(v);
      os << std::setw(16) << s.str();
    };
    for (const long c : table.columns) cell(table.rates(kind, "train", c));
    const auto test = table.rates(kind, "test", 0);
    if (test.empty()) os << std::setw(16) << "-";
    else cell(test);
    os << '\n';
  }
}

}  // namespace intentmarl
