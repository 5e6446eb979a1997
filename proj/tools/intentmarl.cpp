// Command line front end: train, eval, transfer, compare, report, replay.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include <intentmarl/intentmarl.hpp>

using namespace intentmarl;

namespace {

ExperimentConfig config_or_default(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return load_config(path);
}

std::unique_ptr<std::ofstream> open_trace(const std::string& path) {
  if (path.empty()) return nullptr;
  auto out = std::make_unique<std::ofstream>(path);
  if (!*out) throw TraceError("cannot open trace file '" + path + "'");
  return out;
}

void print_metrics(const std::string& label, const Metrics& m) {
  std::cout << label << ": n_e=" << m.n_e << " n_o=" << m.n_o << " capture_rate=" << std::fixed << std::setprecision(4)
            << m.capture_rate() << " distinct_building_fraction=" << m.distinct_building_fraction()
            << " steps=" << m.steps << (m.partial ? " (step budget exhausted)" : "") << '\n';
}

std::string checkpoint_name(PolicyKind kind, std::uint64_t seed, long iterations) {
  return std::string("theta_") + to_string(kind) + "_seed" + std::to_string(seed) + "_it" + std::to_string(iterations) +
         ".json";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intent-aware multi-robot surveillance: training and evaluation"};
  app.require_subcommand(1);

  // train
  std::string train_config, checkpoint_dir = ".", train_policy = "intent_aware", train_trace;
  std::uint64_t train_seed = 1;
  auto* train_cmd = app.add_subcommand("train", "Train theta on the training scene");
  train_cmd->add_option("--config", train_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", train_seed, "Run seed")->required();
  train_cmd->add_option("--checkpoint-dir", checkpoint_dir, "Directory for theta checkpoints");
  train_cmd->add_option("--policy", train_policy, "intent_aware or intent_blind");
  train_cmd->add_option("--trace", train_trace, "Write a line-delimited trace of the run");

  // eval
  std::string eval_theta, eval_scene, eval_config, eval_policy = "intent_aware", eval_trace;
  std::uint64_t eval_seed = 1;
  long eval_events = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy with frozen theta");
  eval_cmd->add_option("--theta", eval_theta, "Theta checkpoint (required for learned policies)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--scene", eval_scene, "Scene file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--seed", eval_seed, "Run seed")->required();
  eval_cmd->add_option("--policy", eval_policy, "intent_aware, intent_blind, greedy or random");
  eval_cmd->add_option("--config", eval_config, "Experiment config supplying learner and intent settings");
  eval_cmd->add_option("--events", eval_events, "Building entries to evaluate (default from config)");
  eval_cmd->add_option("--trace", eval_trace, "Write a line-delimited trace of the run");

  // transfer
  std::string transfer_theta, transfer_scene, transfer_config;
  auto* transfer_cmd = app.add_subcommand("transfer", "Evaluate a trained theta on another scene over all config seeds");
  transfer_cmd->add_option("--theta", transfer_theta, "Theta checkpoint")->required()->check(CLI::ExistingFile);
  transfer_cmd->add_option("--scene", transfer_scene, "Target scene")->required()->check(CLI::ExistingFile);
  transfer_cmd->add_option("--config", transfer_config, "Experiment config supplying seeds and settings");

  // compare
  std::string compare_config, compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "Train and evaluate every configured policy kind");
  compare_cmd->add_option("--config", compare_config, "Experiment config")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--out", compare_out, "Metrics CSV")->required();

  // report
  std::string report_theta;
  double report_eps = 0.01;
  auto* report_cmd = app.add_subcommand("report", "Classify the learned relationships in a theta checkpoint");
  report_cmd->add_option("--theta", report_theta, "Theta checkpoint")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--epsilon", report_eps, "Magnitude below which an influence counts as no effect");

  // replay
  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "Recompute metrics from a trace");
  replay_cmd->add_option("--trace", replay_path, "Trace file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const auto cfg = load_config(train_config);
      const auto kind = parse_policy_kind(train_policy);
      auto scene = std::make_shared<const Scene>(load_scene_file(cfg.scene_train));
      auto trace = open_trace(train_trace);
      const auto result = train(cfg, scene, train_seed, kind, trace.get());
      std::filesystem::create_directories(checkpoint_dir);
      for (const auto& c : result.checkpoints) {
        const auto path = std::filesystem::path(checkpoint_dir) / checkpoint_name(kind, train_seed, c.iterations);
        save_checkpoint(c, path.string());
        std::cout << "checkpoint " << path.string() << '\n';
      }
      const auto final_path = std::filesystem::path(checkpoint_dir) /
                              (std::string("theta_") + to_string(kind) + "_seed" + std::to_string(train_seed) + "_final.json");
      save_checkpoint(result.final, final_path.string());
      std::cout << "final " << final_path.string() << " (iterations=" << result.final.iterations
                << ", r_bar=" << result.final.r_bar << ")\n";
      print_metrics("training", result.metrics);
      if (result.diverged) {
        std::cerr << "error: " << result.divergence_message << '\n';
        return 2;
      }
      return 0;
    }

    if (*eval_cmd) {
      auto cfg = config_or_default(eval_config);
      if (eval_events > 0) cfg.eval_entry_events = eval_events;
      const auto kind = parse_policy_kind(eval_policy);
      std::optional<ThetaCheckpoint> theta;
      if (!eval_theta.empty()) theta = load_checkpoint(eval_theta);
      if (uses_learner(kind) && !theta) {
        std::cerr << "error: --theta is required for policy " << to_string(kind) << '\n';
        return 1;
      }
      auto scene = std::make_shared<const Scene>(load_scene_file(eval_scene));
      auto trace = open_trace(eval_trace);
      print_metrics(to_string(kind), evaluate(cfg, scene, kind, theta, eval_seed, trace.get()));
      return 0;
    }

    if (*transfer_cmd) {
      const auto cfg = config_or_default(transfer_config);
      const auto theta = load_checkpoint(transfer_theta);
      auto scene = std::make_shared<const Scene>(load_scene_file(transfer_scene));
      std::vector<double> rates;
      for (const auto seed : cfg.seeds) {
        const auto m = transfer(cfg, theta, scene, seed);
        print_metrics("seed " + std::to_string(seed), m);
        rates.push_back(m.capture_rate());
      }
      std::cout << "mean capture_rate=" << std::fixed << std::setprecision(4) << mean(rates) << " +- " << stddev(rates)
                << '\n';
      return 0;
    }

    if (*compare_cmd) {
      const auto cfg = load_config(compare_config);
      const auto table = compare(cfg);
      std::ofstream out(compare_out);
      if (!out) throw std::runtime_error("cannot write '" + compare_out + "'");
      write_csv(table, out);
      print_table(table, cfg.policies, std::cout);
      for (const auto kind : cfg.policies) {
        if (!uses_learner(kind)) continue;
        std::cout << '\n' << to_string(kind) << " (seed-mean theta)\n"
                  << format_report(mean_theta(table, kind), cfg.epsilon_negligible);
      }
      std::cout << "\nwrote " << compare_out << '\n';
      return 0;
    }

    if (*report_cmd) {
      const auto c = load_checkpoint(report_theta);
      std::cout << "iterations: " << c.iterations << "\nr_bar: " << c.r_bar << '\n' << format_report(c.theta, report_eps);
      return 0;
    }

    if (*replay_cmd) {
      std::ifstream in(replay_path);
      if (!in) throw TraceError("cannot open trace '" + replay_path + "'");
      const auto s = replay_trace(in);
      std::cout << "replay: n_e=" << s.n_e << " n_o=" << s.n_o << " capture_rate=" << std::fixed << std::setprecision(4)
                << s.capture_rate() << " distinct_building_fraction=" << s.distinct_building_fraction()
                << " steps=" << s.steps << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
