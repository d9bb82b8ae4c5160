#pragma once

#include <string>

#include "mmloco/support/config.hpp"
#include "mmloco/trainer/ppo.hpp"

namespace mmloco::trainer {

// Everything a run needs, parsed from the sectioned key = value config file.
struct TrainerConfig {
  int iterations = 300;
  int checkpoint_every = 50;
  std::uint64_t seed = 1;

  PPOConfig ppo;
  ModelConfig model;
  terrainsim::EnvParams env;
  terrainsim::CommandRange commands;
  terrainsim::CommandCurriculumConfig cmd_curriculum;
  objectives::BetaSchedulerState beta;
  objectives::ContrastiveConfig contrastive;
  std::size_t returns_window = 100;
};

// Parses and validates; unknown keys are an error so config typos surface.
TrainerConfig load_trainer_config(const ConfigFile& file);
TrainerConfig load_trainer_config_file(const std::string& path);

// Asymmetric actor-critic PPO driver: collect, GAE, update, curricula,
// annealing, metrics, checkpoints.
class Trainer {
 public:
  Trainer(TrainerConfig cfg, std::uint64_t seed, const std::string& out_dir);

  // Runs `n` iterations (config count when n < 0). Returns the last report.
  LossReport run(int n = -1);

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  long iteration() const { return iteration_; }
  double last_mean_lin_tracking() const { return last_lin_tracking_; }
  double mean_terrain_level() const;
  ModelSet& models() { return models_; }
  std::vector<terrainsim::Environment>& envs() { return envs_; }
  const TrainerConfig& config() const { return cfg_; }
  const objectives::BetaSchedulerState& beta() const { return beta_; }
  double current_p_boot() const { return p_boot_; }
  const LossReport& last_report() const { return last_report_; }
  const std::string& metrics_path() const { return metrics_path_; }

 private:
  void iterate();
  void write_metrics_header();
  void append_metrics_row(const RolloutBatch& b, const LossReport& r);

  TrainerConfig cfg_;
  std::string out_dir_;
  std::string metrics_path_;

  RngStream init_rng_;
  RngStream collect_rng_;
  RngStream update_rng_;

  ModelSet models_;
  std::vector<numerics::AdamState> adam_;
  std::vector<terrainsim::Environment> envs_;
  objectives::BetaSchedulerState beta_;
  objectives::ReturnsWindow returns_;
  terrainsim::CommandRange command_range_;
  terrainsim::RewardWeights base_weights_;

  long iteration_ = 0;
  long env_steps_ = 0;
  double p_boot_ = 0.0;
  double last_lin_tracking_ = 0.0;
  LossReport last_report_;
};

// CSV cell formatting used by every emitted artifact (bit-stable round trip).
std::string format_g17(double v);

}  // namespace mmloco::trainer
