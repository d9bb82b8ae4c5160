#include "mmloco/trainer/trainer.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mmloco::trainer {

using namespace mmloco::numerics;
using namespace mmloco::objectives;
using namespace mmloco::terrainsim;

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

TrainerConfig load_trainer_config(const ConfigFile& f) {
  TrainerConfig c;
  c.iterations = f.get_int("run", "iterations", c.iterations);
  c.checkpoint_every = f.get_int("run", "checkpoint_every", c.checkpoint_every);
  c.seed = static_cast<std::uint64_t>(f.get_int("run", "seed", 1));

  c.ppo.num_envs = f.get_int("ppo", "envs", c.ppo.num_envs);
  c.ppo.steps_per_iteration = f.get_int("ppo", "steps", c.ppo.steps_per_iteration);
  c.ppo.epochs = f.get_int("ppo", "epochs", c.ppo.epochs);
  c.ppo.minibatches = f.get_int("ppo", "minibatches", c.ppo.minibatches);
  c.ppo.clip_ratio = f.get_double("ppo", "clip", c.ppo.clip_ratio);
  c.ppo.gamma = f.get_double("ppo", "gamma", c.ppo.gamma);
  c.ppo.gae_lambda = f.get_double("ppo", "gae_lambda", c.ppo.gae_lambda);
  c.ppo.learning_rate = f.get_double("ppo", "learning_rate", c.ppo.learning_rate);
  c.ppo.entropy_coef = f.get_double("ppo", "entropy_coef", c.ppo.entropy_coef);
  c.ppo.value_coef = f.get_double("ppo", "value_coef", c.ppo.value_coef);
  c.ppo.grad_clip = f.get_double("ppo", "grad_clip", c.ppo.grad_clip);
  c.ppo.versatility_scale = f.get_double("ppo", "versatility_scale", c.ppo.versatility_scale);
  c.ppo.lambda_e = f.get_double("ppo", "lambda_e", c.ppo.lambda_e);
  c.ppo.velocity_tracking_scale =
      f.get_double("ppo", "velocity_tracking_scale", c.ppo.velocity_tracking_scale);
  c.ppo.aux_scale = f.get_double("ppo", "aux_scale", c.ppo.aux_scale);

  EncoderConfig& e = c.model.enc;
  e.mixer_channels = static_cast<std::size_t>(f.get_int("encoder", "mixer_channels", 128));
  e.mixer_blocks = static_cast<std::size_t>(f.get_int("encoder", "mixer_blocks", 2));
  e.token_hidden = static_cast<std::size_t>(f.get_int("encoder", "token_hidden", 32));
  e.point_hidden = static_cast<std::size_t>(f.get_int("encoder", "point_hidden", 64));
  e.point_features = static_cast<std::size_t>(f.get_int("encoder", "point_features", 128));
  e.fuse_hidden = static_cast<std::size_t>(f.get_int("encoder", "fuse_hidden", 128));
  e.decoder_hidden = static_cast<std::size_t>(f.get_int("encoder", "decoder_hidden", 128));
  e.max_points = static_cast<std::size_t>(f.get_int("encoder", "max_points", 128));
  auto to_sizes = [](const std::vector<double>& v) {
    std::vector<std::size_t> out;
    for (double d : v) out.push_back(static_cast<std::size_t>(d));
    return out;
  };
  c.model.actor_hidden = to_sizes(f.get_double_list("encoder", "actor_hidden", {128, 128}));
  c.model.critic_hidden = to_sizes(f.get_double_list("encoder", "critic_hidden", {256, 128}));

  auto kinds = f.get_list("env", "kinds", {"rough"});
  c.env.kinds.clear();
  for (const auto& k : kinds) c.env.kinds.push_back(terrain_kind_from_string(k));
  c.env.initial_level = f.get_int("env", "initial_level", 0);
  c.env.episode_steps = f.get_int("env", "episode_steps", 1000);
  c.env.obs_noise = f.get_bool("env", "obs_noise", true);
  c.env.extero_perturb = f.get_bool("env", "extero_perturb", true);
  c.env.randomize = f.get_bool("env", "randomize", true);
  c.env.curriculum = f.get_bool("env", "curriculum", true);
  c.env.robot.action_scale = f.get_double("env", "action_scale", c.env.robot.action_scale);
  c.env.robot.relax_tau = f.get_double("env", "relax_tau", c.env.robot.relax_tau);

  c.commands.vx_lo = f.get_double("commands", "vx_lo", c.commands.vx_lo);
  c.commands.vx_hi = f.get_double("commands", "vx_hi", c.commands.vx_hi);
  c.commands.vy_abs = f.get_double("commands", "vy_abs", c.commands.vy_abs);
  c.commands.wz_abs = f.get_double("commands", "wz_abs", c.commands.wz_abs);
  c.cmd_curriculum.threshold = f.get_double("commands", "threshold", 0.9);
  c.cmd_curriculum.widen_step = f.get_double("commands", "widen_step", 0.25);
  c.cmd_curriculum.vx_cap = f.get_double("commands", "vx_cap", 2.0);

  c.beta.beta = f.get_double("objectives", "beta0", 5.0);
  c.beta.beta_min = f.get_double("objectives", "beta_min", 0.5);
  c.beta.beta_max = f.get_double("objectives", "beta_max", 10.0);
  c.beta.delta = f.get_double("objectives", "delta", 0.1);
  c.beta.tau = f.get_double("objectives", "tau", 0.05);
  c.contrastive.margin = f.get_double("objectives", "contrastive_margin", 1.0);
  c.contrastive.lambda = f.get_double("objectives", "contrastive_lambda", 0.5);
  c.returns_window = static_cast<std::size_t>(f.get_int("objectives", "returns_window", 100));

  auto unused = f.unused_keys();
  if (!unused.empty()) {
    std::string msg = "config has unknown keys:";
    for (const auto& k : unused) msg += " " + k;
    throw std::runtime_error(msg);
  }
  if (c.ppo.gamma <= 0.0 || c.ppo.gamma >= 1.0)
    throw std::runtime_error("config: gamma must be in (0,1)");
  if (c.ppo.num_envs < 1 || c.ppo.steps_per_iteration < 1)
    throw std::runtime_error("config: envs and steps must be positive");
  return c;
}

TrainerConfig load_trainer_config_file(const std::string& path) {
  return load_trainer_config(ConfigFile::parse_file(path));
}

namespace {

RngStream model_rng(std::uint64_t seed) { return RngStream::keyed({seed, 0x6d6f64656cULL}); }

}  // namespace

Trainer::Trainer(TrainerConfig cfg, std::uint64_t seed, const std::string& out_dir)
    : cfg_(std::move(cfg)),
      out_dir_(out_dir),
      init_rng_(model_rng(seed)),
      collect_rng_(RngStream::keyed({seed, 0x636f6cULL})),
      update_rng_(RngStream::keyed({seed, 0x757064ULL})),
      models_(cfg_.model, init_rng_),
      adam_(make_adam(models_, cfg_.ppo.learning_rate)),
      beta_(cfg_.beta),
      returns_(cfg_.returns_window),
      command_range_(cfg_.commands),
      base_weights_(RewardWeights::initial()) {
  cfg_.seed = seed;
  base_weights_.velocity_tracking_scale = cfg_.ppo.velocity_tracking_scale;
  std::filesystem::create_directories(out_dir_);
  metrics_path_ = out_dir_ + "/metrics.csv";
  envs_.reserve(static_cast<std::size_t>(cfg_.ppo.num_envs));
  for (int e = 0; e < cfg_.ppo.num_envs; ++e) {
    envs_.emplace_back(cfg_.env, seed, e);
    envs_.back().set_command_range(command_range_);
    envs_.back().set_reward_weights(base_weights_);
  }
  write_metrics_header();
}

void Trainer::write_metrics_header() {
  if (std::filesystem::exists(metrics_path_)) return;
  std::ofstream out(metrics_path_);
  out << "iteration,env_steps,p_boot,beta,mean_reward,mean_lin_tracking,"
         "mean_episode_return,mean_terrain_level,finished_episodes,cmd_vx_hi,"
         "clip_loss,value_loss,entropy,est_loss,vae_p,vae_e,contrastive,"
         "versatility,kl_pe,grad_norm,total_loss,stumbles,falls,fault\n";
}

double Trainer::mean_terrain_level() const {
  double acc = 0.0;
  for (const auto& e : envs_) acc += e.curriculum().level;
  return acc / static_cast<double>(envs_.size());
}

void Trainer::append_metrics_row(const RolloutBatch& b, const LossReport& r) {
  double mean_return = 0.0;
  if (!b.finished_returns.empty())
    mean_return = std::accumulate(b.finished_returns.begin(), b.finished_returns.end(), 0.0) /
                  static_cast<double>(b.finished_returns.size());
  std::ofstream out(metrics_path_, std::ios::app);
  out << iteration_ << "," << env_steps_ << "," << format_g17(p_boot_) << ","
      << format_g17(beta_.beta) << "," << format_g17(b.mean_reward) << ","
      << format_g17(b.mean_lin_tracking) << "," << format_g17(mean_return) << ","
      << format_g17(mean_terrain_level()) << "," << b.finished_returns.size() << ","
      << format_g17(command_range_.vx_hi) << "," << format_g17(r.clip_loss) << ","
      << format_g17(r.value_loss) << "," << format_g17(r.entropy) << ","
      << format_g17(r.est_loss) << "," << format_g17(r.vae_p) << "," << format_g17(r.vae_e)
      << "," << format_g17(r.contrastive) << "," << format_g17(r.versatility) << ","
      << format_g17(r.kl_pe) << "," << format_g17(r.grad_norm) << "," << format_g17(r.total)
      << "," << b.stumbles << "," << b.falls << "," << (r.fault ? 1 : 0) << "\n";
}

void Trainer::iterate() {
  // Bootstrapping probability from the returns window; zero until the first
  // episode completes.
  p_boot_ = returns_.empty() ? 0.0 : bootstrap_probability(returns_);

  // Annealed style weights for this iteration.
  RewardWeights w = base_weights_.at_iteration(iteration_);
  w.velocity_tracking_scale = cfg_.ppo.velocity_tracking_scale;
  for (auto& env : envs_) {
    env.set_reward_weights(w);
    env.set_command_range(command_range_);
  }

  CollectConfig cc;
  cc.steps = static_cast<std::size_t>(cfg_.ppo.steps_per_iteration);
  cc.p_boot = p_boot_;
  RolloutBatch batch = collect_rollouts(envs_, models_, cc, collect_rng_);
  env_steps_ += static_cast<long>(batch.rows());
  for (double ret : batch.finished_returns) returns_.push(ret);
  last_lin_tracking_ = batch.mean_lin_tracking;

  AdvantageResult adv = gae_advantages(batch, cfg_.ppo.gamma, cfg_.ppo.gae_lambda);
  LossReport report =
      ppo_update(batch, adv, models_, adam_, cfg_.ppo, beta_, cfg_.contrastive, update_rng_);
  last_report_ = report;

  curriculum_update_command(command_range_, batch.mean_lin_tracking, cfg_.cmd_curriculum);

  iteration_ += 1;
  append_metrics_row(batch, report);
  if (cfg_.checkpoint_every > 0 && iteration_ % cfg_.checkpoint_every == 0)
    save_checkpoint(out_dir_ + "/ckpt_" + std::to_string(iteration_) + ".waq");
}

LossReport Trainer::run(int n) {
  int count = n < 0 ? cfg_.iterations : n;
  for (int i = 0; i < count; ++i) iterate();
  return last_report_;
}

void Trainer::save_checkpoint(const std::string& path) const {
  Checkpoint ck;
  models_.save(ck);
  save_adam(adam_, const_cast<ModelSet&>(models_), ck);
  ck.put_scalar("train/iteration", static_cast<double>(iteration_));
  ck.put_scalar("train/env_steps", static_cast<double>(env_steps_));
  ck.put_scalar("train/beta", beta_.beta);
  ck.put_scalar("train/p_boot", p_boot_);
  ck.put_scalar("train/cmd_vx_lo", command_range_.vx_lo);
  ck.put_scalar("train/cmd_vx_hi", command_range_.vx_hi);
  ck.put_u64("train/collect_rng", collect_rng_.state());
  ck.put_u64("train/update_rng", update_rng_.state());
  std::vector<double> window(returns_.values().begin(), returns_.values().end());
  ck.put("train/returns_window", Tensor({window.size()}, window));
  for (std::size_t e = 0; e < envs_.size(); ++e)
    envs_[e].save_state(ck, "env/" + std::to_string(e) + "/");
  ck.save(path);
}

void Trainer::load_checkpoint(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  models_.load(ck);
  load_adam(adam_, models_, ck);
  iteration_ = static_cast<long>(ck.get_scalar("train/iteration"));
  env_steps_ = static_cast<long>(ck.get_scalar("train/env_steps"));
  beta_.beta = ck.get_scalar("train/beta");
  p_boot_ = ck.get_scalar("train/p_boot");
  command_range_.vx_lo = ck.get_scalar("train/cmd_vx_lo");
  command_range_.vx_hi = ck.get_scalar("train/cmd_vx_hi");
  collect_rng_.set_state(ck.get_u64("train/collect_rng"));
  update_rng_.set_state(ck.get_u64("train/update_rng"));
  const Tensor& window = ck.get("train/returns_window");
  std::deque<double> w(window.data.begin(), window.data.end());
  returns_.assign(w);
  for (std::size_t e = 0; e < envs_.size(); ++e)
    envs_[e].load_state(ck, "env/" + std::to_string(e) + "/");
}

}  // namespace mmloco::trainer
