#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "mmloco/perception/perturb.hpp"
#include "mmloco/trainer/eval.hpp"

namespace {

using namespace mmloco;
using namespace mmloco::trainer;

int cmd_train(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
              const std::string& resume) {
  TrainerConfig cfg = load_trainer_config_file(config_path);
  Trainer trainer(cfg, seed, out_dir);
  if (!resume.empty()) {
    trainer.load_checkpoint(resume);
    std::cout << "resumed from " << resume << " at iteration " << trainer.iteration() << "\n";
  }
  long remaining = cfg.iterations - trainer.iteration();
  std::cout << "training " << remaining << " iterations, " << cfg.ppo.num_envs << " envs x "
            << cfg.ppo.steps_per_iteration << " steps\n";
  for (long i = 0; i < remaining; ++i) {
    trainer.run(1);
    if (trainer.iteration() % 10 == 0 || i + 1 == remaining)
      std::cout << "iter " << trainer.iteration() << "  lin_tracking "
                << trainer.last_mean_lin_tracking() << "  mean_level "
                << trainer.mean_terrain_level() << "  beta " << trainer.beta().beta << "\n";
  }
  std::string final_path = out_dir + "/ckpt_final.waq";
  trainer.save_checkpoint(final_path);
  std::cout << "metrics: " << trainer.metrics_path() << "\ncheckpoint: " << final_path << "\n";
  return 0;
}

// Models + config are rebuilt from the config file; parameters come from the
// checkpoint.
ModelSet load_models(const TrainerConfig& cfg, const std::string& ckpt) {
  RngStream rng = RngStream::keyed({cfg.seed, 0x6d6f64656cULL});
  ModelSet models(cfg.model, rng);
  numerics::Checkpoint ck = numerics::Checkpoint::load(ckpt);
  models.load(ck);
  return models;
}

int cmd_eval_stairs(const std::string& config_path, const std::string& ckpt,
                    const std::vector<double>& rises, double run, int robots, double limit,
                    std::uint64_t seed, const std::string& out_csv) {
  TrainerConfig cfg = load_trainer_config_file(config_path);
  ModelSet models = load_models(cfg, ckpt);
  auto results = evaluate_stairs(models, cfg, rises, run, robots, limit, seed);
  std::FILE* out = out_csv.empty() ? stdout : std::fopen(out_csv.c_str(), "w");
  if (!out) throw std::runtime_error("cannot open " + out_csv);
  std::fprintf(out, "rise,run,robots,limit_s,success_rate\n");
  for (const auto& r : results)
    std::fprintf(out, "%g,%g,%d,%g,%s\n", r.rise, run, r.robots, limit,
                 format_g17(r.success_rate).c_str());
  if (!out_csv.empty()) std::fclose(out);
  return 0;
}

int cmd_export_embeddings(const std::string& config_path, const std::string& ckpt,
                          const std::string& scenario, int steps, std::uint64_t seed,
                          const std::string& out_csv) {
  TrainerConfig cfg = load_trainer_config_file(config_path);
  ModelSet models = load_models(cfg, ckpt);
  export_embeddings(models, cfg, scenario, steps, seed, out_csv);
  std::cout << "wrote " << steps << " rows to " << out_csv << "\n";
  return 0;
}

int cmd_perturb_replay(const std::string& in_csv, const std::string& profile,
                       const std::string& out_csv, std::uint64_t seed) {
  using namespace mmloco::perception;
  ConfigFile prof = ConfigFile::parse_file(profile);
  PerturbationConfig cfg;
  cfg.mu_x = prof.get_double("perturb", "mu_x", 0.0);
  cfg.mu_y = prof.get_double("perturb", "mu_y", 0.0);
  cfg.mu_z = prof.get_double("perturb", "mu_z", 0.0);
  cfg.sigma_x = prof.get_double("perturb", "sigma_x", 0.0);
  cfg.sigma_y = prof.get_double("perturb", "sigma_y", 0.0);
  cfg.sigma_z = prof.get_double("perturb", "sigma_z", 0.0);
  cfg.distance_ref = prof.get_double("perturb", "distance_ref", 1.0);
  cfg.bias.dx = prof.get_double("perturb", "bias_x", 0.0);
  cfg.bias.dy = prof.get_double("perturb", "bias_y", 0.0);
  cfg.bias.dz = prof.get_double("perturb", "bias_z", 0.0);
  cfg.bias.droll = prof.get_double("perturb", "bias_roll", 0.0);
  cfg.bias.dpitch = prof.get_double("perturb", "bias_pitch", 0.0);
  cfg.bias.dyaw = prof.get_double("perturb", "bias_yaw", 0.0);
  cfg.prune_base = prof.get_double("perturb", "prune_base", 0.0);
  double z_ref = prof.get_double("perturb", "prune_z_ref", -0.4);
  auto unused = prof.unused_keys();
  if (!unused.empty()) {
    std::string msg = "profile has unknown keys:";
    for (const auto& k : unused) msg += " " + k;
    throw std::runtime_error(msg);
  }

  auto frames = read_cloud_replay(in_csv);
  std::vector<CloudFrame> out_frames;
  std::uint64_t step = 0;
  for (const auto& f : frames) {
    CloudFrame g;
    g.timestamp = f.timestamp;
    PointCloud c = apply_alignment_bias(f.cloud, cfg.bias);
    c = apply_noise_model(c, cfg, seed, step);
    c = apply_pruning(c, cfg, z_ref, seed, step);
    g.cloud = std::move(c);
    out_frames.push_back(std::move(g));
    ++step;
  }
  write_cloud_replay(out_csv, out_frames);
  std::cout << "perturbed " << frames.size() << " frames -> " << out_csv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-modal quadruped locomotion learning"};
  app.require_subcommand(1);

  // train
  std::string config_path, out_dir = "runs/out", resume;
  std::uint64_t seed = 1;
  auto* train = app.add_subcommand("train", "run PPO training");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--seed", seed, "RNG seed");
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--resume", resume, "checkpoint to resume from");

  // eval-stairs
  std::string ckpt, rises_str = "0.10,0.15,0.20,0.25,0.30,0.35", eval_out;
  double run_len = 0.3, limit = 10.0;
  int robots = 1000;
  auto* stairs = app.add_subcommand("eval-stairs", "stair success-rate protocol");
  stairs->add_option("--config", config_path, "config file")->required();
  stairs->add_option("--ckpt", ckpt, "checkpoint")->required();
  stairs->add_option("--rises", rises_str, "comma-separated rises in meters");
  stairs->add_option("--run", run_len, "stair run in meters");
  stairs->add_option("--robots", robots, "robots per rise");
  stairs->add_option("--limit", limit, "time limit in seconds");
  stairs->add_option("--seed", seed, "RNG seed");
  stairs->add_option("--out", eval_out, "output CSV (stdout when empty)");

  // export-embeddings
  std::string scenario = "flat", embed_out = "embeddings.csv";
  int steps = 500;
  auto* embed = app.add_subcommand("export-embeddings", "latent context export");
  embed->add_option("--config", config_path, "config file")->required();
  embed->add_option("--ckpt", ckpt, "checkpoint")->required();
  embed->add_option("--scenario", scenario, "flat|rough|stairs-easy|stairs-hard");
  embed->add_option("--steps", steps, "rollout steps");
  embed->add_option("--seed", seed, "RNG seed");
  embed->add_option("--out", embed_out, "output CSV");

  // perturb-replay
  std::string in_csv, profile, replay_out = "perturbed.csv";
  auto* perturb = app.add_subcommand("perturb-replay", "apply a perturbation profile to a cloud replay");
  perturb->add_option("--in", in_csv, "input replay CSV")->required();
  perturb->add_option("--profile", profile, "perturbation profile config")->required();
  perturb->add_option("--out", replay_out, "output replay CSV");
  perturb->add_option("--seed", seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, seed, out_dir, resume);
    if (*stairs) {
      std::vector<double> rises;
      std::stringstream ss(rises_str);
      std::string item;
      while (std::getline(ss, item, ',')) rises.push_back(std::stod(item));
      return cmd_eval_stairs(config_path, ckpt, rises, run_len, robots, limit, seed, eval_out);
    }
    if (*embed) return cmd_export_embeddings(config_path, ckpt, scenario, steps, seed, embed_out);
    if (*perturb) return cmd_perturb_replay(in_csv, profile, replay_out, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
