#include "mmloco/trainer/eval.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mmloco::trainer {

using namespace mmloco::numerics;
using namespace mmloco::terrainsim;
using encoders::pack_points;

namespace {

// Greedy policy step for a batch of environments; latent eps = 0 keeps the
// evaluation deterministic given the environment seeds.
struct GreedyStepper {
  ModelSet& models;

  struct Latents {
    Tensor z_p, z_e, z_pe;           // samples (= means at eps 0)
    Tensor std_p, std_e, std_pe;
  };

  Latents act(std::vector<Environment>& envs, std::vector<std::array<double, 12>>& actions,
              std::vector<std::array<double, 3>>& v_hats) {
    const EncoderConfig& enc = models.cfg.enc;
    std::size_t E = envs.size();
    std::size_t slots = enc.slots();
    std::size_t N = enc.max_points;
    Tensor stacks = Tensor::zeros({E, slots, 45});
    Tensor pts = Tensor::zeros({E, N, 3});
    Tensor obs_now = Tensor::zeros({E, 45});
    Tensor v_obs = Tensor::zeros({E, 3});
    for (std::size_t e = 0; e < E; ++e) {
      auto st = envs[e].proprio_stack();
      std::copy(st.begin(), st.end(), stacks.data.begin() + static_cast<std::ptrdiff_t>(e * slots * 45));
      Tensor packed = pack_points(envs[e].assembled_cloud(), N);
      std::copy(packed.data.begin(), packed.data.end(),
                pts.data.begin() + static_cast<std::ptrdiff_t>(e * N * 3));
      auto obs = envs[e].observation();
      std::copy(obs.proprio.begin(), obs.proprio.end(),
                obs_now.data.begin() + static_cast<std::ptrdiff_t>(e * 45));
      std::copy(obs.v_obs.begin(), obs.v_obs.end(),
                v_obs.data.begin() + static_cast<std::ptrdiff_t>(e * 3));
    }
    Tape tape;
    Ctx ctx(tape, false);
    auto zp = models.proprio.forward(ctx, constant(stacks), Tensor::zeros({E, enc.z_proprio}));
    auto ze = models.extero.forward(ctx, constant(pts), Tensor::zeros({E, enc.z_extero}));
    auto zpe = models.mixer.forward(ctx, zp.z.sample, ze.z.sample,
                                    Tensor::zeros({E, enc.z_fused()}));
    // Deployed policy always consumes its own velocity estimate.
    Var mu = models.actor_mean(ctx, constant(obs_now), zpe.sample, zp.velocity);

    actions.resize(E);
    v_hats.resize(E);
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t j = 0; j < 12; ++j) actions[e][j] = mu.val().data[e * 12 + j];
      for (std::size_t k = 0; k < 3; ++k) v_hats[e][k] = zp.velocity.val().data[e * 3 + k];
    }
    Latents l;
    l.z_p = zp.z.sample.val();
    l.z_e = ze.z.sample.val();
    l.z_pe = zpe.sample.val();
    l.std_p = zp.z.std.val();
    l.std_e = ze.z.std.val();
    l.std_pe = zpe.std.val();
    return l;
  }
};

}  // namespace

std::vector<StairsPoint> evaluate_stairs(ModelSet& models, const TrainerConfig& cfg,
                                         const std::vector<double>& rises, double run,
                                         int n_robots, double time_limit_s, std::uint64_t seed,
                                         int n_steps, double command_vx) {
  if (rises.empty()) throw std::invalid_argument("evaluate_stairs: no rises given");
  std::vector<StairsPoint> out;
  int limit_steps = static_cast<int>(std::lround(time_limit_s / 0.02));
  const int chunk = 256;

  for (double rise : rises) {
    TerrainField field = generate_stairs_exact(rise, run, n_steps, seed);
    // Success: the base reaches the start of the last tread.
    double x_success = 1.0 + run * (n_steps - 1);
    int successes = 0;

    EnvParams ep = cfg.env;
    ep.curriculum = false;
    ep.episode_steps = limit_steps + 1;
    CommandRange cmd;
    cmd.vx_lo = cmd.vx_hi = command_vx;
    cmd.vy_abs = 0.0;
    cmd.wz_abs = 0.0;

    for (int start = 0; start < n_robots; start += chunk) {
      int count = std::min(chunk, n_robots - start);
      std::vector<Environment> envs;
      envs.reserve(static_cast<std::size_t>(count));
      for (int r = 0; r < count; ++r) {
        envs.emplace_back(ep, seed, start + r);
        envs.back().set_command_range(cmd);
        envs.back().set_fixed_terrain(field);
      }
      std::vector<bool> done(static_cast<std::size_t>(count), false);
      GreedyStepper stepper{models};
      std::vector<std::array<double, 12>> actions;
      std::vector<std::array<double, 3>> v_hats;
      for (int t = 0; t < limit_steps; ++t) {
        stepper.act(envs, actions, v_hats);
        bool all_done = true;
        for (std::size_t e = 0; e < envs.size(); ++e) {
          if (done[e]) continue;
          auto res = envs[e].step(actions[e], v_hats[e]);
          if (envs[e].robot().pos[0] >= x_success) {
            ++successes;
            done[e] = true;
          } else if (res.done) {
            done[e] = true;  // fell or timed out inside the env
          }
          if (!done[e]) all_done = false;
        }
        if (all_done) break;
      }
    }
    out.push_back({rise, static_cast<double>(successes) / n_robots, n_robots});
  }
  return out;
}

std::vector<std::string> embedding_scenarios() {
  return {"flat", "rough", "stairs-easy", "stairs-hard"};
}

void export_embeddings(ModelSet& models, const TrainerConfig& cfg, const std::string& scenario,
                       int steps, std::uint64_t seed, const std::string& out_csv) {
  EnvParams ep = cfg.env;
  ep.curriculum = false;
  ep.episode_steps = steps + 1;

  TerrainField field;
  if (scenario == "flat") {
    field = generate_terrain(TerrainKind::kRough, 0, seed);
  } else if (scenario == "rough") {
    field = generate_terrain(TerrainKind::kRough, 5, seed);
  } else if (scenario == "stairs-easy") {
    field = generate_stairs_exact(0.10, 0.30, 10, seed);
  } else if (scenario == "stairs-hard") {
    field = generate_stairs_exact(0.25, 0.30, 10, seed);
  } else {
    std::string valid;
    for (const auto& s : embedding_scenarios()) valid += " " + s;
    throw std::invalid_argument("unknown scenario '" + scenario + "'; valid:" + valid);
  }

  std::vector<Environment> envs;
  envs.emplace_back(ep, seed, 0);
  CommandRange cmd;
  cmd.vx_lo = cmd.vx_hi = 0.5;
  cmd.vy_abs = 0.0;
  cmd.wz_abs = 0.0;
  envs.back().set_command_range(cmd);
  envs.back().set_fixed_terrain(field);

  std::ofstream out(out_csv);
  if (!out) throw std::runtime_error("cannot write embeddings csv: " + out_csv);
  out << "step";
  for (int i = 0; i < 32; ++i) out << ",z_p_" << i;
  for (int i = 0; i < 32; ++i) out << ",z_e_" << i;
  for (int i = 0; i < 64; ++i) out << ",z_pe_" << i;
  out << "\n";

  GreedyStepper stepper{models};
  std::vector<std::array<double, 12>> actions;
  std::vector<std::array<double, 3>> v_hats;
  for (int t = 0; t < steps; ++t) {
    auto latents = stepper.act(envs, actions, v_hats);
    for (double s : latents.std_p.data)
      require(s >= 0.0 && s <= 5.0, "latent std outside [0,5]");
    for (double s : latents.std_e.data)
      require(s >= 0.0 && s <= 5.0, "latent std outside [0,5]");
    for (double s : latents.std_pe.data)
      require(s >= 0.0 && s <= 5.0, "latent std outside [0,5]");
    out << t;
    for (double v : latents.z_p.data) out << "," << format_g17(v);
    for (double v : latents.z_e.data) out << "," << format_g17(v);
    for (double v : latents.z_pe.data) out << "," << format_g17(v);
    out << "\n";
    envs[0].step(actions[0], v_hats[0]);
  }
}

}  // namespace mmloco::trainer
