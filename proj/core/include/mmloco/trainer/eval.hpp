#pragma once

#include <string>
#include <vector>

#include "mmloco/trainer/trainer.hpp"

namespace mmloco::trainer {

struct StairsPoint {
  double rise = 0.0;
  double success_rate = 0.0;
  int robots = 0;
};

// Stair-climbing protocol: for each rise, n_robots start before a flight of
// stairs (run x n_steps) under per-robot randomization; success means
// reaching the last stair within the time limit. The policy acts greedily.
std::vector<StairsPoint> evaluate_stairs(ModelSet& models, const TrainerConfig& cfg,
                                         const std::vector<double>& rises, double run,
                                         int n_robots, double time_limit_s, std::uint64_t seed,
                                         int n_steps = 10, double command_vx = 1.0);

// Rolls the policy in a named scenario and writes latent rows:
// step, z_p[0..31], z_e[0..31], z_pe[0..63]. Throws on unknown scenarios,
// listing the valid names.
void export_embeddings(ModelSet& models, const TrainerConfig& cfg, const std::string& scenario,
                       int steps, std::uint64_t seed, const std::string& out_csv);

std::vector<std::string> embedding_scenarios();

}  // namespace mmloco::trainer
