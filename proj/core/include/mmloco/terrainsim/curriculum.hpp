#pragma once

#include <vector>

#include "mmloco/support/rng.hpp"

namespace mmloco::terrainsim {

// Game-inspired terrain curriculum: promote on traversing more than half of
// the course, demote after more than ten consecutive failures, respawn at a
// uniformly random level after succeeding at the top.
struct AgentCurriculum {
  int level = 0;
  int fail_streak = 0;
};

void curriculum_update_agent(AgentCurriculum& agent, double traversed_fraction, RngStream& rng);

// Command-velocity curriculum: the vx range widens symmetrically by
// `widen_step` whenever the mean linear-tracking reward reaches the threshold,
// up to +/- cap. The range never shrinks.
struct CommandRange {
  double vx_lo = -1.0;
  double vx_hi = 1.0;
  double vy_abs = 0.5;
  double wz_abs = 1.0;
};

struct CommandCurriculumConfig {
  double threshold = 0.9;
  double widen_step = 0.25;
  double vx_cap = 2.0;
};

void curriculum_update_command(CommandRange& range, double mean_tracking_reward,
                               const CommandCurriculumConfig& cfg = CommandCurriculumConfig{});

}  // namespace mmloco::terrainsim
