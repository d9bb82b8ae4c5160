#include "mmloco/terrainsim/curriculum.hpp"

#include <algorithm>

namespace mmloco::terrainsim {

void curriculum_update_agent(AgentCurriculum& agent, double traversed_fraction, RngStream& rng) {
  if (traversed_fraction > 0.5) {
    if (agent.level >= 9) {
      // Walked through all levels: respawn anywhere to avoid forgetting.
      agent.level = static_cast<int>(rng.index(10));
    } else {
      agent.level += 1;
    }
    agent.fail_streak = 0;
  } else {
    agent.fail_streak += 1;
    if (agent.fail_streak > 10) {
      agent.level = std::max(0, agent.level - 1);
      agent.fail_streak = 0;
    }
  }
}

void curriculum_update_command(CommandRange& range, double mean_tracking_reward,
                               const CommandCurriculumConfig& cfg) {
  if (mean_tracking_reward >= cfg.threshold) {
    range.vx_lo = std::max(-cfg.vx_cap, range.vx_lo - cfg.widen_step);
    range.vx_hi = std::min(cfg.vx_cap, range.vx_hi + cfg.widen_step);
  }
}

}  // namespace mmloco::terrainsim
