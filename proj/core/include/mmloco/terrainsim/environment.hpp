#pragma once

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mmloco/numerics/checkpoint.hpp"
#include "mmloco/perception/memory.hpp"
#include "mmloco/perception/voxel.hpp"
#include "mmloco/terrainsim/curriculum.hpp"
#include "mmloco/terrainsim/randomization.hpp"
#include "mmloco/terrainsim/rewards.hpp"
#include "mmloco/terrainsim/robot.hpp"
#include "mmloco/terrainsim/terrain.hpp"

namespace mmloco::terrainsim {

inline constexpr std::size_t kProprioDim = 45;
inline constexpr std::size_t kPrivilegedDim = 59;

struct EnvParams {
  RobotParams robot;
  std::vector<TerrainKind> kinds = {TerrainKind::kRough};
  int initial_level = 0;
  int episode_steps = 1000;  // 20 s at 50 Hz
  int extero_period = 5;     // 10 Hz captures at a 50 Hz policy
  std::size_t memory_depth = 3;
  bool obs_noise = true;
  bool extero_perturb = true;
  bool randomize = true;
  bool curriculum = true;
  RandomizationRanges ranges;
  ObservationNoise noise_bands;
  double foot_height_des = 0.09;
  std::size_t history = 5;  // proprio stack holds history+1 frames
};

struct ObservationFrame {
  std::array<double, kProprioDim> proprio{};
  std::array<double, 3> v_obs{};  // noisy body velocity channel
};

struct PrivilegedState {
  std::array<double, kPrivilegedDim> bundle{};
  std::vector<double> height_map;  // 34*22, body-frame, relative to local ground
};

struct EnvStepResult {
  RewardVector terms;
  double reward = 0.0;
  StepEvents events;
  bool done = false;
  bool timeout = false;
  double episode_return = 0.0;      // set when done
  double traversed_fraction = 0.0;  // set when done
  int completed_level = 0;          // set when done
};

struct EventRecord {
  long step = 0;
  std::string kind;
  double x = 0.0, y = 0.0;
};

// One simulated quadruped on its own procedural terrain. All randomness is
// keyed off (global seed, env id, episode index), so batches of environments
// step deterministically regardless of threading or ordering.
class Environment {
 public:
  Environment(EnvParams params, std::uint64_t global_seed, int env_id);

  // Starts a fresh episode (terrain per curriculum level, new randomization).
  void reset();

  // Advances one policy step. v_hat is the body-velocity estimate used to
  // integrate the exteroceptive odometry. On termination the result carries
  // the episode summary and the environment auto-resets.
  EnvStepResult step(const std::array<double, 12>& action, const std::array<double, 3>& v_hat);

  // Current actor-side observation (noisy) and critic-side privileged state.
  ObservationFrame observation() const { return obs_; }
  const PrivilegedState& privileged() const { return priv_; }
  // Proprio stack [history+1][45], newest first, zero-padded at episode start.
  std::vector<double> proprio_stack() const;
  // Memory-assembled exteroception in the current estimated body frame.
  perception::PointCloud assembled_cloud() const;

  // Noiseless targets for the auxiliary objectives.
  std::array<double, 3> true_velocity() const;
  std::array<double, kProprioDim> true_proprio() const;
  const std::vector<double>& true_height_map() const { return priv_.height_map; }

  const RobotState& robot() const { return robot_; }
  const TerrainField& terrain() const { return terrain_; }
  const EpisodeRandomization& randomization() const { return rand_; }
  const AgentCurriculum& curriculum() const { return agent_; }
  void set_curriculum_level(int level) { agent_.level = level; }
  long episode_index() const { return episode_index_; }
  long step_index() const { return step_; }

  void set_reward_weights(const RewardWeights& w) { weights_ = w; }
  void set_command_range(const CommandRange& r) { command_range_ = r; }
  const std::array<double, 3>& command() const { return command_; }

  // Pins terrain generation to a fixed field (stair evaluation protocol).
  void set_fixed_terrain(const TerrainField& field);

  void set_record_events(bool on) { record_events_ = on; }
  const std::vector<EventRecord>& events() const { return event_log_; }

  // Full-state serialization for bit-exact training resume.
  void save_state(numerics::Checkpoint& ck, const std::string& prefix) const;
  void load_state(const numerics::Checkpoint& ck, const std::string& prefix);

 private:
  void capture_exteroception();
  void refresh_observation();
  perception::SE3Transform estimated_pose() const;
  perception::SE3Transform true_pose_yaw() const;

  EnvParams p_;
  std::uint64_t global_seed_;
  int env_id_;

  TerrainField terrain_;
  std::optional<TerrainField> fixed_terrain_;
  RobotState robot_;
  EpisodeRandomization rand_;
  AgentCurriculum agent_;
  RewardWeights weights_ = RewardWeights::initial();
  CommandRange command_range_;

  perception::ExteroMemory memory_{3};
  std::array<double, 3> est_pos_{};  // odometry-integrated position estimate
  std::deque<std::array<double, kProprioDim>> history_;
  std::array<double, 3> command_{};

  ObservationFrame obs_;
  PrivilegedState priv_;

  RngStream episode_rng_;
  std::uint64_t episode_seed_ = 0;
  long episode_index_ = -1;
  long step_ = 0;
  double episode_return_ = 0.0;
  double max_displacement_ = 0.0;
  std::array<double, 2> spawn_xy_{};

  bool record_events_ = false;
  std::vector<EventRecord> event_log_;
};

}  // namespace mmloco::terrainsim
