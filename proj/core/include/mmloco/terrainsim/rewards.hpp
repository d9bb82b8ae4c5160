#pragma once

#include <array>
#include <string>

namespace mmloco::terrainsim {

// Reward terms, computed literally from the published table. Raw values carry
// no weights; the weighted sum applies the (possibly annealed) weight vector.
enum RewardTerm : int {
  kLinVelTracking = 0,
  kAngVelTracking,
  kLinVelZ,
  kAngVelXY,
  kUprightness,
  kJointPower,
  kBodyHeight,
  kFootClearance,
  kPowerDistribution,
  kJointTorque,
  kJointVelocity,
  kJointAcceleration,
  kActionRate,
  kSmoothness,
  kNumRewardTerms
};

const char* reward_term_name(int term);

struct RewardVector {
  std::array<double, kNumRewardTerms> value{};

  double weighted_total(const std::array<double, kNumRewardTerms>& weights) const {
    double acc = 0.0;
    for (int i = 0; i < kNumRewardTerms; ++i) acc += weights[static_cast<std::size_t>(i)] * value[static_cast<std::size_t>(i)];
    return acc;
  }
};

// Weight schedule: fixed weights from the reward table; the five style terms
// (joint torque, joint velocity, joint acceleration, action rate, smoothness)
// start from their published w0 and anneal as w0 * 0.998^iteration.
struct RewardWeights {
  std::array<double, kNumRewardTerms> weights{};
  double velocity_tracking_scale = 1.0;  // parkour knob: 1.0 -> 0.1
  double anneal_rate = 0.998;

  static RewardWeights initial();
  // Weights at a given iteration (annealed terms only change).
  RewardWeights at_iteration(long iteration) const;
  std::array<double, kNumRewardTerms> effective() const;
};

struct RewardInputs {
  double cmd_vx = 0.0, cmd_vy = 0.0, cmd_wz = 0.0;
  double vel_body[3] = {0, 0, 0};       // vx, vy, vz in the body frame
  double ang_vel[3] = {0, 0, 0};        // wx, wy, wz
  double gravity_body[3] = {0, 0, -1};  // unit gravity direction in body frame
  double joint_vel[12] = {};
  double joint_acc[12] = {};
  double torque[12] = {};
  double body_height = 0.4;             // above local ground
  double body_height_des = 0.4;
  double foot_height[4] = {};           // swing height above terrain
  double foot_height_des = 0.09;
  double foot_xy_speed[4] = {};
  double action[12] = {};
  double action_prev[12] = {};
  double action_prev2[12] = {};
};

RewardVector compute_rewards(const RewardInputs& in);

}  // namespace mmloco::terrainsim
