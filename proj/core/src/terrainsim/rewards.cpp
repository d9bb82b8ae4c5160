#include "mmloco/terrainsim/rewards.hpp"

#include <cmath>

namespace mmloco::terrainsim {

namespace {

const char* kNames[kNumRewardTerms] = {
    "lin_vel_tracking", "ang_vel_tracking", "lin_vel_z",      "ang_vel_xy",
    "uprightness",      "joint_power",      "body_height",    "foot_clearance",
    "power_distribution", "joint_torque",   "joint_velocity", "joint_acceleration",
    "action_rate",      "smoothness"};

constexpr bool kAnnealed[kNumRewardTerms] = {false, false, false, false, false, false, false,
                                             false, false, true,  true,  true,  true,  true};

}  // namespace

const char* reward_term_name(int term) { return kNames[term]; }

RewardWeights RewardWeights::initial() {
  RewardWeights w;
  w.weights[kLinVelTracking] = 1.0;
  w.weights[kAngVelTracking] = 0.5;
  w.weights[kLinVelZ] = -2.0;
  w.weights[kAngVelXY] = -0.05;
  w.weights[kUprightness] = -0.2;
  w.weights[kJointPower] = -2e-5;
  w.weights[kBodyHeight] = -1.0;
  w.weights[kFootClearance] = -0.01;
  w.weights[kPowerDistribution] = -1e-5;
  // Annealed style terms start from the published w0 values.
  w.weights[kJointTorque] = -5e-6;
  w.weights[kJointVelocity] = -6e-6;
  w.weights[kJointAcceleration] = -7.5e-8;
  w.weights[kActionRate] = -1.5e-5;
  w.weights[kSmoothness] = -1.5e-5;
  return w;
}

RewardWeights RewardWeights::at_iteration(long iteration) const {
  RewardWeights out = *this;
  double factor = std::pow(anneal_rate, static_cast<double>(iteration));
  for (int i = 0; i < kNumRewardTerms; ++i)
    if (kAnnealed[i]) out.weights[static_cast<std::size_t>(i)] = weights[static_cast<std::size_t>(i)] * factor;
  return out;
}

std::array<double, kNumRewardTerms> RewardWeights::effective() const {
  std::array<double, kNumRewardTerms> w = weights;
  w[kLinVelTracking] *= velocity_tracking_scale;
  return w;
}

RewardVector compute_rewards(const RewardInputs& in) {
  RewardVector r;
  double evx = in.cmd_vx - in.vel_body[0];
  double evy = in.cmd_vy - in.vel_body[1];
  r.value[kLinVelTracking] = std::exp(-4.0 * (evx * evx + evy * evy));
  double ew = in.cmd_wz - in.ang_vel[2];
  r.value[kAngVelTracking] = std::exp(-4.0 * ew * ew);
  r.value[kLinVelZ] = in.vel_body[2] * in.vel_body[2];
  r.value[kAngVelXY] = in.ang_vel[0] * in.ang_vel[0] + in.ang_vel[1] * in.ang_vel[1];
  // |g|^2 over the horizontal components of the unit gravity direction: zero
  // when upright, grows as the base tilts.
  r.value[kUprightness] =
      in.gravity_body[0] * in.gravity_body[0] + in.gravity_body[1] * in.gravity_body[1];
  double power = 0.0, torque_sq = 0.0, joint_vel_sq = 0.0, joint_acc_sq = 0.0;
  double pd_mean = 0.0;
  double pd[12];
  for (int j = 0; j < 12; ++j) {
    power += std::abs(in.torque[j]) * std::abs(in.joint_vel[j]);
    torque_sq += in.torque[j] * in.torque[j];
    joint_vel_sq += in.joint_vel[j] * in.joint_vel[j];
    joint_acc_sq += in.joint_acc[j] * in.joint_acc[j];
    pd[j] = in.torque[j] * in.joint_vel[j];
    pd_mean += pd[j] / 12.0;
  }
  r.value[kJointPower] = power;
  double pd_var = 0.0;
  for (int j = 0; j < 12; ++j) pd_var += (pd[j] - pd_mean) * (pd[j] - pd_mean) / 12.0;
  r.value[kPowerDistribution] = pd_var * pd_var;
  double eh = in.body_height_des - in.body_height;
  r.value[kBodyHeight] = eh * eh;
  double clearance = 0.0;
  for (int k = 0; k < 4; ++k) {
    double ef = in.foot_height_des - in.foot_height[k];
    clearance += ef * ef * in.foot_xy_speed[k];
  }
  r.value[kFootClearance] = clearance;
  r.value[kJointTorque] = torque_sq;
  r.value[kJointVelocity] = joint_vel_sq;
  r.value[kJointAcceleration] = joint_acc_sq;
  double rate = 0.0, smooth = 0.0;
  for (int j = 0; j < 12; ++j) {
    double d1 = in.action[j] - in.action_prev[j];
    rate += d1 * d1;
    double d2 = in.action[j] - 2.0 * in.action_prev[j] + in.action_prev2[j];
    smooth += d2 * d2;
  }
  r.value[kActionRate] = rate;
  r.value[kSmoothness] = smooth;
  return r;
}

}  // namespace mmloco::terrainsim
