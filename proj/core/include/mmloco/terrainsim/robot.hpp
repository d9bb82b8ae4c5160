#pragma once

#include <array>

#include "mmloco/support/rng.hpp"
#include "mmloco/terrainsim/randomization.hpp"
#include "mmloco/terrainsim/terrain.hpp"

namespace mmloco::terrainsim {

// Surrogate rigid-body parameters for a Go1-class quadruped. There is no
// contact solver: joints integrate as damped second-order systems under PD
// torques, feet come from two-link leg kinematics, and the base relaxes
// first-order toward the stance-foot sweep velocity.
struct RobotParams {
  double thigh_len = 0.2;
  double calf_len = 0.2;
  double kp = 25.0;
  double kd = 0.7;
  double torque_limit_hip = 23.7;
  double torque_limit_thigh = 23.7;
  double torque_limit_calf = 33.5;
  double joint_inertia = 0.02;
  double joint_damping = 0.08;
  double joint_vel_limit = 30.0;  // rad/s, motor speed ceiling
  std::array<double, 3> nominal_pose = {0.0, 0.8, -1.5};  // hip, thigh, calf (rad)
  double standing_height = 0.4;
  double action_scale = 0.25;
  double policy_dt = 0.02;
  int pd_substeps = 4;
  double base_mass = 13.0;
  double relax_tau = 0.1;       // base velocity time constant, seconds
  double z_tau = 0.05;
  double rp_tau = 0.15;
  double stumble_attenuation = 0.3;
  double stumble_pitch_kick = 0.03;
  double contact_tol = 0.02;
  double foot_clear_margin = 0.02;
  double hip_x = 0.15;
  double hip_y = 0.08;
  double fall_angle = 1.0;       // rad on |roll| or |pitch|
  // Joint limits per leg joint type (hip, thigh, calf).
  double hip_limit = 0.86;
  double thigh_lo = -0.68, thigh_hi = 4.5;
  double calf_lo = -2.82, calf_hi = -0.89;

  double nominal_extension() const;
  // Body-frame z of the hip plane (negative: below the base origin).
  double hip_z() const { return nominal_extension() - standing_height; }
};

struct RobotState {
  std::array<double, 3> pos = {0, 0, 0.4};   // world
  std::array<double, 3> rpy = {0, 0, 0};
  std::array<double, 3> vel_body = {0, 0, 0};
  std::array<double, 3> ang_vel = {0, 0, 0};
  std::array<double, 12> q{};
  std::array<double, 12> qd{};
  std::array<double, 12> torque{};
  std::array<double, 12> joint_acc{};
  std::array<std::array<double, 3>, 4> foot_body{};   // body frame
  std::array<std::array<double, 3>, 4> foot_world{};
  std::array<bool, 4> stance{};
  std::array<double, 12> prev_action{};
  std::array<double, 12> prev_action2{};
};

struct StepEvents {
  int stumbles = 0;
  bool fall = false;
  bool fault = false;  // non-finite action
};

// tau = clamp(Kp*f_p*(target - q) - Kd*f_d*qd, +/- limit) * motor strength.
std::array<double, 12> pd_torque(const std::array<double, 12>& target,
                                 const std::array<double, 12>& q,
                                 const std::array<double, 12>& qd, const RobotParams& p,
                                 const EpisodeRandomization& rand);

// Foot position in the body frame for leg k given its three joint angles.
std::array<double, 3> foot_position_body(const RobotParams& p, int leg, double hip, double thigh,
                                         double calf);

// Initializes q to the nominal pose and places the base at standing height.
void reset_robot(RobotState& s, const RobotParams& p, const TerrainField& field, double x,
                 double y, double yaw);

// One 20 ms policy step: four PD substeps with the episode's action delay,
// then the surrogate base update (sweep velocity, terrain following, stumble
// and fall events).
StepEvents step_robot(RobotState& s, const std::array<double, 12>& action,
                      const std::array<double, 12>& delayed_action, const TerrainField& field,
                      const RobotParams& p, const EpisodeRandomization& rand,
                      RngStream& episode_rng);

}  // namespace mmloco::terrainsim
