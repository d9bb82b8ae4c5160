#include "mmloco/terrainsim/robot.hpp"

#include <algorithm>
#include <cmath>

namespace mmloco::terrainsim {

namespace {

// Leg order: FR, FL, RR, RL; joints per leg: hip abduction, thigh, calf.
constexpr double kHipSignX[4] = {1.0, 1.0, -1.0, -1.0};
constexpr double kHipSignY[4] = {-1.0, 1.0, -1.0, 1.0};

double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

double RobotParams::nominal_extension() const {
  double th = nominal_pose[1], cf = nominal_pose[2];
  return thigh_len * std::cos(th) + calf_len * std::cos(th + cf);
}

std::array<double, 12> pd_torque(const std::array<double, 12>& target,
                                 const std::array<double, 12>& q,
                                 const std::array<double, 12>& qd, const RobotParams& p,
                                 const EpisodeRandomization& rand) {
  std::array<double, 12> tau;
  for (int j = 0; j < 12; ++j) {
    double raw = p.kp * rand.kp_factor * (target[static_cast<std::size_t>(j)] - q[static_cast<std::size_t>(j)]) -
                 p.kd * rand.kd_factor * qd[static_cast<std::size_t>(j)];
    double limit = (j % 3 == 2) ? p.torque_limit_calf
                                : (j % 3 == 1 ? p.torque_limit_thigh : p.torque_limit_hip);
    tau[static_cast<std::size_t>(j)] = clamp(raw, -limit, limit) * rand.motor_strength;
  }
  return tau;
}

std::array<double, 3> foot_position_body(const RobotParams& p, int leg, double hip, double thigh,
                                         double calf) {
  double ext = p.thigh_len * std::cos(thigh) + p.calf_len * std::cos(thigh + calf);
  double x_off = p.thigh_len * std::sin(thigh) + p.calf_len * std::sin(thigh + calf);
  double hx = kHipSignX[leg] * p.hip_x;
  double hy = kHipSignY[leg] * p.hip_y;
  return {hx + x_off, hy + std::sin(hip) * ext, p.hip_z() - std::cos(hip) * ext};
}

namespace {

void update_feet(RobotState& s, const RobotParams& p) {
  double cy = std::cos(s.rpy[2]), sy = std::sin(s.rpy[2]);
  for (int k = 0; k < 4; ++k) {
    auto fb = foot_position_body(p, k, s.q[static_cast<std::size_t>(k * 3)],
                                 s.q[static_cast<std::size_t>(k * 3 + 1)],
                                 s.q[static_cast<std::size_t>(k * 3 + 2)]);
    s.foot_body[static_cast<std::size_t>(k)] = fb;
    s.foot_world[static_cast<std::size_t>(k)] = {s.pos[0] + cy * fb[0] - sy * fb[1],
                                                 s.pos[1] + sy * fb[0] + cy * fb[1],
                                                 s.pos[2] + fb[2]};
  }
}

}  // namespace

void reset_robot(RobotState& s, const RobotParams& p, const TerrainField& field, double x,
                 double y, double yaw) {
  s = RobotState{};
  s.pos = {x, y, height_at(field, x, y) + p.standing_height};
  s.rpy = {0.0, 0.0, yaw};
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 3; ++j)
      s.q[static_cast<std::size_t>(k * 3 + j)] = p.nominal_pose[static_cast<std::size_t>(j)];
  update_feet(s, p);
  for (int k = 0; k < 4; ++k) s.stance[static_cast<std::size_t>(k)] = true;
}

StepEvents step_robot(RobotState& s, const std::array<double, 12>& action,
                      const std::array<double, 12>& delayed_action, const TerrainField& field,
                      const RobotParams& p, const EpisodeRandomization& rand,
                      RngStream& episode_rng) {
  StepEvents ev;
  for (double a : action)
    if (!std::isfinite(a)) {
      ev.fault = true;
      return ev;
    }

  auto targets_of = [&](const std::array<double, 12>& a) {
    std::array<double, 12> t;
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 3; ++j)
        t[static_cast<std::size_t>(k * 3 + j)] =
            p.nominal_pose[static_cast<std::size_t>(j)] +
            p.action_scale * a[static_cast<std::size_t>(k * 3 + j)];
    return t;
  };
  std::array<double, 12> tgt_new = targets_of(action);
  std::array<double, 12> tgt_old = targets_of(delayed_action);

  std::array<double, 12> qd_before = s.qd;
  std::array<std::array<double, 3>, 4> foot_body_prev = s.foot_body;
  std::array<std::array<double, 3>, 4> foot_world_prev = s.foot_world;

  double sub_dt = p.policy_dt / p.pd_substeps;
  for (int sub = 0; sub < p.pd_substeps; ++sub) {
    // The episode's system delay masks the freshest targets at the start of
    // the policy period.
    double t_ms = sub * sub_dt * 1000.0;
    const std::array<double, 12>& tgt = (t_ms >= rand.system_delay_ms) ? tgt_new : tgt_old;
    s.torque = pd_torque(tgt, s.q, s.qd, p, rand);
    for (int j = 0; j < 12; ++j) {
      std::size_t ji = static_cast<std::size_t>(j);
      double qdd = (s.torque[ji] - p.joint_damping * s.qd[ji]) / p.joint_inertia;
      s.qd[ji] += qdd * sub_dt;
      s.qd[ji] = clamp(s.qd[ji], -p.joint_vel_limit, p.joint_vel_limit);
      s.q[ji] += s.qd[ji] * sub_dt;
      double lo = j % 3 == 0 ? -p.hip_limit : (j % 3 == 1 ? p.thigh_lo : p.calf_lo);
      double hi = j % 3 == 0 ? p.hip_limit : (j % 3 == 1 ? p.thigh_hi : p.calf_hi);
      if (s.q[ji] < lo || s.q[ji] > hi) {
        s.q[ji] = clamp(s.q[ji], lo, hi);
        s.qd[ji] = 0.0;
      }
    }
  }
  for (int j = 0; j < 12; ++j) {
    std::size_t ji = static_cast<std::size_t>(j);
    s.joint_acc[ji] = (s.qd[ji] - qd_before[ji]) / p.policy_dt;
  }

  update_feet(s, p);

  // Stance weights and sweep velocity of the feet relative to the body. The
  // weight fades with foot clearance so stance chatter does not square-wave
  // the velocity target.
  int n_stance = 0;
  double w_sum = 0.0;
  double sweep_x = 0.0, sweep_y = 0.0;
  double left_fwd = 0.0, right_fwd = 0.0;
  double w_left = 0.0, w_right = 0.0;
  double ground_ref = 0.0, height_ref = 0.0;
  for (int k = 0; k < 4; ++k) {
    std::size_t ki = static_cast<std::size_t>(k);
    double terrain_z =
        height_at(field, s.foot_world[ki][0], s.foot_world[ki][1]);
    double clearance = s.foot_world[ki][2] - terrain_z;
    bool stance = clearance <= p.contact_tol;
    s.stance[ki] = stance;
    double w = clamp(1.0 - clearance / (2.0 * p.contact_tol), 0.0, 1.0);
    if (w <= 0.0) continue;
    if (stance) ++n_stance;
    double sx = (s.foot_body[ki][0] - foot_body_prev[ki][0]) / p.policy_dt;
    double sy = (s.foot_body[ki][1] - foot_body_prev[ki][1]) / p.policy_dt;
    w_sum += w;
    sweep_x += w * sx;
    sweep_y += w * sy;
    double fwd = -sx;  // backward foot sweep propels the body forward
    if (kHipSignY[k] > 0) {
      left_fwd += w * fwd;
      w_left += w;
    } else {
      right_fwd += w * fwd;
      w_right += w;
    }
    ground_ref += w * terrain_z;
    height_ref += w * (-s.foot_body[ki][2]);
  }

  // Ground slip: low friction weakens how much of the sweep turns into base
  // motion.
  double slip = clamp(rand.friction / 0.6, 0.0, 1.0);
  double mass_factor = 1.0 + std::max(0.0, rand.payload_kg) / p.base_mass;
  double vel_alpha = p.policy_dt / (p.relax_tau * mass_factor);

  double vt_x, vt_y, z_target;
  if (w_sum > 1e-9) {
    vt_x = -sweep_x / w_sum * slip;
    vt_y = -sweep_y / w_sum * slip;
    z_target = ground_ref / w_sum + height_ref / w_sum;
  } else {
    // Airborne: bleed speed, follow the terrain (and any pit) downward.
    vt_x = s.vel_body[0] * 0.9;
    vt_y = s.vel_body[1] * 0.9;
    double ext = 0.0;
    for (int k = 0; k < 4; ++k) ext += -s.foot_body[static_cast<std::size_t>(k)][2] / 4.0;
    z_target = height_at(field, s.pos[0], s.pos[1]) + ext;
  }
  s.vel_body[0] += (vt_x - s.vel_body[0]) * vel_alpha;
  s.vel_body[1] += (vt_y - s.vel_body[1]) * vel_alpha;

  // Yaw from differential left/right sweep, like a tracked vehicle.
  double wz_target = 0.0;
  if (w_left > 1e-9 && w_right > 1e-9)
    wz_target = (right_fwd / w_right - left_fwd / w_left) / (2.0 * p.hip_y);
  s.ang_vel[2] += (wz_target - s.ang_vel[2]) * vel_alpha;

  // Vertical: first-order toward terrain + leg extension.
  double z_prev = s.pos[2];
  s.pos[2] += (z_target - s.pos[2]) * (p.policy_dt / p.z_tau);
  s.vel_body[2] = (s.pos[2] - z_prev) / p.policy_dt;

  // Base roll/pitch track the local terrain slope.
  double cy = std::cos(s.rpy[2]), sy = std::sin(s.rpy[2]);
  double h_front = height_at(field, s.pos[0] + 0.15 * cy, s.pos[1] + 0.15 * sy);
  double h_back = height_at(field, s.pos[0] - 0.15 * cy, s.pos[1] - 0.15 * sy);
  double h_left = height_at(field, s.pos[0] - 0.1 * sy, s.pos[1] + 0.1 * cy);
  double h_right = height_at(field, s.pos[0] + 0.1 * sy, s.pos[1] - 0.1 * cy);
  double pitch_target = -std::atan2(h_front - h_back, 0.3);
  double roll_target = std::atan2(h_right - h_left, 0.2);
  double roll_prev = s.rpy[0], pitch_prev = s.rpy[1];
  s.rpy[0] += (roll_target - s.rpy[0]) * (p.policy_dt / p.rp_tau);
  s.rpy[1] += (pitch_target - s.rpy[1]) * (p.policy_dt / p.rp_tau);
  s.ang_vel[0] = (s.rpy[0] - roll_prev) / p.policy_dt;
  s.ang_vel[1] = (s.rpy[1] - pitch_prev) / p.policy_dt;

  // Integrate the planar pose.
  s.rpy[2] += s.ang_vel[2] * p.policy_dt;
  s.pos[0] += (std::cos(s.rpy[2]) * s.vel_body[0] - std::sin(s.rpy[2]) * s.vel_body[1]) *
              p.policy_dt;
  s.pos[1] += (std::sin(s.rpy[2]) * s.vel_body[0] + std::cos(s.rpy[2]) * s.vel_body[1]) *
              p.policy_dt;

  update_feet(s, p);

  // Stumble: a foot moving forward whose toe runs into a riser face above its
  // clearance. Progress attenuates and the base takes a pitch kick.
  for (int k = 0; k < 4; ++k) {
    std::size_t ki = static_cast<std::size_t>(k);
    double dx = s.foot_world[ki][0] - foot_world_prev[ki][0];
    double dy = s.foot_world[ki][1] - foot_world_prev[ki][1];
    double heading_adv = dx * cy + dy * sy;
    if (heading_adv <= 1e-6) continue;
    double terrain_new = height_at(field, s.foot_world[ki][0], s.foot_world[ki][1]);
    if (terrain_new > s.foot_world[ki][2] + p.foot_clear_margin) {
      ++ev.stumbles;
      s.vel_body[0] *= p.stumble_attenuation;
      s.rpy[1] += p.stumble_pitch_kick * (episode_rng.uniform01() < 0.5 ? 1.0 : -1.0);
      s.rpy[0] += p.stumble_pitch_kick * (episode_rng.uniform(-1.0, 1.0));
    }
  }

  if (std::abs(s.rpy[0]) > p.fall_angle || std::abs(s.rpy[1]) > p.fall_angle) ev.fall = true;
  if (s.pos[2] < height_at(field, s.pos[0], s.pos[1]) - 0.03) ev.fall = true;

  s.prev_action2 = s.prev_action;
  s.prev_action = action;
  return ev;
}

}  // namespace mmloco::terrainsim
