#include "mmloco/terrainsim/environment.hpp"

#include <cmath>

#include "mmloco/perception/perturb.hpp"

namespace mmloco::terrainsim {

using perception::AlignmentBias;
using perception::Mat3;
using perception::PointCloud;
using perception::SE3Transform;
using perception::Vec3;
using perception::VoxelGridSpec;

Environment::Environment(EnvParams params, std::uint64_t global_seed, int env_id)
    : p_(std::move(params)), global_seed_(global_seed), env_id_(env_id),
      memory_(p_.memory_depth) {
  agent_.level = p_.initial_level;
  reset();
}

SE3Transform Environment::true_pose_yaw() const {
  return {Mat3::yaw(robot_.rpy[2]), {robot_.pos[0], robot_.pos[1], robot_.pos[2]}};
}

SE3Transform Environment::estimated_pose() const {
  return {Mat3::yaw(robot_.rpy[2]), {est_pos_[0], est_pos_[1], est_pos_[2]}};
}

void Environment::set_fixed_terrain(const TerrainField& field) {
  fixed_terrain_ = field;
  reset();
}

void Environment::reset() {
  episode_index_ += 1;
  episode_seed_ = RngStream::mix(global_seed_ ^ RngStream::mix(static_cast<std::uint64_t>(env_id_) ^
                                                               RngStream::mix(static_cast<std::uint64_t>(episode_index_))));
  episode_rng_ = RngStream::keyed({global_seed_, static_cast<std::uint64_t>(env_id_),
                                   static_cast<std::uint64_t>(episode_index_), 0x657069ULL});

  if (fixed_terrain_) {
    terrain_ = *fixed_terrain_;
  } else {
    TerrainKind kind = p_.kinds[episode_rng_.index(p_.kinds.size())];
    terrain_ = generate_terrain(kind, agent_.level, episode_seed_);
  }

  rand_ = p_.randomize ? randomize_episode(episode_rng_, p_.ranges) : EpisodeRandomization{};

  reset_robot(robot_, p_.robot, terrain_, 0.0, 0.0, 0.0);
  est_pos_ = robot_.pos;
  spawn_xy_ = {robot_.pos[0], robot_.pos[1]};
  step_ = 0;
  episode_return_ = 0.0;
  max_displacement_ = 0.0;

  command_ = {episode_rng_.uniform(command_range_.vx_lo, command_range_.vx_hi),
              episode_rng_.uniform(-command_range_.vy_abs, command_range_.vy_abs),
              episode_rng_.uniform(-command_range_.wz_abs, command_range_.wz_abs)};

  history_.clear();
  memory_.clear();
  capture_exteroception();
  refresh_observation();
}

void Environment::capture_exteroception() {
  // Ground-truth surface points over the policy grid footprint, expressed in
  // the (yaw-only) body frame, then pushed through the perturbation stack.
  VoxelGridSpec spec = VoxelGridSpec::policy();
  double cy = std::cos(robot_.rpy[2]), sy = std::sin(robot_.rpy[2]);
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(spec.rows * spec.cols));
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      Vec3 b = spec.cell_center(r, c);
      double wx = robot_.pos[0] + cy * b.x - sy * b.y;
      double wy = robot_.pos[1] + sy * b.x + cy * b.y;
      double wz = height_at(terrain_, wx, wy);
      cloud.points.push_back({b.x, b.y, wz - robot_.pos[2]});
    }

  if (p_.extero_perturb) {
    std::uint64_t step_key = static_cast<std::uint64_t>(step_);
    cloud = perception::apply_alignment_bias(cloud, rand_.perturb.bias);
    cloud = perception::apply_noise_model(cloud, rand_.perturb, episode_seed_, step_key);
    double lo, hi;
    tier_band(rand_.extero_tier, lo, hi);
    cloud = perception::apply_tier_noise(cloud, lo, hi, episode_seed_, step_key);
    cloud = perception::apply_pruning(cloud, rand_.perturb, -p_.robot.standing_height,
                                      episode_seed_, step_key);
  }
  cloud = perception::voxel_downsample(cloud, spec.leaf);
  memory_.push(std::move(cloud), estimated_pose());
}

perception::PointCloud Environment::assembled_cloud() const {
  return memory_.assemble(estimated_pose());
}

std::array<double, 3> Environment::true_velocity() const {
  return {robot_.vel_body[0], robot_.vel_body[1], robot_.vel_body[2]};
}

std::array<double, kProprioDim> Environment::true_proprio() const {
  std::array<double, kProprioDim> o{};
  std::size_t i = 0;
  for (int k = 0; k < 3; ++k) o[i++] = robot_.ang_vel[static_cast<std::size_t>(k)];
  // Projected gravity from roll/pitch (unit vector, body frame).
  double cr = std::cos(robot_.rpy[0]), sr = std::sin(robot_.rpy[0]);
  double cp = std::cos(robot_.rpy[1]), sp = std::sin(robot_.rpy[1]);
  o[i++] = sp;
  o[i++] = -cp * sr;
  o[i++] = -cp * cr;
  for (int k = 0; k < 3; ++k) o[i++] = command_[static_cast<std::size_t>(k)];
  for (int j = 0; j < 12; ++j)
    o[i++] = robot_.q[static_cast<std::size_t>(j)] -
             p_.robot.nominal_pose[static_cast<std::size_t>(j % 3)];
  for (int j = 0; j < 12; ++j) o[i++] = robot_.qd[static_cast<std::size_t>(j)];
  for (int j = 0; j < 12; ++j) o[i++] = robot_.prev_action[static_cast<std::size_t>(j)];
  return o;
}

void Environment::refresh_observation() {
  std::array<double, kProprioDim> o = true_proprio();
  RngStream nrng = RngStream::keyed({episode_seed_, static_cast<std::uint64_t>(step_), 0x6f6273ULL});
  if (p_.obs_noise) {
    const ObservationNoise& nb = p_.noise_bands;
    for (int k = 0; k < 3; ++k) o[static_cast<std::size_t>(k)] += nrng.uniform(-nb.ang_vel, nb.ang_vel);
    for (int k = 3; k < 6; ++k) o[static_cast<std::size_t>(k)] += nrng.uniform(nb.gravity_lo, nb.gravity_hi);
    for (int k = 9; k < 21; ++k) o[static_cast<std::size_t>(k)] += nrng.uniform(-nb.joint_pos, nb.joint_pos);
    for (int k = 21; k < 33; ++k) o[static_cast<std::size_t>(k)] += nrng.uniform(-nb.joint_vel, nb.joint_vel);
  }
  obs_.proprio = o;
  for (int k = 0; k < 3; ++k) {
    obs_.v_obs[static_cast<std::size_t>(k)] = robot_.vel_body[static_cast<std::size_t>(k)];
    if (p_.obs_noise)
      obs_.v_obs[static_cast<std::size_t>(k)] +=
          nrng.uniform(-p_.noise_bands.lin_vel, p_.noise_bands.lin_vel);
  }

  history_.push_front(o);
  while (history_.size() > p_.history + 1) history_.pop_back();

  // Privileged bundle: noiseless truths plus the episode's physical
  // parameters; the surrogate applies no external disturbances, so that slot
  // stays zero.
  std::array<double, kProprioDim> t = true_proprio();
  std::size_t i = 0;
  priv_.bundle[i++] = t[3];
  priv_.bundle[i++] = t[4];
  priv_.bundle[i++] = t[5];
  for (int k = 0; k < 3; ++k) priv_.bundle[i++] = robot_.vel_body[static_cast<std::size_t>(k)];
  for (int k = 0; k < 3; ++k) priv_.bundle[i++] = robot_.ang_vel[static_cast<std::size_t>(k)];
  for (int j = 0; j < 12; ++j)
    priv_.bundle[i++] = robot_.q[static_cast<std::size_t>(j)] -
                        p_.robot.nominal_pose[static_cast<std::size_t>(j % 3)];
  for (int j = 0; j < 12; ++j) priv_.bundle[i++] = robot_.qd[static_cast<std::size_t>(j)];
  for (int k = 0; k < 6; ++k) priv_.bundle[i++] = 0.0;  // external wrench
  priv_.bundle[i++] = rand_.friction;
  priv_.bundle[i++] = rand_.kd_factor;
  priv_.bundle[i++] = rand_.kp_factor;
  priv_.bundle[i++] = rand_.motor_strength;
  priv_.bundle[i++] = rand_.payload_kg;
  for (int k = 0; k < 3; ++k) priv_.bundle[i++] = rand_.com_shift_mm[static_cast<std::size_t>(k)] / 1000.0;
  for (int k = 0; k < 4; ++k)
    for (int a = 0; a < 3; ++a)
      priv_.bundle[i++] = robot_.foot_body[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)];

  // Privileged height map: 34x22 body-frame grid, yaw-rotated, heights
  // relative to the ground directly under the base.
  VoxelGridSpec spec = VoxelGridSpec::privileged();
  priv_.height_map.assign(static_cast<std::size_t>(spec.rows * spec.cols), 0.0);
  double cy = std::cos(robot_.rpy[2]), sy = std::sin(robot_.rpy[2]);
  double ground0 = height_at(terrain_, robot_.pos[0], robot_.pos[1]);
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      Vec3 b = spec.cell_center(r, c);
      double wx = robot_.pos[0] + cy * b.x - sy * b.y;
      double wy = robot_.pos[1] + sy * b.x + cy * b.y;
      priv_.height_map[static_cast<std::size_t>(r * spec.cols + c)] =
          height_at(terrain_, wx, wy) - ground0;
    }
}

std::vector<double> Environment::proprio_stack() const {
  std::size_t slots = p_.history + 1;
  std::vector<double> out(slots * kProprioDim, 0.0);
  for (std::size_t s = 0; s < history_.size() && s < slots; ++s)
    for (std::size_t k = 0; k < kProprioDim; ++k) out[s * kProprioDim + k] = history_[s][k];
  return out;
}

EnvStepResult Environment::step(const std::array<double, 12>& action,
                                const std::array<double, 3>& v_hat) {
  EnvStepResult res;
  std::array<std::array<double, 3>, 4> foot_world_prev = robot_.foot_world;
  std::array<double, 12> delayed = robot_.prev_action;

  res.events = step_robot(robot_, action, delayed, terrain_, p_.robot, rand_, episode_rng_);
  step_ += 1;

  // Odometry: orientation from the (IMU-grade) true yaw, translation from the
  // supplied velocity estimate.
  double cy = std::cos(robot_.rpy[2]), sy = std::sin(robot_.rpy[2]);
  est_pos_[0] += (cy * v_hat[0] - sy * v_hat[1]) * p_.robot.policy_dt;
  est_pos_[1] += (sy * v_hat[0] + cy * v_hat[1]) * p_.robot.policy_dt;
  est_pos_[2] = robot_.pos[2];

  if (!res.events.fault) {
    RewardInputs in;
    in.cmd_vx = command_[0];
    in.cmd_vy = command_[1];
    in.cmd_wz = command_[2];
    for (int k = 0; k < 3; ++k) {
      in.vel_body[k] = robot_.vel_body[static_cast<std::size_t>(k)];
      in.ang_vel[k] = robot_.ang_vel[static_cast<std::size_t>(k)];
    }
    std::array<double, kProprioDim> t = true_proprio();
    in.gravity_body[0] = t[3];
    in.gravity_body[1] = t[4];
    in.gravity_body[2] = t[5];
    for (int j = 0; j < 12; ++j) {
      in.joint_vel[j] = robot_.qd[static_cast<std::size_t>(j)];
      in.joint_acc[j] = robot_.joint_acc[static_cast<std::size_t>(j)];
      in.torque[j] = robot_.torque[static_cast<std::size_t>(j)];
      in.action[j] = action[static_cast<std::size_t>(j)];
      in.action_prev[j] = delayed[static_cast<std::size_t>(j)];
      in.action_prev2[j] = robot_.prev_action2[static_cast<std::size_t>(j)];
    }
    in.body_height = robot_.pos[2] - height_at(terrain_, robot_.pos[0], robot_.pos[1]);
    in.body_height_des = p_.robot.standing_height;
    in.foot_height_des = p_.foot_height_des;
    for (int k = 0; k < 4; ++k) {
      std::size_t ki = static_cast<std::size_t>(k);
      in.foot_height[k] = robot_.foot_world[ki][2] -
                          height_at(terrain_, robot_.foot_world[ki][0], robot_.foot_world[ki][1]);
      double dx = robot_.foot_world[ki][0] - foot_world_prev[ki][0];
      double dy = robot_.foot_world[ki][1] - foot_world_prev[ki][1];
      in.foot_xy_speed[k] = std::sqrt(dx * dx + dy * dy) / p_.robot.policy_dt;
    }
    res.terms = compute_rewards(in);
    res.reward = res.terms.weighted_total(weights_.effective());
  }

  episode_return_ += res.reward;
  double ddx = robot_.pos[0] - spawn_xy_[0];
  double ddy = robot_.pos[1] - spawn_xy_[1];
  max_displacement_ = std::max(max_displacement_, std::sqrt(ddx * ddx + ddy * ddy));

  if (record_events_) {
    for (int e = 0; e < res.events.stumbles; ++e)
      event_log_.push_back({step_, "stumble", robot_.pos[0], robot_.pos[1]});
    if (res.events.fall) event_log_.push_back({step_, "fall", robot_.pos[0], robot_.pos[1]});
    if (res.events.fault) event_log_.push_back({step_, "fault", robot_.pos[0], robot_.pos[1]});
  }

  res.timeout = step_ >= p_.episode_steps;
  res.done = res.timeout || res.events.fall || res.events.fault;
  if (res.done) {
    res.episode_return = episode_return_;
    res.traversed_fraction = max_displacement_ / terrain_.course_length;
    res.completed_level = agent_.level;
    if (p_.curriculum) curriculum_update_agent(agent_, res.traversed_fraction, episode_rng_);
    reset();
    return res;
  }

  if (step_ % p_.extero_period == 0) capture_exteroception();
  refresh_observation();
  return res;
}

namespace {

numerics::Tensor to_tensor(const std::vector<double>& v) {
  return numerics::Tensor({v.size()}, v);
}

}  // namespace

void Environment::save_state(numerics::Checkpoint& ck, const std::string& prefix) const {
  using numerics::Tensor;
  std::vector<double> core;
  for (double v : robot_.pos) core.push_back(v);
  for (double v : robot_.rpy) core.push_back(v);
  for (double v : robot_.vel_body) core.push_back(v);
  for (double v : robot_.ang_vel) core.push_back(v);
  for (double v : robot_.q) core.push_back(v);
  for (double v : robot_.qd) core.push_back(v);
  for (double v : robot_.torque) core.push_back(v);
  for (double v : robot_.joint_acc) core.push_back(v);
  for (const auto& f : robot_.foot_body)
    for (double v : f) core.push_back(v);
  for (const auto& f : robot_.foot_world)
    for (double v : f) core.push_back(v);
  for (bool b : robot_.stance) core.push_back(b ? 1.0 : 0.0);
  for (double v : robot_.prev_action) core.push_back(v);
  for (double v : robot_.prev_action2) core.push_back(v);
  ck.put(prefix + "robot", to_tensor(core));

  std::vector<double> misc = {static_cast<double>(episode_index_),
                              static_cast<double>(step_),
                              episode_return_,
                              max_displacement_,
                              spawn_xy_[0],
                              spawn_xy_[1],
                              est_pos_[0],
                              est_pos_[1],
                              est_pos_[2],
                              command_[0],
                              command_[1],
                              command_[2],
                              static_cast<double>(agent_.level),
                              static_cast<double>(agent_.fail_streak),
                              command_range_.vx_lo,
                              command_range_.vx_hi};
  ck.put(prefix + "misc", to_tensor(misc));
  ck.put_u64(prefix + "episode_seed", episode_seed_);
  ck.put_u64(prefix + "rng", episode_rng_.state());

  std::vector<double> randv = {rand_.payload_kg, rand_.kp_factor, rand_.kd_factor,
                               rand_.motor_strength, rand_.com_shift_mm[0], rand_.com_shift_mm[1],
                               rand_.com_shift_mm[2], rand_.friction, rand_.system_delay_ms,
                               static_cast<double>(static_cast<int>(rand_.extero_tier)),
                               rand_.perturb.mu_x, rand_.perturb.mu_y, rand_.perturb.mu_z,
                               rand_.perturb.sigma_x, rand_.perturb.sigma_y, rand_.perturb.sigma_z,
                               rand_.perturb.bias.dx, rand_.perturb.bias.dy, rand_.perturb.bias.dz,
                               rand_.perturb.bias.droll, rand_.perturb.bias.dpitch,
                               rand_.perturb.bias.dyaw, rand_.perturb.prune_base};
  ck.put(prefix + "rand", to_tensor(randv));

  // Terrain regenerates from its key; only the key travels.
  std::vector<double> terrv = {static_cast<double>(static_cast<int>(terrain_.kind)),
                               static_cast<double>(terrain_.level), terrain_.course_length};
  ck.put(prefix + "terrain", to_tensor(terrv));
  ck.put_u64(prefix + "terrain_seed", terrain_.seed);

  std::vector<double> hist;
  for (const auto& h : history_)
    for (double v : h) hist.push_back(v);
  ck.put(prefix + "history", Tensor({history_.size(), kProprioDim}, hist));

  const auto& entries = memory_.entries();
  ck.put_scalar(prefix + "memory_count", static_cast<double>(entries.size()));
  int idx = 0;
  for (const auto& e : entries) {
    std::vector<double> pts;
    for (const auto& pt : e.cloud.points) {
      pts.push_back(pt.x);
      pts.push_back(pt.y);
      pts.push_back(pt.z);
    }
    ck.put(prefix + "memory" + std::to_string(idx) + "/points",
           Tensor({e.cloud.points.size(), 3}, pts));
    std::vector<double> pose;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) pose.push_back(e.pose.rotation.at(r, c));
    pose.push_back(e.pose.translation.x);
    pose.push_back(e.pose.translation.y);
    pose.push_back(e.pose.translation.z);
    ck.put(prefix + "memory" + std::to_string(idx) + "/pose", to_tensor(pose));
    ++idx;
  }
}

void Environment::load_state(const numerics::Checkpoint& ck, const std::string& prefix) {
  const auto& core = ck.get(prefix + "robot").data;
  std::size_t i = 0;
  for (double& v : robot_.pos) v = core[i++];
  for (double& v : robot_.rpy) v = core[i++];
  for (double& v : robot_.vel_body) v = core[i++];
  for (double& v : robot_.ang_vel) v = core[i++];
  for (double& v : robot_.q) v = core[i++];
  for (double& v : robot_.qd) v = core[i++];
  for (double& v : robot_.torque) v = core[i++];
  for (double& v : robot_.joint_acc) v = core[i++];
  for (auto& f : robot_.foot_body)
    for (double& v : f) v = core[i++];
  for (auto& f : robot_.foot_world)
    for (double& v : f) v = core[i++];
  for (std::size_t k = 0; k < 4; ++k) robot_.stance[k] = core[i++] != 0.0;
  for (double& v : robot_.prev_action) v = core[i++];
  for (double& v : robot_.prev_action2) v = core[i++];

  const auto& misc = ck.get(prefix + "misc").data;
  i = 0;
  episode_index_ = static_cast<long>(misc[i++]);
  step_ = static_cast<long>(misc[i++]);
  episode_return_ = misc[i++];
  max_displacement_ = misc[i++];
  spawn_xy_[0] = misc[i++];
  spawn_xy_[1] = misc[i++];
  est_pos_[0] = misc[i++];
  est_pos_[1] = misc[i++];
  est_pos_[2] = misc[i++];
  command_[0] = misc[i++];
  command_[1] = misc[i++];
  command_[2] = misc[i++];
  agent_.level = static_cast<int>(misc[i++]);
  agent_.fail_streak = static_cast<int>(misc[i++]);
  command_range_.vx_lo = misc[i++];
  command_range_.vx_hi = misc[i++];
  episode_seed_ = ck.get_u64(prefix + "episode_seed");
  episode_rng_.set_state(ck.get_u64(prefix + "rng"));

  const auto& randv = ck.get(prefix + "rand").data;
  i = 0;
  rand_.payload_kg = randv[i++];
  rand_.kp_factor = randv[i++];
  rand_.kd_factor = randv[i++];
  rand_.motor_strength = randv[i++];
  rand_.com_shift_mm[0] = randv[i++];
  rand_.com_shift_mm[1] = randv[i++];
  rand_.com_shift_mm[2] = randv[i++];
  rand_.friction = randv[i++];
  rand_.system_delay_ms = randv[i++];
  rand_.extero_tier = static_cast<ExteroNoiseTier>(static_cast<int>(randv[i++]));
  rand_.perturb.mu_x = randv[i++];
  rand_.perturb.mu_y = randv[i++];
  rand_.perturb.mu_z = randv[i++];
  rand_.perturb.sigma_x = randv[i++];
  rand_.perturb.sigma_y = randv[i++];
  rand_.perturb.sigma_z = randv[i++];
  rand_.perturb.bias.dx = randv[i++];
  rand_.perturb.bias.dy = randv[i++];
  rand_.perturb.bias.dz = randv[i++];
  rand_.perturb.bias.droll = randv[i++];
  rand_.perturb.bias.dpitch = randv[i++];
  rand_.perturb.bias.dyaw = randv[i++];
  rand_.perturb.prune_base = randv[i++];

  const auto& terrv = ck.get(prefix + "terrain").data;
  TerrainKind kind = static_cast<TerrainKind>(static_cast<int>(terrv[0]));
  int level = static_cast<int>(terrv[1]);
  std::uint64_t tseed = ck.get_u64(prefix + "terrain_seed");
  if (fixed_terrain_) {
    terrain_ = *fixed_terrain_;
  } else {
    terrain_ = generate_terrain(kind, level, tseed);
    terrain_.course_length = terrv[2];
  }

  const auto& hist = ck.get(prefix + "history");
  history_.clear();
  for (std::size_t r = 0; r < hist.shape[0]; ++r) {
    std::array<double, kProprioDim> h{};
    for (std::size_t c = 0; c < kProprioDim; ++c) h[c] = hist.data[r * kProprioDim + c];
    history_.push_back(h);
  }

  memory_.clear();
  int count = static_cast<int>(ck.get_scalar(prefix + "memory_count"));
  for (int m = 0; m < count; ++m) {
    const auto& pts = ck.get(prefix + "memory" + std::to_string(m) + "/points");
    PointCloud cloud;
    for (std::size_t r = 0; r < pts.shape[0]; ++r)
      cloud.points.push_back({pts.data[r * 3], pts.data[r * 3 + 1], pts.data[r * 3 + 2]});
    const auto& pose = ck.get(prefix + "memory" + std::to_string(m) + "/pose").data;
    SE3Transform t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t.rotation.at(r, c) = pose[static_cast<std::size_t>(r * 3 + c)];
    t.translation = {pose[9], pose[10], pose[11]};
    memory_.push(std::move(cloud), t);
  }

  // Rebuild the derived observation caches.
  history_.pop_front();  // refresh_observation pushes the newest frame back on
  refresh_observation();
}

}  // namespace mmloco::terrainsim
