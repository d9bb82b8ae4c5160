#include "mmloco/trainer/networks.hpp"

#include <cmath>

namespace mmloco::trainer {

using namespace mmloco::numerics;

namespace {

std::vector<std::size_t> mlp_dims(std::size_t in, const std::vector<std::size_t>& hidden,
                                  std::size_t out) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

}  // namespace

ModelSet::ModelSet(const ModelConfig& c, RngStream& rng)
    : cfg(c),
      proprio(c.enc, rng),
      extero(c.enc, rng),
      mixer(c.enc, rng),
      height_dec(c.enc, rng),
      obs_dec(c.enc, rng),
      anchor(c.enc, rng),
      actor("actor", mlp_dims(c.actor_input_dim(), c.actor_hidden, 12), rng),
      log_std("actor/log_std", Tensor::full({12}, c.init_log_std)),
      critic("critic", mlp_dims(c.critic_input_dim(), c.critic_hidden, 1), rng) {}

std::vector<Parameter*> ModelSet::parameters() {
  std::vector<Parameter*> ps;
  proprio.collect(ps);
  extero.collect(ps);
  mixer.collect(ps);
  height_dec.collect(ps);
  obs_dec.collect(ps);
  anchor.collect(ps);
  actor.collect(ps);
  ps.push_back(&log_std);
  critic.collect(ps);
  return ps;
}

void ModelSet::save(numerics::Checkpoint& ck, const std::string& prefix) const {
  auto ps = const_cast<ModelSet*>(this)->parameters();
  for (Parameter* p : ps) ck.put(prefix + p->name, p->value);
}

void ModelSet::load(const numerics::Checkpoint& ck, const std::string& prefix) {
  for (Parameter* p : parameters()) {
    const Tensor& t = ck.get(prefix + p->name);
    require(t.shape == p->value.shape, "checkpoint: shape mismatch for " + p->name);
    p->value = t;
  }
}

Var ModelSet::actor_mean(Ctx& ctx, const Var& obs_now, const Var& z_pe, const Var& v_input) {
  return actor(ctx, concat({obs_now, z_pe, v_input}, 1));
}

Var ModelSet::critic_value(Ctx& ctx, const Var& privileged) {
  Var v = critic(ctx, privileged);  // [B,1]
  return reshape(v, {v.val().shape[0]});
}

std::vector<AdamState> make_adam(ModelSet& models, double lr) {
  std::vector<AdamState> adam;
  for (Parameter* p : models.parameters()) adam.push_back(AdamState::for_shape(p->value.shape, lr));
  return adam;
}

void save_adam(const std::vector<AdamState>& adam, ModelSet& models, numerics::Checkpoint& ck) {
  auto ps = models.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ck.put("adam/" + ps[i]->name + "/m", adam[i].first_moment);
    ck.put("adam/" + ps[i]->name + "/v", adam[i].second_moment);
    ck.put_scalar("adam/" + ps[i]->name + "/t", static_cast<double>(adam[i].step_count));
  }
}

void load_adam(std::vector<AdamState>& adam, ModelSet& models, const numerics::Checkpoint& ck) {
  auto ps = models.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    adam[i].first_moment = ck.get("adam/" + ps[i]->name + "/m");
    adam[i].second_moment = ck.get("adam/" + ps[i]->name + "/v");
    adam[i].step_count = static_cast<long>(ck.get_scalar("adam/" + ps[i]->name + "/t"));
  }
}

Var gaussian_log_prob(const Var& actions, const Var& mu, const Var& log_std) {
  // log N(a; mu, s) summed over action dims.
  Var std = exp(log_std);  // [12], broadcast against [B,12]
  Var zed = div(sub(actions, mu), std);
  Var per_dim = sub(mul(constant(-0.5), square(zed)),
                    add(log_std, constant(0.5 * std::log(2.0 * M_PI))));
  return sum_axis(per_dim, 1);
}

Var gaussian_entropy(const Var& log_std) {
  double c = 0.5 * std::log(2.0 * M_PI * M_E);
  return add(sum_all(log_std), constant(c * static_cast<double>(log_std.val().numel())));
}

}  // namespace mmloco::trainer
