#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmloco/trainer/eval.hpp"

using namespace mmloco::trainer;
using namespace mmloco::numerics;
using mmloco::RngStream;

namespace {

TrainerConfig tiny_config() {
  TrainerConfig c;
  c.ppo.num_envs = 4;
  c.ppo.steps_per_iteration = 6;
  c.ppo.epochs = 2;
  c.ppo.minibatches = 2;
  c.iterations = 3;
  c.checkpoint_every = 0;
  auto& e = c.model.enc;
  e.mixer_channels = 12;
  e.mixer_blocks = 1;
  e.token_hidden = 6;
  e.point_hidden = 6;
  e.point_features = 12;
  e.fuse_hidden = 12;
  e.decoder_hidden = 12;
  e.max_points = 12;
  c.model.actor_hidden = {16};
  c.model.critic_hidden = {16};
  c.env.episode_steps = 25;
  return c;
}

std::string temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("mmloco_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("config loader: defaults, sections, unknown keys rejected") {
  auto cfg = load_trainer_config(mmloco::ConfigFile::parse_string(R"(
[run]
iterations = 7
[ppo]
envs = 8
gamma = 0.95
[env]
kinds = rough, stairs
)"));
  CHECK(cfg.iterations == 7);
  CHECK(cfg.ppo.num_envs == 8);
  CHECK(cfg.ppo.gamma == doctest::Approx(0.95));
  REQUIRE(cfg.env.kinds.size() == 2);
  CHECK(cfg.ppo.versatility_scale == doctest::Approx(0.1));
  CHECK(cfg.ppo.lambda_e == doctest::Approx(0.1));
  CHECK(cfg.beta.beta == doctest::Approx(5.0));

  CHECK_THROWS(load_trainer_config(mmloco::ConfigFile::parse_string("[ppo]\nenvz = 3\n")));
  CHECK_THROWS(load_trainer_config(mmloco::ConfigFile::parse_string("[ppo]\ngamma = 1.5\n")));
}

TEST_CASE("collect_rollouts: shapes, p_boot limits, determinism") {
  TrainerConfig cfg = tiny_config();
  RngStream mrng(3);
  ModelSet models(cfg.model, mrng);
  std::vector<mmloco::terrainsim::Environment> envs;
  envs.emplace_back(cfg.env, 5, 0);

  CollectConfig cc;
  cc.steps = 1;
  cc.p_boot = 0.0;
  RngStream r1(9);
  RolloutBatch b = collect_rollouts(envs, models, cc, r1);
  CHECK(b.rows() == 1);
  CHECK(b.actions.shape == Shape{1, 12});
  CHECK(b.logp_old.shape == Shape{1});
  // p_boot = 0: the policy consumed the observed velocity everywhere.
  for (double m : b.boot_mask.data) CHECK(m == 0.0);

  // p_boot = 1: mask everywhere.
  std::vector<mmloco::terrainsim::Environment> envs2;
  envs2.emplace_back(cfg.env, 5, 0);
  cc.p_boot = 1.0;
  RngStream r2(9);
  RolloutBatch b2 = collect_rollouts(envs2, models, cc, r2);
  for (double m : b2.boot_mask.data) CHECK(m == 1.0);

  // Same seeds end to end: identical batches.
  std::vector<mmloco::terrainsim::Environment> ea, eb;
  ea.emplace_back(cfg.env, 5, 0);
  eb.emplace_back(cfg.env, 5, 0);
  cc.steps = 4;
  cc.p_boot = 0.5;
  RngStream ra(11), rb(11);
  RolloutBatch x = collect_rollouts(ea, models, cc, ra);
  RolloutBatch y = collect_rollouts(eb, models, cc, rb);
  for (std::size_t i = 0; i < x.actions.numel(); ++i) CHECK(x.actions.data[i] == y.actions.data[i]);
  for (std::size_t i = 0; i < x.rewards.numel(); ++i) CHECK(x.rewards.data[i] == y.rewards.data[i]);
}

TEST_CASE("gae: closed-form cases") {
  RolloutBatch b;
  b.steps = 1;
  b.envs = 1;
  b.rewards = Tensor({1}, {1.0});
  b.values = Tensor({1}, {0.0});
  b.dones = Tensor({1}, {1.0});
  b.last_values = Tensor({1}, {0.0});
  AdvantageResult a = gae_advantages(b, 0.99, 0.95, false);
  CHECK(a.advantages.data[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.returns.data[0] == doctest::Approx(1.0).epsilon(1e-12));

  // Zero rewards and values: zero advantages.
  RolloutBatch z;
  z.steps = 3;
  z.envs = 2;
  z.rewards = Tensor::zeros({6});
  z.values = Tensor::zeros({6});
  z.dones = Tensor::zeros({6});
  z.last_values = Tensor::zeros({2});
  AdvantageResult az = gae_advantages(z, 0.99, 0.95, false);
  for (double v : az.advantages.data) CHECK(v == 0.0);

  // gamma = 0: advantage telescopes to r - V(s).
  RolloutBatch g;
  g.steps = 2;
  g.envs = 1;
  g.rewards = Tensor({2}, {0.7, -0.2});
  g.values = Tensor({2}, {0.3, 0.1});
  g.dones = Tensor::zeros({2});
  g.last_values = Tensor({1}, {0.5});
  AdvantageResult ag = gae_advantages(g, 0.0, 0.95, false);
  CHECK(ag.advantages.data[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(ag.advantages.data[1] == doctest::Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("ppo_update: zero advantages give zero clip loss; beta updates once") {
  TrainerConfig cfg = tiny_config();
  RngStream mrng(4);
  ModelSet models(cfg.model, mrng);
  std::vector<mmloco::terrainsim::Environment> envs;
  for (int e = 0; e < 2; ++e) envs.emplace_back(cfg.env, 6, e);

  CollectConfig cc;
  cc.steps = 4;
  RngStream crng(7);
  RolloutBatch b = collect_rollouts(envs, models, cc, crng);
  AdvantageResult adv = gae_advantages(b, 0.99, 0.95, false);
  for (double& v : adv.advantages.data) v = 0.0;

  mmloco::objectives::BetaSchedulerState beta = cfg.beta;
  double beta_before = beta.beta;
  RngStream urng(8);
  auto adam = make_adam(models, 1e-4);
  LossReport rep = ppo_update(b, adv, models, adam, cfg.ppo, beta, cfg.contrastive, urng);
  CHECK(!rep.fault);
  CHECK(rep.clip_loss == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(beta.beta != beta_before);  // recon > tau at init
  CHECK(beta.beta >= cfg.beta.beta_min);
  CHECK(beta.beta <= cfg.beta.beta_max);
}

TEST_CASE("ppo_update: aux scales at zero leave the pure PPO objective") {
  TrainerConfig cfg = tiny_config();
  RngStream mrng(5);
  ModelSet models(cfg.model, mrng);
  std::vector<mmloco::terrainsim::Environment> envs;
  for (int e = 0; e < 2; ++e) envs.emplace_back(cfg.env, 16, e);
  CollectConfig cc;
  cc.steps = 4;
  RngStream crng(17);
  RolloutBatch b = collect_rollouts(envs, models, cc, crng);
  AdvantageResult adv = gae_advantages(b, 0.99, 0.95);

  PPOConfig frozen = cfg.ppo;
  frozen.learning_rate = 0.0;
  frozen.epochs = 1;
  frozen.minibatches = 1;
  frozen.aux_scale = 0.0;
  frozen.lambda_e = 0.0;
  frozen.versatility_scale = 0.0;

  mmloco::objectives::BetaSchedulerState beta = cfg.beta;
  auto adam = make_adam(models, 0.0);
  RngStream u1(21);
  LossReport rep = ppo_update(b, adv, models, adam, frozen, beta, cfg.contrastive, u1);
  double pure = rep.clip_loss + frozen.value_coef * rep.value_loss -
                frozen.entropy_coef * rep.entropy;
  CHECK(rep.total == doctest::Approx(pure).epsilon(1e-10));

  // Doubling the versatility scale changes the total by exactly -0.1 * G.
  PPOConfig v1 = frozen;
  v1.versatility_scale = 0.1;
  PPOConfig v2 = frozen;
  v2.versatility_scale = 0.2;
  RngStream u2(21), u3(21);
  LossReport r1 = ppo_update(b, adv, models, adam, v1, beta, cfg.contrastive, u2);
  LossReport r2 = ppo_update(b, adv, models, adam, v2, beta, cfg.contrastive, u3);
  CHECK(r1.versatility == doctest::Approx(r2.versatility).epsilon(1e-12));
  CHECK(r2.total - r1.total == doctest::Approx(-0.1 * r1.versatility).epsilon(1e-7));
}

TEST_CASE("asymmetry: privileged inputs reach the critic, never the actor") {
  TrainerConfig cfg = tiny_config();
  RngStream mrng(6);
  ModelSet models(cfg.model, mrng);
  const auto& enc = cfg.model.enc;

  RngStream drng(31);
  Tensor stack = Tensor::zeros({1, enc.slots(), 45});
  for (double& v : stack.data) v = drng.uniform(-1, 1);
  Tensor pts = Tensor::zeros({1, enc.max_points, 3});
  for (double& v : pts.data) v = drng.uniform(0.5, 1.5);
  Tensor priv_a = Tensor::zeros({1, models.cfg.critic_input_dim()});
  Tensor priv_b = Tensor::full({1, models.cfg.critic_input_dim()}, 3.21);

  auto act_with = [&](const Tensor& priv) {
    Tape tape;
    Ctx ctx(tape, false);
    auto zp = models.proprio.forward(ctx, constant(stack), Tensor::zeros({1, enc.z_proprio}));
    auto ze = models.extero.forward(ctx, constant(pts), Tensor::zeros({1, enc.z_extero}));
    auto zpe = models.mixer.forward(ctx, zp.z.sample, ze.z.sample,
                                    Tensor::zeros({1, enc.z_fused()}));
    Var mu = models.actor_mean(ctx, constant(Tensor::zeros({1, 45})), zpe.sample, zp.velocity);
    Var value = models.critic_value(ctx, constant(priv));
    return std::make_pair(mu.val(), value.val());
  };
  auto [mu_a, val_a] = act_with(priv_a);
  auto [mu_b, val_b] = act_with(priv_b);
  for (std::size_t i = 0; i < mu_a.numel(); ++i) CHECK(mu_a.data[i] == mu_b.data[i]);
  CHECK(val_a.data[0] != val_b.data[0]);
}

TEST_CASE("trainer: identical seeds produce bit-identical metrics") {
  TrainerConfig cfg = tiny_config();
  std::string da = temp_dir("det_a"), db = temp_dir("det_b");
  Trainer a(cfg, 42, da);
  Trainer b(cfg, 42, db);
  a.run(3);
  b.run(3);
  auto la = read_lines(da + "/metrics.csv");
  auto lb = read_lines(db + "/metrics.csv");
  REQUIRE(la.size() == lb.size());
  REQUIRE(la.size() == 4);  // header + 3 rows
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i] == lb[i]);

  // Every numeric cell in every row is finite.
  for (std::size_t i = 1; i < la.size(); ++i) {
    std::istringstream ss(la[i]);
    std::string cell;
    while (std::getline(ss, cell, ',')) CHECK(std::isfinite(std::stod(cell)));
  }
}

TEST_CASE("trainer: checkpoint resume continues bit-exactly") {
  TrainerConfig cfg = tiny_config();
  std::string da = temp_dir("resume_a"), db = temp_dir("resume_b");

  Trainer a(cfg, 7, da);
  a.run(4);

  Trainer b1(cfg, 7, db);
  b1.run(2);
  std::string ckpt = db + "/mid.waq";
  b1.save_checkpoint(ckpt);

  std::string dc = temp_dir("resume_c");
  Trainer b2(cfg, 7, dc);
  b2.load_checkpoint(ckpt);
  CHECK(b2.iteration() == 2);
  b2.run(2);

  auto la = read_lines(da + "/metrics.csv");
  auto lc = read_lines(dc + "/metrics.csv");
  REQUIRE(la.size() == 5);   // header + 4
  REQUIRE(lc.size() == 3);   // header + rows 3..4
  CHECK(lc[1] == la[3]);
  CHECK(lc[2] == la[4]);
}

TEST_CASE("trainer: checkpoint save/load round-trips the model bit-exactly") {
  TrainerConfig cfg = tiny_config();
  std::string d = temp_dir("roundtrip");
  Trainer t(cfg, 9, d);
  t.run(1);
  std::string p1 = d + "/a.waq";
  t.save_checkpoint(p1);
  Trainer t2(cfg, 9, temp_dir("roundtrip2"));
  t2.load_checkpoint(p1);
  std::string p2 = d + "/b.waq";
  t2.save_checkpoint(p2);
  auto c1 = Checkpoint::load(p1);
  auto c2 = Checkpoint::load(p2);
  auto names = c1.names();
  REQUIRE(names == c2.names());
  for (const auto& n : names) {
    const Tensor& x = c1.get(n);
    const Tensor& y = c2.get(n);
    REQUIRE(x.shape == y.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      if (x.data[i] != y.data[i] && !(std::isnan(x.data[i]) && std::isnan(y.data[i]))) {
        CHECK(n == "");  // report the offending record name
      }
    }
  }
}

TEST_CASE("evaluate_stairs: single robot, deterministic 0/1 result") {
  TrainerConfig cfg = tiny_config();
  RngStream mrng(10);
  ModelSet models(cfg.model, mrng);
  auto r1 = evaluate_stairs(models, cfg, {0.10}, 0.3, 1, 1.0, 5);
  auto r2 = evaluate_stairs(models, cfg, {0.10}, 0.3, 1, 1.0, 5);
  REQUIRE(r1.size() == 1);
  CHECK((r1[0].success_rate == 0.0 || r1[0].success_rate == 1.0));
  CHECK(r1[0].success_rate == r2[0].success_rate);
  CHECK_THROWS(evaluate_stairs(models, cfg, {}, 0.3, 1, 1.0, 5));
}

TEST_CASE("export_embeddings: row/column counts, determinism, bad scenario") {
  TrainerConfig cfg = tiny_config();
  RngStream mrng(11);
  ModelSet models(cfg.model, mrng);
  std::string d = temp_dir("embed");
  std::string f1 = d + "/e1.csv";
  std::string f2 = d + "/e2.csv";
  export_embeddings(models, cfg, "flat", 50, 3, f1);
  export_embeddings(models, cfg, "flat", 50, 3, f2);
  auto l1 = read_lines(f1);
  auto l2 = read_lines(f2);
  REQUIRE(l1.size() == 51);  // header + 50 rows
  CHECK(l1 == l2);
  // 1 + 32 + 32 + 64 columns.
  std::istringstream ss(l1[1]);
  std::string cell;
  int cols = 0;
  while (std::getline(ss, cell, ',')) ++cols;
  CHECK(cols == 129);

  CHECK_THROWS_WITH_AS(export_embeddings(models, cfg, "volcano", 5, 3, d + "/x.csv"),
                       doctest::Contains("valid:"), std::invalid_argument);
}
