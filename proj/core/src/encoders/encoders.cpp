#include "mmloco/encoders/encoders.hpp"

#include <stdexcept>

namespace mmloco::encoders {

using namespace mmloco::numerics;

GaussianLatentVar constrained_sample(const Var& mean, const Var& raw_std, const Tensor& eps,
                                     double sigma_min, double sigma_max) {
  require(mean.val().same_shape(raw_std.val()), "constrained_sample: mean/raw_std shape mismatch");
  require(mean.val().same_shape(eps), "constrained_sample: eps shape mismatch");
  GaussianLatentVar out;
  out.mean = mean;
  out.std = clamp(softplus(raw_std), sigma_min, sigma_max);
  out.sample = add(mean, mul(out.std, constant(eps)));
  return out;
}

Var confidence_mask(const Var& point_stats) {
  for (double v : point_stats.val().data)
    if (v < 0.0) throw std::invalid_argument("confidence_mask: negative statistic");
  return sub(constant(1.0), tanh(point_stats));
}

// ---------------------------------------------------------------------------
// ProprioEncoder

ProprioEncoder::ProprioEncoder(const EncoderConfig& cfg, RngStream& rng)
    : cfg_(cfg),
      embed_("proprio/embed", cfg.proprio_dim, cfg.mixer_channels, rng),
      mean_head_("proprio/mean", cfg.slots() * cfg.mixer_channels, cfg.z_proprio, rng),
      std_head_("proprio/std", cfg.slots() * cfg.mixer_channels, cfg.z_proprio, rng),
      vel_head_("proprio/vel", cfg.slots() * cfg.mixer_channels, 3, rng) {
  for (std::size_t b = 0; b < cfg.mixer_blocks; ++b) {
    std::string base = "proprio/block" + std::to_string(b);
    blocks_.push_back(Block{
        LayerNormParams(base + "/ln_t", cfg.mixer_channels),
        Linear(base + "/tok_a", cfg.slots(), cfg.token_hidden, rng),
        Linear(base + "/tok_b", cfg.token_hidden, cfg.slots(), rng),
        LayerNormParams(base + "/ln_c", cfg.mixer_channels),
        Linear(base + "/ch_a", cfg.mixer_channels, cfg.mixer_channels, rng),
        Linear(base + "/ch_b", cfg.mixer_channels, cfg.mixer_channels, rng),
    });
  }
}

ProprioEncoder::Output ProprioEncoder::forward(Ctx& ctx, const Var& stack, const Tensor& eps) {
  const Shape& s = stack.val().shape;
  require(s.size() == 3 && s[1] == cfg_.slots() && s[2] == cfg_.proprio_dim,
          "proprio_encode: expected [B," + std::to_string(cfg_.slots()) + "," +
              std::to_string(cfg_.proprio_dim) + "], got " + shape_str(s));
  std::size_t B = s[0], T = cfg_.slots(), C = cfg_.mixer_channels;

  // Tokens are the time slots; embed features into C channels per token.
  Var h = reshape(embed_(ctx, reshape(stack, {B * T, cfg_.proprio_dim})), {B, T, C});
  for (Block& blk : blocks_) {
    // Token mixing acts across time per channel.
    Var u = blk.ln_token(ctx, h);
    Var ut = reshape(transpose_12(u), {B * C, T});
    Var mixed = blk.token_b(ctx, elu(blk.token_a(ctx, ut)));
    h = add(h, transpose_12(reshape(mixed, {B, C, T})));
    // Channel mixing acts across channels per time slot.
    Var v = blk.ln_channel(ctx, h);
    Var vc = reshape(v, {B * T, C});
    Var mixed_c = blk.channel_b(ctx, elu(blk.channel_a(ctx, vc)));
    h = add(h, reshape(mixed_c, {B, T, C}));
  }
  Var flat = reshape(h, {B, T * C});
  Output out;
  out.z = constrained_sample(mean_head_(ctx, flat), std_head_(ctx, flat), eps, cfg_.sigma_min,
                             cfg_.sigma_max);
  out.velocity = vel_head_(ctx, flat);
  return out;
}

void ProprioEncoder::collect(std::vector<Parameter*>& out) {
  embed_.collect(out);
  for (Block& b : blocks_) {
    b.ln_token.collect(out);
    b.token_a.collect(out);
    b.token_b.collect(out);
    b.ln_channel.collect(out);
    b.channel_a.collect(out);
    b.channel_b.collect(out);
  }
  mean_head_.collect(out);
  std_head_.collect(out);
  vel_head_.collect(out);
}

// ---------------------------------------------------------------------------
// ExteroEncoder

ExteroEncoder::ExteroEncoder(const EncoderConfig& cfg, RngStream& rng)
    : cfg_(cfg),
      point_a_("extero/point_a", 3, cfg.point_hidden, rng),
      point_b_("extero/point_b", cfg.point_hidden, cfg.point_features, rng),
      mean_head_("extero/mean", cfg.point_features, cfg.z_extero, rng),
      std_head_("extero/std", cfg.point_features, cfg.z_extero, rng) {}

ExteroEncoder::Output ExteroEncoder::forward(Ctx& ctx, const Var& points, const Tensor& eps,
                                             bool use_filter) {
  const Shape& s = points.val().shape;
  require(s.size() == 3 && s[2] == 3,
          "extero_encode: expected [B,N,3], got " + shape_str(s));
  require(s[1] >= 1, "extero_encode: needs at least one (possibly sentinel) point");
  std::size_t B = s[0], N = s[1], F = cfg_.point_features;

  Var fp = reshape(points, {B * N, 3});
  Var feat = reshape(elu(point_b_(ctx, elu(point_a_(ctx, fp)))), {B, N, F});

  // Per-point statistic: RMS deviation of the point's feature vector from the
  // cloud's mean feature vector.
  Var mean_feat = mean_axis(feat, 1);                       // [B,F]
  Var dev = sub(feat, expand_axis1(mean_feat, N));          // [B,N,F]
  Var stats = sqrt(add(mean_axis(square(dev), 2), constant(1e-12)));  // [B,N]

  Output out;
  out.point_stats = stats;
  out.mask = confidence_mask(stats);
  Var gated = use_filter ? mul(feat, expand_last(out.mask, F)) : feat;
  out.pooled = max_axis(gated, 1);  // [B,F]
  out.z = constrained_sample(mean_head_(ctx, out.pooled), std_head_(ctx, out.pooled), eps,
                             cfg_.sigma_min, cfg_.sigma_max);
  return out;
}

void ExteroEncoder::collect(std::vector<Parameter*>& out) {
  point_a_.collect(out);
  point_b_.collect(out);
  mean_head_.collect(out);
  std_head_.collect(out);
}

// ---------------------------------------------------------------------------
// MultiModalMixer

MultiModalMixer::MultiModalMixer(const EncoderConfig& cfg, RngStream& rng)
    : cfg_(cfg),
      fuse_("mixer/fuse", cfg.z_fused(), cfg.fuse_hidden, rng),
      mean_head_("mixer/mean", cfg.fuse_hidden, cfg.z_fused(), rng),
      std_head_("mixer/std", cfg.fuse_hidden, cfg.z_fused(), rng) {}

GaussianLatentVar MultiModalMixer::forward(Ctx& ctx, const Var& z_p, const Var& z_e,
                                           const Tensor& eps) {
  require(z_p.val().rank() == 2 && z_p.val().shape[1] == cfg_.z_proprio,
          "mixer_fuse: z_p must be [B," + std::to_string(cfg_.z_proprio) + "]");
  require(z_e.val().rank() == 2 && z_e.val().shape[1] == cfg_.z_extero,
          "mixer_fuse: z_e must be [B," + std::to_string(cfg_.z_extero) + "]");
  Var joint = elu(fuse_(ctx, concat({z_p, z_e}, 1)));
  return constrained_sample(mean_head_(ctx, joint), std_head_(ctx, joint), eps, cfg_.sigma_min,
                            cfg_.sigma_max);
}

void MultiModalMixer::collect(std::vector<Parameter*>& out) {
  fuse_.collect(out);
  mean_head_.collect(out);
  std_head_.collect(out);
}

// ---------------------------------------------------------------------------
// Decoders

HeightDecoder::HeightDecoder(const EncoderConfig& cfg, RngStream& rng)
    : mlp_("decoder/height", {cfg.z_fused(), cfg.decoder_hidden, cfg.height_dim()}, rng) {}

Var HeightDecoder::forward(Ctx& ctx, const Var& z_pe) { return mlp_(ctx, z_pe); }

void HeightDecoder::collect(std::vector<Parameter*>& out) { mlp_.collect(out); }

NextObsDecoder::NextObsDecoder(const EncoderConfig& cfg, RngStream& rng)
    : mlp_("decoder/next_obs", {cfg.z_proprio, cfg.decoder_hidden, cfg.proprio_dim}, rng) {}

Var NextObsDecoder::forward(Ctx& ctx, const Var& z_p) { return mlp_(ctx, z_p); }

void NextObsDecoder::collect(std::vector<Parameter*>& out) { mlp_.collect(out); }

AnchorEncoder::AnchorEncoder(const EncoderConfig& cfg, RngStream& rng)
    : mlp_("anchor/height", {cfg.height_dim(), cfg.decoder_hidden, cfg.z_fused()}, rng) {}

Var AnchorEncoder::forward(Ctx& ctx, const Var& height_flat) { return mlp_(ctx, height_flat); }

void AnchorEncoder::collect(std::vector<Parameter*>& out) { mlp_.collect(out); }

// ---------------------------------------------------------------------------

Tensor pack_points(const perception::PointCloud& cloud, std::size_t n, double sentinel_x,
                   double sentinel_z) {
  require(n >= 1, "pack_points: n must be at least 1");
  Tensor out = Tensor::zeros({n, 3});
  std::size_t count = cloud.size();
  for (std::size_t i = 0; i < n; ++i) {
    perception::Vec3 p;
    if (count == 0) {
      p = {sentinel_x, 0.0, sentinel_z};
    } else if (count <= n) {
      // Pad by cycling through the available points; duplicates do not move
      // the max-pool.
      p = cloud.points[i % count];
    } else {
      // Deterministic stride subsample.
      p = cloud.points[(i * count) / n];
    }
    out.data[i * 3 + 0] = p.x;
    out.data[i * 3 + 1] = p.y;
    out.data[i * 3 + 2] = p.z;
  }
  return out;
}

}  // namespace mmloco::encoders
