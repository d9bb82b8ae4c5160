#pragma once

#include "mmloco/encoders/net.hpp"
#include "mmloco/perception/pointcloud.hpp"

namespace mmloco::encoders {

// Width/shape knobs for the multi-modal context encoder. Latent sizes and the
// sigma clamp are fixed by the method; hidden widths are tunable.
struct EncoderConfig {
  std::size_t proprio_dim = 45;   // body rates 3, gravity 3, command 3,
                                  // joint pos 12, joint vel 12, prev action 12
  std::size_t history = 5;        // H; the stack holds H+1 slots
  std::size_t z_proprio = 32;
  std::size_t z_extero = 32;
  std::size_t mixer_channels = 128;
  std::size_t mixer_blocks = 2;
  std::size_t token_hidden = 32;
  std::size_t point_hidden = 64;
  std::size_t point_features = 128;
  std::size_t fuse_hidden = 128;
  std::size_t decoder_hidden = 128;
  std::size_t height_rows = 34;
  std::size_t height_cols = 22;
  std::size_t max_points = 128;   // clouds padded/truncated to this many points
  double sigma_min = 0.0;
  double sigma_max = 5.0;

  std::size_t slots() const { return history + 1; }
  std::size_t z_fused() const { return z_proprio + z_extero; }
  std::size_t height_dim() const { return height_rows * height_cols; }
};

// Gaussian latent with the clamped std and the reparameterized sample.
struct GaussianLatentVar {
  Var mean;
  Var std;
  Var sample;
};

// std = clamp(softplus(raw_std), sigma_min, sigma_max); sample = mean + std*eps.
// Gradients flow through mean and std only; eps is a constant.
GaussianLatentVar constrained_sample(const Var& mean, const Var& raw_std, const Tensor& eps,
                                     double sigma_min = 0.0, double sigma_max = 5.0);

// mask = 1 - tanh(stat), strictly decreasing, in (0, 1]. Negative stats are an
// error.
Var confidence_mask(const Var& point_stats);

// Proprioceptive MLP-mixer encoder with a Gaussian context head and a
// deterministic body-velocity head.
class ProprioEncoder {
 public:
  ProprioEncoder() = default;
  ProprioEncoder(const EncoderConfig& cfg, RngStream& rng);

  struct Output {
    GaussianLatentVar z;  // z^p
    Var velocity;         // [B,3] body-velocity estimate
  };
  // stack: [B, H+1, D_p], newest slot first. eps: [B, z_proprio].
  Output forward(Ctx& ctx, const Var& stack, const Tensor& eps);

  void collect(std::vector<Parameter*>& out);

 private:
  struct Block {
    LayerNormParams ln_token;
    Linear token_a, token_b;
    LayerNormParams ln_channel;
    Linear channel_a, channel_b;
  };
  EncoderConfig cfg_;
  Linear embed_;
  std::vector<Block> blocks_;
  Linear mean_head_, std_head_, vel_head_;
};

// PointNet-style per-point encoder with the statistical confidence filter in
// front of the max-pool aggregation.
class ExteroEncoder {
 public:
  ExteroEncoder() = default;
  ExteroEncoder(const EncoderConfig& cfg, RngStream& rng);

  struct Output {
    GaussianLatentVar z;  // z^e
    Var point_stats;      // [B,N] per-point statistic fed to the mask
    Var mask;             // [B,N]
    Var pooled;           // [B,F] masked max-pooled features
  };
  // points: [B, N, 3]; eps: [B, z_extero]. use_filter=false bypasses the
  // confidence mask (ablation/baseline path for the paired comparison).
  Output forward(Ctx& ctx, const Var& points, const Tensor& eps, bool use_filter = true);

  void collect(std::vector<Parameter*>& out);

 private:
  EncoderConfig cfg_;
  Linear point_a_, point_b_;
  Linear mean_head_, std_head_;
};

// Fuses z^p (+) z^e through an MLP with a constrained Gaussian head, dim 64.
class MultiModalMixer {
 public:
  MultiModalMixer() = default;
  MultiModalMixer(const EncoderConfig& cfg, RngStream& rng);

  GaussianLatentVar forward(Ctx& ctx, const Var& z_p, const Var& z_e, const Tensor& eps);
  void collect(std::vector<Parameter*>& out);

 private:
  EncoderConfig cfg_;
  Linear fuse_;
  Linear mean_head_, std_head_;
};

// z^pe -> height-scan reconstruction, flat [B, rows*cols].
class HeightDecoder {
 public:
  HeightDecoder() = default;
  HeightDecoder(const EncoderConfig& cfg, RngStream& rng);
  Var forward(Ctx& ctx, const Var& z_pe);
  void collect(std::vector<Parameter*>& out);

 private:
  Mlp mlp_;
};

// z^p -> next proprioceptive observation, [B, D_p].
class NextObsDecoder {
 public:
  NextObsDecoder() = default;
  NextObsDecoder(const EncoderConfig& cfg, RngStream& rng);
  Var forward(Ctx& ctx, const Var& z_p);
  void collect(std::vector<Parameter*>& out);

 private:
  Mlp mlp_;
};

// Encodes the ground-truth height scan into the contrastive anchor g(h).
class AnchorEncoder {
 public:
  AnchorEncoder() = default;
  AnchorEncoder(const EncoderConfig& cfg, RngStream& rng);
  Var forward(Ctx& ctx, const Var& height_flat);
  void collect(std::vector<Parameter*>& out);

 private:
  Mlp mlp_;
};

// Pads or deterministically subsamples a cloud to exactly n points. Empty
// input is padded with the far-ground sentinel so pooling stays defined.
numerics::Tensor pack_points(const perception::PointCloud& cloud, std::size_t n,
                             double sentinel_x = 0.9, double sentinel_z = -0.4);

}  // namespace mmloco::encoders
