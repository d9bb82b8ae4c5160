#include <benchmark/benchmark.h>

#include "mmloco/perception/voxel.hpp"
#include "mmloco/terrainsim/environment.hpp"
#include "mmloco/trainer/networks.hpp"

using namespace mmloco;
using namespace mmloco::numerics;

namespace {

Tensor random_tensor(Shape s, RngStream& rng) {
  Tensor t = Tensor::zeros(std::move(s));
  for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  std::size_t n = static_cast<std::size_t>(state.range(0));
  RngStream rng(1);
  Tensor a = random_tensor({n, n}, rng);
  Tensor b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    Var out = matmul(constant(a), constant(b));
    benchmark::DoNotOptimize(out.val().data[0]);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_MatmulBackward(benchmark::State& state) {
  std::size_t n = static_cast<std::size_t>(state.range(0));
  RngStream rng(2);
  Tensor a = random_tensor({n, n}, rng);
  Tensor b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    Tape tape;
    Var av = tape.leaf(a);
    Var loss = mean_all(square(matmul(av, constant(b))));
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(av).data[0]);
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(128);

void BM_VoxelDownsample(benchmark::State& state) {
  RngStream rng(3);
  perception::PointCloud cloud;
  for (int i = 0; i < 660; ++i)
    cloud.points.push_back({rng.uniform(0.9, 1.4), rng.uniform(-0.55, 0.55),
                            rng.uniform(-0.5, 0.1)});
  for (auto _ : state) {
    auto out = perception::voxel_downsample(cloud, 0.05);
    benchmark::DoNotOptimize(out.size());
  }
}
BENCHMARK(BM_VoxelDownsample);

void BM_EnvStep(benchmark::State& state) {
  terrainsim::EnvParams params;
  terrainsim::Environment env(params, 1, 0);
  RngStream rng(4);
  std::array<double, 12> action{};
  std::array<double, 3> vhat{};
  for (auto _ : state) {
    for (double& v : action) v = rng.uniform(-1.0, 1.0);
    auto res = env.step(action, vhat);
    benchmark::DoNotOptimize(res.reward);
  }
}
BENCHMARK(BM_EnvStep);

void BM_EncoderForward(benchmark::State& state) {
  trainer::ModelConfig mc;
  mc.enc.mixer_channels = 64;
  mc.enc.mixer_blocks = 1;
  mc.enc.point_hidden = 16;
  mc.enc.point_features = 32;
  mc.enc.fuse_hidden = 64;
  mc.enc.decoder_hidden = 64;
  mc.enc.max_points = 48;
  RngStream rng(5);
  trainer::ModelSet models(mc, rng);
  std::size_t B = 256;
  Tensor stack = random_tensor({B, mc.enc.slots(), 45}, rng);
  Tensor pts = random_tensor({B, mc.enc.max_points, 3}, rng);
  Tensor eps_p = Tensor::zeros({B, mc.enc.z_proprio});
  Tensor eps_e = Tensor::zeros({B, mc.enc.z_extero});
  Tensor eps_pe = Tensor::zeros({B, mc.enc.z_fused()});
  for (auto _ : state) {
    Tape tape;
    encoders::Ctx ctx(tape, false);
    auto zp = models.proprio.forward(ctx, constant(stack), eps_p);
    auto ze = models.extero.forward(ctx, constant(pts), eps_e);
    auto zpe = models.mixer.forward(ctx, zp.z.sample, ze.z.sample, eps_pe);
    benchmark::DoNotOptimize(zpe.sample.val().data[0]);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(B));
}
BENCHMARK(BM_EncoderForward);

}  // namespace

BENCHMARK_MAIN();
