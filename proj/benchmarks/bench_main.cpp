#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "rqbench/codecs.hpp"
#include "rqbench/correlation.hpp"
#include "rqbench/metrics.hpp"
#include "rqbench/ratequality.hpp"
#include "rqbench/resample.hpp"
#include "rqbench/synthetic.hpp"
#include "rqbench/toy_codec.hpp"

namespace {

using namespace rqbench;

VideoSequence clip(int frames) {
  SyntheticSpec spec;
  spec.pattern = SyntheticPattern::kPanningTexture;
  spec.frames = frames;
  spec.seed = 1;
  spec.name = "bench";
  return make_synthetic_sequence(spec);
}

void BM_ResizeFrameHalf(benchmark::State& state) {
  const VideoSequence seq = clip(1);
  for (auto _ : state) benchmark::DoNotOptimize(resize_frame(seq.frame(0), {160, 90}));
}
BENCHMARK(BM_ResizeFrameHalf);

void BM_ResizeFrameDouble(benchmark::State& state) {
  const VideoSequence seq = clip(1);
  for (auto _ : state) benchmark::DoNotOptimize(resize_frame(seq.frame(0), {640, 360}));
}
BENCHMARK(BM_ResizeFrameDouble);

void BM_Psnr(benchmark::State& state) {
  const VideoSequence a = clip(4);
  const VideoSequence b = toy_encode(a, 30).recon;
  for (auto _ : state) benchmark::DoNotOptimize(psnr(a, b));
}
BENCHMARK(BM_Psnr);

void BM_Ssim(benchmark::State& state) {
  const VideoSequence a = clip(4);
  const VideoSequence b = toy_encode(a, 30).recon;
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim);

void BM_MsSsim(benchmark::State& state) {
  const VideoSequence a = clip(4);
  const VideoSequence b = toy_encode(a, 30).recon;
  for (auto _ : state) benchmark::DoNotOptimize(ms_ssim(a, b));
}
BENCHMARK(BM_MsSsim);

void BM_ToyEncode(benchmark::State& state) {
  const VideoSequence a = clip(4);
  for (auto _ : state) benchmark::DoNotOptimize(toy_encode(a, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ToyEncode)->Arg(16)->Arg(40);

void BM_ToyDecode(benchmark::State& state) {
  const auto enc = toy_encode(clip(4), 28);
  for (auto _ : state) benchmark::DoNotOptimize(toy_decode(enc.bitstream));
}
BENCHMARK(BM_ToyDecode);

RQCurve curve(const std::string& codec, double scale) {
  std::vector<RatePoint> pts;
  for (int i = 0; i < 5; ++i) {
    RatePoint p;
    p.sequence = "s";
    p.codec = codec;
    p.bitrate_kbps = 500.0 * (1 << i) * scale;
    p.scores["psnr"] = 30.0 + 3.1 * i - 0.1 * i * i;
    pts.push_back(p);
  }
  return build_rq_curve(pts, "psnr");
}

void BM_BdRate(benchmark::State& state) {
  const RQCurve a = curve("a", 1.0), b = curve("b", 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(bd_rate(a, b));
}
BENCHMARK(BM_BdRate);

void BM_ConvexHull(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<RatePoint> pts;
  for (int i = 0; i < state.range(0); ++i) {
    RatePoint p;
    p.bitrate_kbps = 100.0 + static_cast<double>(rng() % 100000);
    p.scores["q"] = 20.0 + static_cast<double>(rng() % 3000) / 100.0;
    p.encode_resolution = {320 >> (i % 3), 180 >> (i % 3)};
    pts.push_back(p);
  }
  for (auto _ : state) benchmark::DoNotOptimize(upper_convex_hull(pts, "q"));
}
BENCHMARK(BM_ConvexHull)->Arg(12)->Arg(1000);

void BM_LogisticFit(benchmark::State& state) {
  std::vector<double> x, y, w(108, 1.0);
  for (int i = 0; i < 108; ++i) {
    x.push_back(i);
    y.push_back(logistic({90, 10, 50, 8}, i) + ((i * 37) % 11 - 5) * 0.3);
  }
  for (auto _ : state) benchmark::DoNotOptimize(logistic_fit(x, y, w));
}
BENCHMARK(BM_LogisticFit);

void BM_SroccNoiseFloor(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(srocc_noise_floor(108, 2000, 0));
}
BENCHMARK(BM_SroccNoiseFloor);

}  // namespace

BENCHMARK_MAIN();
