#include "rqbench/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "rqbench/error.hpp"

namespace rqbench {

namespace {

constexpr int kLobes = 3;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

std::uint16_t round_clamp(double v, int max_value) {
  // half away from zero; values are non-negative after clamping to 0
  double r = std::round(v);
  if (r < 0.0) r = 0.0;
  if (r > max_value) r = max_value;
  return static_cast<std::uint16_t>(r);
}

}  // namespace

double lanczos3_kernel(double x) {
  const double ax = std::abs(x);
  if (ax >= kLobes) return 0.0;
  if (ax == 0.0) return 1.0;
  if (ax == std::floor(ax)) return 0.0;  // exact zeros at integer offsets
  return sinc(x) * sinc(x / kLobes);
}

AxisTaps AxisTaps::make(int source_length, int target_length) {
  if (source_length <= 0 || target_length <= 0) {
    throw DataError(fmt::format("invalid resample lengths {} -> {}", source_length,
                                target_length));
  }
  AxisTaps t;
  t.source_length = source_length;
  t.target_length = target_length;
  t.first.reserve(target_length);
  t.count.reserve(target_length);
  const double scale = static_cast<double>(source_length) / target_length;
  for (int i = 0; i < target_length; ++i) {
    const double center = (i + 0.5) * scale - 0.5;
    const int lo = static_cast<int>(std::floor(center)) - (kLobes - 1);
    const int hi = static_cast<int>(std::floor(center)) + kLobes;
    t.first.push_back(static_cast<int>(t.index.size()));
    double sum = 0.0;
    const auto begin = t.weight.size();
    for (int s = lo; s <= hi; ++s) {
      const double w = lanczos3_kernel(center - s);
      if (w == 0.0) continue;
      t.index.push_back(std::clamp(s, 0, source_length - 1));
      t.weight.push_back(w);
      sum += w;
    }
    for (auto k = begin; k < t.weight.size(); ++k) t.weight[k] /= sum;
    t.count.push_back(static_cast<int>(t.weight.size() - begin));
  }
  return t;
}

ResamplePlan ResamplePlan::make(Dimensions source, Dimensions target) {
  return ResamplePlan{source, target, AxisTaps::make(source.width, target.width),
                      AxisTaps::make(source.height, target.height)};
}

std::vector<double> ResamplePlan::apply_unrounded(const Plane& src) const {
  if (src.dims() != source_dims) {
    throw DataError(fmt::format("plane {} does not match plan source {}",
                                to_string(src.dims()), to_string(source_dims)));
  }
  const int sw = source_dims.width, sh = source_dims.height;
  const int tw = target_dims.width, th = target_dims.height;

  // Horizontal pass: sh rows x tw columns.
  std::vector<double> mid(static_cast<std::size_t>(sh) * tw);
  auto samples = src.samples();
  for (int y = 0; y < sh; ++y) {
    const auto* row = samples.data() + static_cast<std::size_t>(y) * sw;
    for (int x = 0; x < tw; ++x) {
      double acc = 0.0;
      const int f = horizontal.first[x];
      for (int k = 0; k < horizontal.count[x]; ++k) {
        acc += horizontal.weight[f + k] * row[horizontal.index[f + k]];
      }
      mid[static_cast<std::size_t>(y) * tw + x] = acc;
    }
  }
  // Vertical pass.
  std::vector<double> out(static_cast<std::size_t>(th) * tw);
  for (int y = 0; y < th; ++y) {
    const int f = vertical.first[y];
    auto* dst = out.data() + static_cast<std::size_t>(y) * tw;
    for (int k = 0; k < vertical.count[y]; ++k) {
      const double w = vertical.weight[f + k];
      const double* srow = mid.data() + static_cast<std::size_t>(vertical.index[f + k]) * tw;
      for (int x = 0; x < tw; ++x) dst[x] += w * srow[x];
    }
  }
  return out;
}

Plane ResamplePlan::apply(const Plane& src, int max_value) const {
  if (source_dims == target_dims) return src;
  const auto values = apply_unrounded(src);
  std::vector<std::uint16_t> samples(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) samples[i] = round_clamp(values[i], max_value);
  return Plane(target_dims.width, target_dims.height, std::move(samples));
}

VideoFrame resize_frame(const VideoFrame& frame, Dimensions target) {
  if (target.width <= 0 || target.height <= 0 || target.width % 2 || target.height % 2) {
    throw DataError(fmt::format("resize target {} must be even and positive",
                                to_string(target)));
  }
  if (target == frame.dims()) return frame;
  const Dimensions chroma_src{frame.width() / 2, frame.height() / 2};
  const Dimensions chroma_dst{target.width / 2, target.height / 2};
  const auto luma_plan = ResamplePlan::make(frame.dims(), target);
  const auto chroma_plan = ResamplePlan::make(chroma_src, chroma_dst);
  const int max_value = frame.max_value();
  return VideoFrame(luma_plan.apply(frame.y(), max_value),
                    chroma_plan.apply(frame.u(), max_value),
                    chroma_plan.apply(frame.v(), max_value), frame.bit_depth());
}

VideoSequence resize_sequence(const VideoSequence& seq, Dimensions target) {
  if (target == seq.dims()) return seq;
  if (target.width <= 0 || target.height <= 0 || target.width % 2 || target.height % 2) {
    throw DataError(fmt::format("resize target {} must be even and positive",
                                to_string(target)));
  }
  const Dimensions src = seq.dims();
  const auto luma_plan = ResamplePlan::make(src, target);
  const auto chroma_plan =
      ResamplePlan::make({src.width / 2, src.height / 2}, {target.width / 2, target.height / 2});
  std::vector<VideoFrame> frames;
  frames.reserve(seq.frame_count());
  for (const auto& f : seq.frames()) {
    const int max_value = f.max_value();
    frames.emplace_back(luma_plan.apply(f.y(), max_value), chroma_plan.apply(f.u(), max_value),
                        chroma_plan.apply(f.v(), max_value), f.bit_depth());
  }
  return VideoSequence(std::move(frames), seq.fps(),
                       fmt::format("{}_{}", seq.name(), to_string(target)));
}

}  // namespace rqbench
