#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rqbench/media.hpp"
#include "rqbench/ratequality.hpp"

namespace rqbench::fixture {

/// Uniform double in [0, 1) from the top 53 bits of the engine output.
inline double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }
inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}
/// Standard normal by Box-Muller on engine bits.
inline double normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit(rng), u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline Plane random_plane(std::mt19937_64& rng, int w, int h, int max_value) {
  Plane p(w, h);
  for (auto& s : p.samples()) s = static_cast<std::uint16_t>(rng() % static_cast<std::uint64_t>(max_value + 1));
  return p;
}

inline VideoFrame random_frame(std::mt19937_64& rng, Dimensions d, int depth) {
  const int max_value = (1 << depth) - 1;
  return VideoFrame(random_plane(rng, d.width, d.height, max_value),
                    random_plane(rng, d.width / 2, d.height / 2, max_value),
                    random_plane(rng, d.width / 2, d.height / 2, max_value), depth);
}

inline VideoSequence random_sequence(std::mt19937_64& rng, Dimensions d, int depth, int frames,
                                     Rational fps = {30, 1}) {
  std::vector<VideoFrame> f;
  for (int i = 0; i < frames; ++i) f.push_back(random_frame(rng, d, depth));
  return VideoSequence(std::move(f), fps, "random");
}

/// Sequence whose luma is fn(x, y, frame) and chroma mid-grey.
template <typename Fn>
VideoSequence luma_sequence(Dimensions d, int depth, int frames, Fn fn) {
  std::vector<VideoFrame> out;
  const auto mid = static_cast<std::uint16_t>(1 << (depth - 1));
  for (int f = 0; f < frames; ++f) {
    Plane y(d.width, d.height);
    for (int r = 0; r < d.height; ++r)
      for (int c = 0; c < d.width; ++c) y.at(c, r) = static_cast<std::uint16_t>(fn(c, r, f));
    out.emplace_back(std::move(y), Plane(d.width / 2, d.height / 2, mid),
                     Plane(d.width / 2, d.height / 2, mid), depth);
  }
  return VideoSequence(std::move(out), {30, 1}, "luma");
}

inline RatePoint point(const std::string& codec, double rate, double quality,
                       const std::string& metric = "q", Dimensions enc = {1920, 1080},
                       const std::string& sequence = "s") {
  RatePoint p;
  p.sequence = sequence;
  p.codec = codec;
  p.group = "G";
  p.encode_resolution = enc;
  p.evaluation_resolution = {1920, 1080};
  p.bitrate_kbps = rate;
  p.scores[metric] = quality;
  return p;
}

/// Curve with strictly increasing rate and quality.
inline RQCurve random_monotone_curve(std::mt19937_64& rng, const std::string& codec, int n = 4,
                                     const std::string& metric = "q") {
  std::vector<RatePoint> pts;
  double rate = uniform(rng, 100.0, 1000.0), q = uniform(rng, 25.0, 35.0);
  for (int i = 0; i < n; ++i) {
    pts.push_back(point(codec, rate, q, metric));
    rate *= uniform(rng, 1.4, 2.6);
    q += uniform(rng, 1.0, 4.0);
  }
  return build_rq_curve(pts, metric);
}

}  // namespace rqbench::fixture
