#include "rqbench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rqbench/error.hpp"

namespace rqbench {

namespace {

// std::*_distribution output is implementation defined; map engine bits
// directly so content is reproducible across standard libraries.
double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double pattern_value(SyntheticPattern p, double u, double v, double t, double aspect) {
  using std::numbers::pi;
  switch (p) {
    case SyntheticPattern::kPanningTexture: {
      const double x = u + 0.004 * t, y = v + 0.002 * t;
      return 0.5 + 0.22 * std::sin(2 * pi * 3 * x) * std::cos(2 * pi * 2 * y) +
             0.12 * std::sin(2 * pi * (11 * x + 7 * y)) + 0.06 * std::sin(2 * pi * 29 * x) +
             0.08 * (v - 0.5);
    }
    case SyntheticPattern::kMovingDiscs: {
      double value = 0.25 + 0.3 * u + 0.15 * v;
      for (int k = 0; k < 3; ++k) {
        const double cx = std::fmod(0.15 + 0.3 * k + 0.006 * t * (k + 1), 1.2) - 0.1;
        const double cy = 0.3 + 0.2 * k + 0.1 * std::sin(0.05 * t + k);
        const double dx = (u - cx) * aspect, dy = v - cy;
        const double r = std::sqrt(dx * dx + dy * dy);
        const double edge = 0.5 - 0.5 * std::tanh((r - 0.12) * 80.0);
        value += edge * (0.35 - 0.1 * k + 0.05 * std::sin(60 * dx) * std::sin(60 * dy));
      }
      return value;
    }
    case SyntheticPattern::kZonePlate: {
      const double dx = (u - 0.5 - 0.002 * t) * aspect, dy = v - 0.5;
      const double r2 = dx * dx + dy * dy;
      return 0.5 + 0.3 * std::cos(2 * pi * 40 * r2 + 0.1 * t) * std::exp(-2.0 * r2);
    }
  }
  return 0.5;
}

}  // namespace

VideoSequence make_synthetic_sequence(const SyntheticSpec& spec) {
  if (spec.frames <= 0) throw DataError("synthetic sequence needs at least one frame");
  const int w = spec.dims.width, h = spec.dims.height;
  const int max_value = (1 << spec.bit_depth) - 1;
  const double aspect = static_cast<double>(w) / h;
  const double grain = spec.pattern == SyntheticPattern::kZonePlate ? 0.012 : 0.006;
  std::mt19937_64 rng(spec.seed);

  auto quantize = [&](double value) {
    return static_cast<std::uint16_t>(
        std::clamp(std::lround(value * max_value), 0L, static_cast<long>(max_value)));
  };

  std::vector<VideoFrame> frames;
  frames.reserve(spec.frames);
  for (int f = 0; f < spec.frames; ++f) {
    Plane y(w, h), cb(w / 2, h / 2), cr(w / 2, h / 2);
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        const double u = (i + 0.5) / w, v = (j + 0.5) / h;
        const double noise = grain * (unit(rng) - 0.5) * 2.0;
        y.at(i, j) = quantize(pattern_value(spec.pattern, u, v, f, aspect) + noise);
      }
    }
    for (int j = 0; j < h / 2; ++j) {
      for (int i = 0; i < w / 2; ++i) {
        const double u = (i + 0.5) / (w / 2), v = (j + 0.5) / (h / 2);
        const double base = pattern_value(spec.pattern, u, v, f, aspect);
        cb.at(i, j) = quantize(0.5 + 0.15 * (base - 0.5) + 0.05 * (u - 0.5));
        cr.at(i, j) = quantize(0.5 - 0.1 * (base - 0.5) + 0.05 * (v - 0.5));
      }
    }
    frames.emplace_back(std::move(y), std::move(cb), std::move(cr), spec.bit_depth);
  }
  std::string name = spec.name;
  if (name.empty()) name = "synthetic";
  return VideoSequence(std::move(frames), spec.fps, std::move(name));
}

std::vector<VideoSequence> standard_synthetic_corpus(Dimensions dims, int frames,
                                                     int bit_depth) {
  const SyntheticPattern patterns[] = {SyntheticPattern::kPanningTexture,
                                       SyntheticPattern::kMovingDiscs,
                                       SyntheticPattern::kZonePlate};
  const char* names[] = {"SynPan", "SynDiscs", "SynZone"};
  std::vector<VideoSequence> corpus;
  for (int k = 0; k < 3; ++k) {
    SyntheticSpec spec;
    spec.pattern = patterns[k];
    spec.dims = dims;
    spec.frames = frames;
    spec.bit_depth = bit_depth;
    spec.seed = static_cast<std::uint64_t>(k + 1);
    spec.name = names[k];
    corpus.push_back(make_synthetic_sequence(spec));
  }
  return corpus;
}

}  // namespace rqbench
