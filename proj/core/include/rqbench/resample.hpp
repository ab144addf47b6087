#pragma once

#include <vector>

#include "rqbench/media.hpp"

namespace rqbench {

/// sinc(x) * sinc(x / 3) for |x| < 3, zero elsewhere.
double lanczos3_kernel(double x);

/// Precomputed taps for one axis. Output sample i reads source indices
/// `index[first[i] .. first[i] + count[i])` with the matching weights.
struct AxisTaps {
  int source_length = 0;
  int target_length = 0;
  std::vector<int> first;
  std::vector<int> count;
  std::vector<int> index;     // clamped source positions
  std::vector<double> weight;  // normalized per output sample

  static AxisTaps make(int source_length, int target_length);
};

/// Separable Lanczos-3 resampling plan for one plane geometry.
struct ResamplePlan {
  Dimensions source_dims;
  Dimensions target_dims;
  AxisTaps horizontal;
  AxisTaps vertical;

  static ResamplePlan make(Dimensions source, Dimensions target);

  /// Unrounded result, row-major, target_dims.pixel_count() values.
  std::vector<double> apply_unrounded(const Plane& src) const;
  Plane apply(const Plane& src, int max_value) const;
};

VideoFrame resize_frame(const VideoFrame& frame, Dimensions target);
VideoSequence resize_sequence(const VideoSequence& seq, Dimensions target);

}  // namespace rqbench
