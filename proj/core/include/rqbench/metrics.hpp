#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "rqbench/media.hpp"

namespace rqbench {

/// A pooled quality score. When `per_frame` is filled, `value` is its
/// arithmetic mean.
struct MetricScore {
  std::string metric_id;
  double value = 0.0;
  std::vector<double> per_frame;
  std::string tool_version;
};

inline constexpr double kPsnrCap = 100.0;

enum class PsnrMode {
  kLuma,    // Y plane only
  kYuv611,  // plane MSEs pooled 6:1:1 before the log
};

double plane_mse(const Plane& a, const Plane& b);

/// Per-frame PSNR in dB, arithmetic mean over frames. Zero MSE scores 100 dB.
MetricScore psnr(const VideoSequence& ref, const VideoSequence& dist,
                 PsnrMode mode = PsnrMode::kLuma);

/// Mean SSIM map and mean contrast-structure map of one plane pair, using
/// 8x8 windows at stride 4 and C1 = (0.01 MAX)^2, C2 = (0.03 MAX)^2.
struct SsimComponents {
  double ssim = 0.0;
  double cs = 0.0;
};

inline constexpr int kSsimWindow = 8;
inline constexpr int kSsimStride = 4;

SsimComponents ssim_plane(const Plane& ref, const Plane& dist, int max_value);

/// Luma SSIM, frame mean of window means.
MetricScore ssim(const VideoSequence& ref, const VideoSequence& dist);

struct MsSsimOptions {
  /// One exponent per scale, finest first.
  std::vector<double> exponents{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  /// When false the coarsest scale also uses only the contrast-structure
  /// term.
  bool include_luminance = true;
};

/// Multi-scale SSIM of one luma plane pair. Scales are produced by 2x2
/// averaging and decimation; negative per-scale terms are clamped to zero
/// before exponentiation.
double ms_ssim_plane(const Plane& ref, const Plane& dist, int max_value,
                     const MsSsimOptions& options = {});

MetricScore ms_ssim(const VideoSequence& ref, const VideoSequence& dist,
                    const MsSsimOptions& options = {});

struct SITI {
  double si = 0.0;
  double ti = 0.0;
};

/// Spatial information: max over frames of the standard deviation of the
/// Sobel gradient magnitude (interior pixels). Temporal information: max
/// over consecutive pairs of the standard deviation of the luma difference.
SITI si_ti(const VideoSequence& seq);

/// A quality tool run as a separate process. The command template may use
/// {ref} {dist} {width} {height} {bitdepth} {fps}; `score_regex` must have
/// one capture group holding the pooled score.
struct ExternalMetricTool {
  std::string metric_id;
  std::string command_template;
  std::string score_regex;
  std::string version_regex;  // optional
};

struct RawGeometry {
  Dimensions dims;
  int bit_depth = 8;
  Rational fps{60, 1};
};

MetricScore external_metric(const ExternalMetricTool& tool, const std::filesystem::path& ref_path,
                            const std::filesystem::path& dist_path, const RawGeometry& geometry);

}  // namespace rqbench
