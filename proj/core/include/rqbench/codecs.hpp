#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "rqbench/error.hpp"
#include "rqbench/media.hpp"

namespace rqbench {

struct QpRange {
  int min = 0;
  int max = 51;
};

/// How one codec is driven. External codecs are command templates with the
/// placeholders {input} {recon} {bitstream} {qp} {width} {height} {fps}
/// {bitdepth} {extra}; {extra} expands to `fixed_args` followed by the
/// fractional-QP arguments when a refinement pass is active.
struct EncoderAdapter {
  std::string codec_id;
  std::string encode_template;
  QpRange qp_range;
  std::string fixed_args;
  /// Optional; `{frame}` is replaced by the first frame coded at qp + 1.
  std::string fractional_template;
  bool builtin_toy = false;

  bool has_fractional() const { return builtin_toy || !fractional_template.empty(); }
  void validate() const;

  static EncoderAdapter toy(QpRange range = {0, 51});
};

/// Integer QP, optionally raised by one from `increment_frame` onward.
struct QpSetting {
  int qp = 0;
  std::optional<int> increment_frame;

  /// Frame-weighted mean QP over `frame_count` frames.
  double effective(std::size_t frame_count) const;
  auto operator<=>(const QpSetting&) const = default;
};

struct EncodeResult {
  QpSetting qp;
  std::size_t bitstream_bytes = 0;
  double bitrate_kbps = 0.0;
  VideoSequence recon;
  double wall_seconds = 0.0;
};

struct EncodeOptions {
  /// Scratch directory for external codecs; defaults to the system temp dir.
  std::filesystem::path work_dir;
  /// Reuse an existing raw file for {input} instead of writing the sequence.
  std::optional<std::filesystem::path> input_path;
  bool keep_files = false;
};

EncodeResult encode_with_qp(const EncoderAdapter& adapter, const VideoSequence& seq, int qp,
                            const EncodeOptions& options = {});
EncodeResult encode_with_setting(const EncoderAdapter& adapter, const VideoSequence& seq,
                                 const QpSetting& setting, const EncodeOptions& options = {});

double bitrate_kbps(std::size_t bitstream_bytes, double duration_seconds);

struct RateTargetOutcome {
  double target_kbps = 0.0;
  EncodeResult achieved;
  double relative_error = 0.0;  // (actual - target) / target
  int iterations = 0;           // encodes performed
};

/// Thrown when no QP setting lands within tolerance. Carries the bracketing
/// integer QPs (either may be absent when the target is outside the
/// adapter's rate range) and the closest encode seen.
class TargetUnreachableError : public DataError {
 public:
  TargetUnreachableError(const std::string& message, std::optional<int> qp_above_target,
                         std::optional<int> qp_below_target, RateTargetOutcome closest)
      : DataError(message),
        qp_above_(qp_above_target),
        qp_below_(qp_below_target),
        closest_(std::move(closest)) {}

  /// QP whose rate exceeds the tolerance band (lower QP side).
  std::optional<int> qp_above_target() const { return qp_above_; }
  /// QP whose rate falls below the tolerance band (higher QP side).
  std::optional<int> qp_below_target() const { return qp_below_; }
  const RateTargetOutcome& closest() const { return closest_; }

 private:
  std::optional<int> qp_above_;
  std::optional<int> qp_below_;
  RateTargetOutcome closest_;
};

/// Bisection over integer QP relying on rate decreasing with QP, followed by
/// one fractional pass (per-frame QP increment) when the two bracketing
/// integer QPs both miss the band. Ties go to the lower QP.
RateTargetOutcome target_bitrate_search(const EncoderAdapter& adapter, const VideoSequence& seq,
                                        double target_kbps, double tolerance = 0.03,
                                        const EncodeOptions& options = {});

/// Mean over rate points of codec_time / benchmark_time.
double complexity_ratio(std::span<const double> times_codec,
                        std::span<const double> times_benchmark);

/// "9.37×"
std::string format_complexity_ratio(double ratio);

}  // namespace rqbench
