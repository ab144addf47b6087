#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rqbench {

struct Dimensions {
  int width = 0;
  int height = 0;

  std::int64_t pixel_count() const {
    return static_cast<std::int64_t>(width) * height;
  }
  friend auto operator<=>(const Dimensions&, const Dimensions&) = default;
};

std::string to_string(Dimensions d);  // "1920x1080"

/// Positive rational, used for frame rates such as 30000/1001.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;

  /// Accepts "60", "59.94" or "30000/1001". Result is reduced.
  static Rational parse(std::string_view text);
};

std::string to_string(Rational r);  // "60" or "30000/1001"

/// One image plane of unsigned samples stored row-major.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, std::uint16_t fill = 0);
  Plane(int width, int height, std::vector<std::uint16_t> samples);

  int width() const { return width_; }
  int height() const { return height_; }
  Dimensions dims() const { return {width_, height_}; }

  std::uint16_t at(int x, int y) const { return samples_[index(x, y)]; }
  std::uint16_t& at(int x, int y) { return samples_[index(x, y)]; }

  std::span<const std::uint16_t> samples() const { return samples_; }
  std::span<std::uint16_t> samples() { return samples_; }

  bool operator==(const Plane&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint16_t> samples_;
};

/// Planar 4:2:0 picture at 8 or 10 bits per sample.
///
/// Construction validates the geometry (even dimensions, chroma at half
/// width and height) and that every sample fits the declared bit depth, so a
/// VideoFrame that exists is always well formed.
class VideoFrame {
 public:
  VideoFrame(Plane y, Plane u, Plane v, int bit_depth);

  /// Frame with every plane set to a constant.
  static VideoFrame filled(Dimensions dims, int bit_depth, std::uint16_t y,
                           std::uint16_t u, std::uint16_t v);

  int width() const { return y_.width(); }
  int height() const { return y_.height(); }
  Dimensions dims() const { return y_.dims(); }
  int bit_depth() const { return bit_depth_; }
  int max_value() const { return (1 << bit_depth_) - 1; }

  const Plane& y() const { return y_; }
  const Plane& u() const { return u_; }
  const Plane& v() const { return v_; }
  /// 0 = Y, 1 = U, 2 = V.
  const Plane& plane(int index) const;

  bool operator==(const VideoFrame&) const = default;

 private:
  Plane y_;
  Plane u_;
  Plane v_;
  int bit_depth_ = 8;
};

class VideoSequence {
 public:
  VideoSequence(std::vector<VideoFrame> frames, Rational fps, std::string name);

  const std::vector<VideoFrame>& frames() const { return frames_; }
  const VideoFrame& frame(std::size_t i) const { return frames_.at(i); }
  std::size_t frame_count() const { return frames_.size(); }
  Rational fps() const { return fps_; }
  const std::string& name() const { return name_; }
  Dimensions dims() const { return frames_.front().dims(); }
  int bit_depth() const { return frames_.front().bit_depth(); }
  double duration_seconds() const {
    return static_cast<double>(frames_.size()) / fps_.value();
  }

  bool operator==(const VideoSequence&) const = default;

 private:
  std::vector<VideoFrame> frames_;
  Rational fps_;
  std::string name_;
};

enum class ChromaFormat { k420, k422, k444 };

/// Bytes occupied by one 4:2:0 frame on disk (10-bit uses 2-byte words).
std::size_t frame_byte_size(Dimensions dims, int bit_depth);

/// Reads a headerless planar YUV file. Only 4:2:0 is accepted.
VideoSequence read_raw_video(const std::filesystem::path& path, Dimensions dims,
                             int bit_depth, Rational fps,
                             ChromaFormat chroma = ChromaFormat::k420);

std::filesystem::path write_raw_video(const VideoSequence& seq,
                                      const std::filesystem::path& path);

/// Fields carried by `<base>_<W>x<H>_<fps>fps_<depth>bit.yuv`.
struct SequenceGeometry {
  std::string base;
  Dimensions dims;
  Rational fps;
  int bit_depth = 8;

  bool operator==(const SequenceGeometry&) const = default;
};

SequenceGeometry parse_sequence_filename(std::string_view name);
std::string format_sequence_filename(const SequenceGeometry& geometry);

}  // namespace rqbench
