#include "rqbench/media.hpp"

#include <charconv>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "rqbench/error.hpp"

namespace rqbench {

namespace {

void validate_plane(const Plane& p, int max_value, const char* label) {
  for (std::uint16_t s : p.samples()) {
    if (s > max_value) {
      throw DataError(fmt::format("sample value {} in plane {} exceeds {}-bit range", s,
                                  label, max_value == 255 ? 8 : 10));
    }
  }
}

bool parse_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

std::string to_string(Dimensions d) { return fmt::format("{}x{}", d.width, d.height); }

Rational Rational::parse(std::string_view text) {
  auto fail = [&] { return DataError(fmt::format("invalid frame rate '{}'", text)); };
  Rational r;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto a = text.substr(0, slash), b = text.substr(slash + 1);
    if (std::from_chars(a.data(), a.data() + a.size(), r.num).ec != std::errc() ||
        std::from_chars(b.data(), b.data() + b.size(), r.den).ec != std::errc())
      throw fail();
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string digits(text.substr(0, dot));
    auto frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 9) throw fail();
    digits += frac;
    r.den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) r.den *= 10;
    if (std::from_chars(digits.data(), digits.data() + digits.size(), r.num).ec !=
        std::errc())
      throw fail();
  } else {
    auto res = std::from_chars(text.data(), text.data() + text.size(), r.num);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) throw fail();
  }
  if (r.num <= 0 || r.den <= 0) throw fail();
  auto g = std::gcd(r.num, r.den);
  r.num /= g;
  r.den /= g;
  return r;
}

std::string to_string(Rational r) {
  return r.den == 1 ? fmt::format("{}", r.num) : fmt::format("{}/{}", r.num, r.den);
}

Plane::Plane(int width, int height, std::uint16_t fill)
    : width_(width),
      height_(height),
      samples_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
  if (width <= 0 || height <= 0) {
    throw DataError(fmt::format("invalid plane size {}x{}", width, height));
  }
}

Plane::Plane(int width, int height, std::vector<std::uint16_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  if (width <= 0 || height <= 0 ||
      samples_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DataError(fmt::format("plane {}x{} given {} samples", width, height,
                                samples_.size()));
  }
}

VideoFrame::VideoFrame(Plane y, Plane u, Plane v, int bit_depth)
    : y_(std::move(y)), u_(std::move(u)), v_(std::move(v)), bit_depth_(bit_depth) {
  if (bit_depth_ != 8 && bit_depth_ != 10) {
    throw DataError(fmt::format("unsupported bit depth {}", bit_depth_));
  }
  if (y_.width() % 2 != 0 || y_.height() % 2 != 0) {
    throw DataError(fmt::format("frame dimensions {}x{} must be even", y_.width(),
                                y_.height()));
  }
  const Dimensions chroma{y_.width() / 2, y_.height() / 2};
  if (u_.dims() != chroma || v_.dims() != chroma) {
    throw DataError(fmt::format("chroma planes must be {} for a {} luma plane",
                                to_string(chroma), to_string(y_.dims())));
  }
  validate_plane(y_, max_value(), "Y");
  validate_plane(u_, max_value(), "U");
  validate_plane(v_, max_value(), "V");
}

VideoFrame VideoFrame::filled(Dimensions dims, int bit_depth, std::uint16_t y,
                              std::uint16_t u, std::uint16_t v) {
  return VideoFrame(Plane(dims.width, dims.height, y),
                    Plane(dims.width / 2, dims.height / 2, u),
                    Plane(dims.width / 2, dims.height / 2, v), bit_depth);
}

const Plane& VideoFrame::plane(int index) const {
  switch (index) {
    case 0: return y_;
    case 1: return u_;
    case 2: return v_;
  }
  throw DataError(fmt::format("plane index {} out of range", index));
}

VideoSequence::VideoSequence(std::vector<VideoFrame> frames, Rational fps, std::string name)
    : frames_(std::move(frames)), fps_(fps), name_(std::move(name)) {
  if (frames_.empty()) throw DataError("video sequence must contain at least one frame");
  if (fps_.num <= 0 || fps_.den <= 0) throw DataError("frame rate must be positive");
  for (const auto& f : frames_) {
    if (f.dims() != frames_.front().dims() || f.bit_depth() != frames_.front().bit_depth()) {
      throw DataError("all frames of a sequence must share dimensions and bit depth");
    }
  }
}

std::size_t frame_byte_size(Dimensions dims, int bit_depth) {
  const std::size_t luma = static_cast<std::size_t>(dims.pixel_count());
  const std::size_t samples = luma + 2 * (luma / 4);
  return samples * (bit_depth > 8 ? 2 : 1);
}

VideoSequence read_raw_video(const std::filesystem::path& path, Dimensions dims,
                             int bit_depth, Rational fps, ChromaFormat chroma) {
  if (chroma != ChromaFormat::k420) {
    throw DataError(fmt::format("{}: only 4:2:0 content is supported", path.string()));
  }
  if (dims.width <= 0 || dims.height <= 0 || dims.width % 2 || dims.height % 2) {
    throw DataError(fmt::format("{}: invalid geometry {}", path.string(), to_string(dims)));
  }
  if (bit_depth != 8 && bit_depth != 10) {
    throw DataError(fmt::format("{}: unsupported bit depth {}", path.string(), bit_depth));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);

  const std::size_t frame_size = frame_byte_size(dims, bit_depth);
  if (file_size == 0 || file_size % frame_size != 0) {
    throw DataError(fmt::format(
        "{}: size mismatch, {} bytes is not a multiple of the {}-byte frame size for {} {}-bit",
        path.string(), file_size, frame_size, to_string(dims), bit_depth));
  }

  const int bytes_per_sample = bit_depth > 8 ? 2 : 1;
  std::vector<unsigned char> buffer(frame_size);
  std::vector<VideoFrame> frames;
  frames.reserve(file_size / frame_size);

  auto take_plane = [&](std::size_t& offset, int w, int h) {
    std::vector<std::uint16_t> samples(static_cast<std::size_t>(w) * h);
    for (auto& s : samples) {
      if (bytes_per_sample == 1) {
        s = buffer[offset];
      } else {
        s = static_cast<std::uint16_t>(buffer[offset] | (buffer[offset + 1] << 8));
      }
      offset += bytes_per_sample;
    }
    return Plane(w, h, std::move(samples));
  };

  for (std::size_t i = 0; i < file_size / frame_size; ++i) {
    if (!in.read(reinterpret_cast<char*>(buffer.data()),
                 static_cast<std::streamsize>(frame_size))) {
      throw IoError(fmt::format("{}: read failed at frame {}", path.string(), i));
    }
    std::size_t offset = 0;
    Plane y = take_plane(offset, dims.width, dims.height);
    Plane u = take_plane(offset, dims.width / 2, dims.height / 2);
    Plane v = take_plane(offset, dims.width / 2, dims.height / 2);
    try {
      frames.emplace_back(std::move(y), std::move(u), std::move(v), bit_depth);
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}: frame {}: out-of-range sample ({})", path.string(), i,
                                  e.what()));
    }
  }
  return VideoSequence(std::move(frames), fps, path.stem().string());
}

std::filesystem::path write_raw_video(const VideoSequence& seq,
                                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  const bool wide = seq.bit_depth() > 8;
  std::vector<unsigned char> buffer;
  buffer.reserve(frame_byte_size(seq.dims(), seq.bit_depth()));
  for (const auto& frame : seq.frames()) {
    buffer.clear();
    for (int p = 0; p < 3; ++p) {
      for (std::uint16_t s : frame.plane(p).samples()) {
        buffer.push_back(static_cast<unsigned char>(s & 0xff));
        if (wide) buffer.push_back(static_cast<unsigned char>(s >> 8));
      }
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size()));
  }
  if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
  return path;
}

SequenceGeometry parse_sequence_filename(std::string_view name) {
  auto fail = [&](std::string_view token) {
    return DataError(fmt::format(
        "cannot parse '{}' as <base>_<W>x<H>_<fps>fps_<depth>bit.yuv (offending token '{}')",
        name, token));
  };
  if (auto slash = name.find_last_of('/'); slash != std::string_view::npos) {
    name = name.substr(slash + 1);
  }
  constexpr std::string_view kExt = ".yuv";
  if (name.size() <= kExt.size() || name.substr(name.size() - kExt.size()) != kExt) {
    throw fail(name);
  }
  std::string_view stem = name.substr(0, name.size() - kExt.size());

  // Tokens are taken from the right so that the base name may contain '_'.
  auto pop = [&](std::string_view& rest) -> std::string_view {
    auto pos = rest.find_last_of('_');
    if (pos == std::string_view::npos) throw fail(rest);
    auto tok = rest.substr(pos + 1);
    rest = rest.substr(0, pos);
    return tok;
  };
  std::string_view rest = stem;
  auto depth_tok = pop(rest);
  auto fps_tok = pop(rest);
  auto dims_tok = pop(rest);
  if (rest.empty()) throw fail(stem);

  SequenceGeometry g;
  g.base = std::string(rest);

  if (depth_tok.size() < 4 || depth_tok.substr(depth_tok.size() - 3) != "bit" ||
      !parse_int(depth_tok.substr(0, depth_tok.size() - 3), g.bit_depth) ||
      (g.bit_depth != 8 && g.bit_depth != 10)) {
    throw fail(depth_tok);
  }
  if (fps_tok.size() < 4 || fps_tok.substr(fps_tok.size() - 3) != "fps") throw fail(fps_tok);
  try {
    g.fps = Rational::parse(fps_tok.substr(0, fps_tok.size() - 3));
  } catch (const DataError&) {
    throw fail(fps_tok);
  }
  auto x = dims_tok.find('x');
  if (x == std::string_view::npos || !parse_int(dims_tok.substr(0, x), g.dims.width) ||
      !parse_int(dims_tok.substr(x + 1), g.dims.height) || g.dims.width <= 0 ||
      g.dims.height <= 0) {
    throw fail(dims_tok);
  }
  return g;
}

std::string format_sequence_filename(const SequenceGeometry& g) {
  std::string fps = g.fps.den == 1 ? fmt::format("{}", g.fps.num)
                                   : fmt::format("{:.3f}", g.fps.value());
  return fmt::format("{}_{}x{}_{}fps_{}bit.yuv", g.base, g.dims.width, g.dims.height, fps,
                     g.bit_depth);
}

}  // namespace rqbench
