#include "rqbench/toy_codec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numbers>

#include <fmt/format.h>

#include "rqbench/error.hpp"

namespace rqbench {

namespace {

constexpr int kBlock = 8;
constexpr int kCoeffs = kBlock * kBlock;
constexpr char kMagic[4] = {'T', 'Y', 'C', '1'};
constexpr double kSkipLambdaScale = 0.05;

enum FrameMode : std::uint8_t { kIntra = 0, kInter = 1 };

using Block = std::array<double, kCoeffs>;
using Levels = std::array<int, kCoeffs>;

struct DctTables {
  std::array<double, kCoeffs> basis{};  // basis[k * 8 + n]
  std::array<int, kCoeffs> zigzag{};

  DctTables() {
    for (int k = 0; k < kBlock; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int n = 0; n < kBlock; ++n) {
        basis[k * kBlock + n] =
            scale * std::cos((2 * n + 1) * k * std::numbers::pi / (2.0 * kBlock));
      }
    }
    int i = 0;
    for (int s = 0; s < 2 * kBlock - 1; ++s) {
      if (s % 2 == 0) {
        for (int y = std::min(s, kBlock - 1); y >= 0 && s - y < kBlock; --y)
          zigzag[i++] = y * kBlock + (s - y);
      } else {
        for (int x = std::min(s, kBlock - 1); x >= 0 && s - x < kBlock; --x)
          zigzag[i++] = (s - x) * kBlock + x;
      }
    }
  }
};

const DctTables& tables() {
  static const DctTables t;
  return t;
}

void forward_dct(const Block& in, Block& out) {
  const auto& b = tables().basis;
  Block tmp{};
  for (int y = 0; y < kBlock; ++y)
    for (int k = 0; k < kBlock; ++k) {
      double acc = 0.0;
      for (int n = 0; n < kBlock; ++n) acc += b[k * kBlock + n] * in[y * kBlock + n];
      tmp[y * kBlock + k] = acc;
    }
  for (int k = 0; k < kBlock; ++k)
    for (int x = 0; x < kBlock; ++x) {
      double acc = 0.0;
      for (int n = 0; n < kBlock; ++n) acc += b[k * kBlock + n] * tmp[n * kBlock + x];
      out[k * kBlock + x] = acc;
    }
}

void inverse_dct(const Block& in, Block& out) {
  const auto& b = tables().basis;
  Block tmp{};
  for (int n = 0; n < kBlock; ++n)
    for (int x = 0; x < kBlock; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kBlock; ++k) acc += b[k * kBlock + n] * in[k * kBlock + x];
      tmp[n * kBlock + x] = acc;
    }
  for (int y = 0; y < kBlock; ++y)
    for (int n = 0; n < kBlock; ++n) {
      double acc = 0.0;
      for (int k = 0; k < kBlock; ++k) acc += b[k * kBlock + n] * tmp[y * kBlock + k];
      out[y * kBlock + n] = acc;
    }
}

long round_half_away(double v) { return std::lround(v); }

class BitWriter {
 public:
  void put_bit(int bit) {
    if (used_ == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> used_);
    used_ = (used_ + 1) & 7;
  }
  void put_ue(std::uint32_t value) {
    const std::uint64_t v = static_cast<std::uint64_t>(value) + 1;
    int bits = 0;
    while ((v >> bits) > 1) ++bits;
    for (int i = 0; i < bits; ++i) put_bit(0);
    for (int i = bits; i >= 0; --i) put_bit(static_cast<int>((v >> i) & 1));
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::vector<std::uint8_t> bytes_;
  int used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}

  int get_bit() {
    if (pos_ >= data_.size() * 8) throw DataError("malformed toy bitstream: payload overrun");
    const int bit = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1;
    ++pos_;
    return bit;
  }
  std::uint32_t get_ue() {
    int zeros = 0;
    while (get_bit() == 0) {
      if (++zeros > 31) throw DataError("malformed toy bitstream: bad Exp-Golomb code");
    }
    std::uint64_t v = 1;
    for (int i = 0; i < zeros; ++i) v = (v << 1) | static_cast<std::uint64_t>(get_bit());
    return static_cast<std::uint32_t>(v - 1);
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

int ue_bits(std::uint32_t value) {
  int bits = 0;
  while ((static_cast<std::uint64_t>(value) + 1) >> (bits + 1)) ++bits;
  return 2 * bits + 1;
}

/// Exact size of write_block's output for `levels`.
int block_bits(const Levels& levels) {
  const auto& zz = tables().zigzag;
  int nnz = 0;
  for (int v : levels) nnz += v != 0;
  int bits = ue_bits(static_cast<std::uint32_t>(nnz - 1));
  int run = 0;
  for (int i = 0; i < kCoeffs; ++i) {
    const int level = levels[zz[i]];
    if (level == 0) {
      ++run;
      continue;
    }
    bits += ue_bits(static_cast<std::uint32_t>(run)) +
            ue_bits(static_cast<std::uint32_t>(std::abs(level) - 1)) + 1;
    run = 0;
  }
  return bits;
}

void write_block(BitWriter& bw, const Levels& levels) {
  const auto& zz = tables().zigzag;
  int nnz = 0;
  for (int v : levels) nnz += v != 0;
  bw.put_ue(static_cast<std::uint32_t>(nnz - 1));
  int run = 0;
  for (int i = 0; i < kCoeffs; ++i) {
    const int level = levels[zz[i]];
    if (level == 0) {
      ++run;
      continue;
    }
    bw.put_ue(static_cast<std::uint32_t>(run));
    bw.put_ue(static_cast<std::uint32_t>(std::abs(level) - 1));
    bw.put_bit(level < 0 ? 1 : 0);
    run = 0;
  }
}

Levels read_block(BitReader& br) {
  const auto& zz = tables().zigzag;
  Levels levels{};
  const std::uint32_t nnz = br.get_ue() + 1;
  if (nnz > kCoeffs) throw DataError("malformed toy bitstream: coefficient count");
  int pos = 0;
  for (std::uint32_t k = 0; k < nnz; ++k) {
    pos += static_cast<int>(br.get_ue());
    if (pos >= kCoeffs) throw DataError("malformed toy bitstream: coefficient run");
    const int magnitude = static_cast<int>(br.get_ue()) + 1;
    levels[zz[pos]] = br.get_bit() ? -magnitude : magnitude;
    ++pos;
  }
  return levels;
}

/// Reconstructs one block into `recon` given levels and prediction. Shared by
/// encoder and decoder so both follow one arithmetic path.
void reconstruct_block(const Levels& levels, double step, const Plane* reference, int mid,
                       int max_value, int bx, int by, Plane& recon) {
  Block coeffs{}, residual{};
  for (int i = 0; i < kCoeffs; ++i) coeffs[i] = levels[i] * step;
  inverse_dct(coeffs, residual);
  const int w = recon.width(), h = recon.height();
  for (int y = 0; y < kBlock; ++y) {
    const int py = by + y;
    if (py >= h) break;
    for (int x = 0; x < kBlock; ++x) {
      const int px = bx + x;
      if (px >= w) break;
      const double pred = reference ? reference->at(px, py) : mid;
      const long v = round_half_away(pred + residual[y * kBlock + x]);
      recon.at(px, py) = static_cast<std::uint16_t>(std::clamp(v, 0L, static_cast<long>(max_value)));
    }
  }
}

double block_sse(const Plane& src, const Plane& recon, int bx, int by) {
  double sse = 0.0;
  for (int y = by; y < std::min(by + kBlock, src.height()); ++y)
    for (int x = bx; x < std::min(bx + kBlock, src.width()); ++x) {
      const double d = static_cast<double>(src.at(x, y)) - recon.at(x, y);
      sse += d * d;
    }
  return sse;
}

void encode_plane(const Plane& src, const Plane* reference, double step, int mid,
                  int max_value, BitWriter& bw, Plane& recon) {
  const int w = src.width(), h = src.height();
  // Lagrangian skip: coding a block must buy more than lambda * bits of SSE.
  // Without it, co-located prediction re-codes the previous frame's +-step/2
  // rounding error every frame and rate stops falling monotonically with QP.
  const double lambda = kSkipLambdaScale * step * step;
  const Levels zero{};
  std::uint32_t skip = 0;
  Block residual{}, coeffs{};
  for (int by = 0; by < h; by += kBlock) {
    for (int bx = 0; bx < w; bx += kBlock) {
      for (int y = 0; y < kBlock; ++y) {
        const int sy = std::min(by + y, h - 1);
        for (int x = 0; x < kBlock; ++x) {
          const int sx = std::min(bx + x, w - 1);
          const double pred = reference ? reference->at(sx, sy) : mid;
          residual[y * kBlock + x] = src.at(sx, sy) - pred;
        }
      }
      forward_dct(residual, coeffs);
      Levels levels{};
      bool any = false;
      for (int i = 0; i < kCoeffs; ++i) {
        levels[i] = static_cast<int>(round_half_away(coeffs[i] / step));
        any = any || levels[i] != 0;
      }
      if (any) {
        reconstruct_block(levels, step, reference, mid, max_value, bx, by, recon);
        const double coded = block_sse(src, recon, bx, by);
        reconstruct_block(zero, step, reference, mid, max_value, bx, by, recon);
        const double skipped = block_sse(src, recon, bx, by);
        any = skipped - coded > lambda * block_bits(levels);
      }
      if (any) {
        bw.put_ue(skip);
        skip = 0;
        write_block(bw, levels);
        reconstruct_block(levels, step, reference, mid, max_value, bx, by, recon);
      } else {
        ++skip;
        reconstruct_block(zero, step, reference, mid, max_value, bx, by, recon);
      }
    }
  }
  bw.put_ue(skip);
}

void decode_plane(BitReader& br, const Plane* reference, double step, int mid, int max_value,
                  Plane& recon) {
  const int w = recon.width(), h = recon.height();
  const int blocks_x = (w + kBlock - 1) / kBlock;
  const long total = static_cast<long>(blocks_x) * ((h + kBlock - 1) / kBlock);
  const Levels zero{};
  long pos = 0;
  while (true) {
    const long run = br.get_ue();
    if (pos + run > total) throw DataError("malformed toy bitstream: skip run");
    for (long k = 0; k < run; ++k, ++pos) {
      reconstruct_block(zero, step, reference, mid, max_value,
                        static_cast<int>(pos % blocks_x) * kBlock,
                        static_cast<int>(pos / blocks_x) * kBlock, recon);
    }
    if (pos == total) break;
    const Levels levels = read_block(br);
    reconstruct_block(levels, step, reference, mid, max_value,
                      static_cast<int>(pos % blocks_x) * kBlock,
                      static_cast<int>(pos / blocks_x) * kBlock, recon);
    ++pos;
  }
}

struct CodedFrame {
  std::vector<std::uint8_t> payload;
  VideoFrame recon;
};

CodedFrame code_frame(const VideoFrame& src, const VideoFrame* reference, int qp) {
  const int depth = src.bit_depth();
  const int mid = 1 << (depth - 1);
  const double step = toy::quant_step(qp);
  BitWriter bw;
  for (int i = 5; i >= 0; --i) bw.put_bit((qp >> i) & 1);
  std::array<Plane, 3> planes;
  for (int p = 0; p < 3; ++p) {
    const Plane& s = src.plane(p);
    planes[p] = Plane(s.width(), s.height());
    encode_plane(s, reference ? &reference->plane(p) : nullptr, step, mid, src.max_value(), bw,
                 planes[p]);
  }
  return {bw.take(), VideoFrame(std::move(planes[0]), std::move(planes[1]),
                                std::move(planes[2]), depth)};
}

void put_u16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put_u16(out, v & 0xffff);
  put_u16(out, v >> 16);
}
std::uint32_t get_u16(std::span<const std::uint8_t> d, std::size_t at) {
  return static_cast<std::uint32_t>(d[at] | (d[at + 1] << 8));
}
std::uint32_t get_u32(std::span<const std::uint8_t> d, std::size_t at) {
  return get_u16(d, at) | (get_u16(d, at + 2) << 16);
}

struct Header {
  Dimensions dims;
  int bit_depth;
  Rational fps;
  int frame_count;
};

Header parse_header(std::span<const std::uint8_t> data) {
  if (data.size() < toy::kHeaderSize) throw DataError("malformed toy bitstream: truncated header");
  if (std::memcmp(data.data(), kMagic, 4) != 0) {
    throw DataError("malformed toy bitstream: bad magic");
  }
  Header h;
  h.dims = {static_cast<int>(get_u16(data, 4)), static_cast<int>(get_u16(data, 6))};
  h.bit_depth = data[8];
  h.fps = {get_u16(data, 9), get_u16(data, 11)};
  h.frame_count = static_cast<int>(get_u16(data, 13));
  if (h.dims.width <= 0 || h.dims.height <= 0 || h.dims.width % 2 || h.dims.height % 2 ||
      (h.bit_depth != 8 && h.bit_depth != 10) || h.fps.num == 0 || h.fps.den == 0 ||
      h.frame_count == 0) {
    throw DataError("malformed toy bitstream: invalid header fields");
  }
  return h;
}

template <typename Fn>
void for_each_frame(std::span<const std::uint8_t> data, const Header& h, Fn&& fn) {
  std::size_t at = toy::kHeaderSize;
  for (int f = 0; f < h.frame_count; ++f) {
    if (at + 5 > data.size()) throw DataError("malformed toy bitstream: truncated frame header");
    const int mode = data[at];
    const std::size_t len = get_u32(data, at + 1);
    at += 5;
    if (len > data.size() - at) throw DataError("malformed toy bitstream: truncated payload");
    if (mode != kIntra && mode != kInter) throw DataError("malformed toy bitstream: bad mode");
    fn(f, mode, data.subspan(at, len));
    at += len;
  }
  if (at != data.size()) throw DataError("malformed toy bitstream: trailing bytes");
}

}  // namespace

double toy::quant_step(int qp) { return std::exp2((qp - 4) / 6.0); }

ToyEncoded toy_encode(const VideoSequence& seq, int qp, std::optional<int> qp_increment_frame) {
  if (qp < toy::kMinQp || qp > toy::kMaxQp) {
    throw DataError(fmt::format("toy codec QP {} outside [{}, {}]", qp, toy::kMinQp, toy::kMaxQp));
  }
  const Dimensions dims = seq.dims();
  if (dims.width > 0xffff || dims.height > 0xffff || seq.fps().num > 0xffff ||
      seq.fps().den > 0xffff || seq.frame_count() > 0xffff) {
    throw DataError("toy codec: sequence geometry exceeds 16-bit header fields");
  }

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, static_cast<std::uint32_t>(dims.width));
  put_u16(out, static_cast<std::uint32_t>(dims.height));
  out.push_back(static_cast<std::uint8_t>(seq.bit_depth()));
  put_u16(out, static_cast<std::uint32_t>(seq.fps().num));
  put_u16(out, static_cast<std::uint32_t>(seq.fps().den));
  put_u16(out, static_cast<std::uint32_t>(seq.frame_count()));
  out.push_back(0);

  std::vector<VideoFrame> recon;
  recon.reserve(seq.frame_count());
  for (std::size_t f = 0; f < seq.frame_count(); ++f) {
    int frame_qp = qp;
    if (qp_increment_frame && static_cast<int>(f) >= *qp_increment_frame) {
      frame_qp = std::min(qp + 1, toy::kMaxQp);
    }
    CodedFrame best = code_frame(seq.frame(f), nullptr, frame_qp);
    std::uint8_t mode = kIntra;
    if (!recon.empty()) {
      CodedFrame inter = code_frame(seq.frame(f), &recon.back(), frame_qp);
      if (inter.payload.size() < best.payload.size()) {
        best = std::move(inter);
        mode = kInter;
      }
    }
    out.push_back(mode);
    put_u32(out, static_cast<std::uint32_t>(best.payload.size()));
    out.insert(out.end(), best.payload.begin(), best.payload.end());
    recon.push_back(std::move(best.recon));
  }
  return {std::move(out), VideoSequence(std::move(recon), seq.fps(), "toy_recon")};
}

VideoSequence toy_decode(std::span<const std::uint8_t> bitstream) {
  const Header h = parse_header(bitstream);
  std::vector<VideoFrame> frames;
  frames.reserve(static_cast<std::size_t>(h.frame_count));
  const int mid = 1 << (h.bit_depth - 1);
  const int max_value = (1 << h.bit_depth) - 1;
  for_each_frame(bitstream, h, [&](int f, int mode, std::span<const std::uint8_t> payload) {
    if (mode == kInter && f == 0) throw DataError("malformed toy bitstream: inter first frame");
    BitReader br(payload);
    std::uint32_t qp = 0;
    for (int i = 0; i < 6; ++i) qp = (qp << 1) | static_cast<std::uint32_t>(br.get_bit());
    if (qp > static_cast<std::uint32_t>(toy::kMaxQp)) {
      throw DataError("malformed toy bitstream: QP out of range");
    }
    const double step = toy::quant_step(static_cast<int>(qp));
    std::array<Plane, 3> planes{Plane(h.dims.width, h.dims.height),
                                Plane(h.dims.width / 2, h.dims.height / 2),
                                Plane(h.dims.width / 2, h.dims.height / 2)};
    for (int p = 0; p < 3; ++p) {
      decode_plane(br, mode == kInter ? &frames.back().plane(p) : nullptr, step, mid, max_value,
                   planes[p]);
    }
    frames.emplace_back(std::move(planes[0]), std::move(planes[1]), std::move(planes[2]),
                        h.bit_depth);
  });
  return VideoSequence(std::move(frames), h.fps, "toy_recon");
}

std::vector<int> toy_frame_modes(std::span<const std::uint8_t> bitstream) {
  const Header h = parse_header(bitstream);
  std::vector<int> modes;
  for_each_frame(bitstream, h,
                 [&](int, int mode, std::span<const std::uint8_t>) { modes.push_back(mode); });
  return modes;
}

std::vector<std::size_t> toy_frame_payload_sizes(std::span<const std::uint8_t> bitstream) {
  const Header h = parse_header(bitstream);
  std::vector<std::size_t> sizes;
  for_each_frame(bitstream, h, [&](int, int, std::span<const std::uint8_t> payload) {
    sizes.push_back(payload.size());
  });
  return sizes;
}

}  // namespace rqbench
