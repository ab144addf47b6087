#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rqbench/media.hpp"

namespace rqbench {

/// Built-in block-transform codec used when no external encoder is at hand.
///
/// Each 8x8 block (edge-replicated at plane borders) is predicted either from
/// mid-grey (intra frame) or from the co-located block of the previous
/// reconstruction (inter frame), transformed with an orthonormal DCT and
/// quantized with step 2^((qp - 4) / 6), rounding half away from zero. Levels
/// are zig-zag scanned and written as run/level pairs with Exp-Golomb codes;
/// runs of all-zero blocks are collapsed into a single skip count. The encoder
/// also skips a block when its SSE reduction is at most 0.05 * step^2 per
/// coded bit. Every frame is coded both ways and the smaller payload wins.
///
/// Bitstream layout (little-endian):
///   header (16 bytes): "TYC1", u16 width, u16 height, u8 bit depth,
///                      u16 fps numerator, u16 fps denominator,
///                      u16 frame count, u8 reserved (0)
///   per frame:         u8 mode (0 intra, 1 inter), u32 payload bytes,
///                      payload (MSB-first bits, zero padded)
///   payload:           u(6) qp, then Y, U, V block data
namespace toy {

inline constexpr int kMinQp = 0;
inline constexpr int kMaxQp = 63;
inline constexpr std::size_t kHeaderSize = 16;

double quant_step(int qp);

}  // namespace toy

struct ToyEncoded {
  std::vector<std::uint8_t> bitstream;
  VideoSequence recon;
};

/// `qp_increment_frame`, when set, codes frames from that index onward at
/// qp + 1, which gives intermediate rates between two integer QPs.
ToyEncoded toy_encode(const VideoSequence& seq, int qp,
                      std::optional<int> qp_increment_frame = std::nullopt);

VideoSequence toy_decode(std::span<const std::uint8_t> bitstream);

/// Mode byte of each frame, read from the container without decoding.
std::vector<int> toy_frame_modes(std::span<const std::uint8_t> bitstream);
/// Payload byte count of each frame.
std::vector<std::size_t> toy_frame_payload_sizes(std::span<const std::uint8_t> bitstream);

}  // namespace rqbench
