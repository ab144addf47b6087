#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rqbench/media.hpp"

namespace rqbench {

enum class SyntheticPattern {
  kPanningTexture,  // layered sinusoids panning diagonally
  kMovingDiscs,     // bright discs crossing a smooth gradient
  kZonePlate,       // radial chirp drifting with fine grain noise
};

struct SyntheticSpec {
  SyntheticPattern pattern = SyntheticPattern::kPanningTexture;
  Dimensions dims{320, 180};
  int frames = 60;
  int bit_depth = 8;
  Rational fps{60, 1};
  std::uint64_t seed = 0;
  std::string name;
};

/// Deterministic generated content. Identical specs give bit-identical
/// sequences on every platform.
VideoSequence make_synthetic_sequence(const SyntheticSpec& spec);

/// The three-sequence corpus used by sweeps and the end-to-end pipeline
/// checks: one sequence per pattern, seeds 1..3.
std::vector<VideoSequence> standard_synthetic_corpus(Dimensions dims, int frames,
                                                     int bit_depth = 8);

}  // namespace rqbench
