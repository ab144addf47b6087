#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rqbench/codecs.hpp"
#include "rqbench/media.hpp"
#include "rqbench/metrics.hpp"
#include "rqbench/synthetic.hpp"

namespace rqbench::cli {

struct SequenceEntry {
  std::string name;
  std::string path;  // as written; empty for synthetic sources
  std::optional<SyntheticPattern> synthetic;
  std::uint64_t seed = 0;
  Dimensions dims;
  Rational fps{60, 1};
  int bit_depth = 8;
  std::optional<int> frames;  // read at most this many frames
};

struct ResolutionGroup {
  std::string name;
  Dimensions reference;
  std::vector<Dimensions> ladder;  // descending pixel count, reference first when present
  std::vector<int> qps;
};

struct TargetEntry {
  std::string sequence;
  std::string group;
  std::vector<double> kbps;  // R1, R2, ...
};

struct RunManifest {
  std::filesystem::path base_dir;
  std::string output_dir = "out";
  std::string selection_metric = "psnr";
  double tolerance = 0.03;
  std::vector<std::string> metrics{"psnr", "ssim", "msssim"};
  int jobs = 1;
  std::vector<SequenceEntry> sequences;
  std::vector<EncoderAdapter> codecs;
  std::vector<ResolutionGroup> groups;
  std::vector<TargetEntry> targets;
  std::vector<ExternalMetricTool> external_metrics;

  std::filesystem::path resolved_output_dir() const;
  std::filesystem::path resolve(const std::string& relative) const;
  const SequenceEntry& sequence(std::string_view name) const;
  const ResolutionGroup& group(std::string_view name) const;
  const EncoderAdapter& codec(std::string_view id) const;
  const ExternalMetricTool* external_metric(std::string_view id) const;
};

/// Metric ids computed in-process.
bool is_native_metric(std::string_view id);

Dimensions parse_dimensions(std::string_view text);
std::string_view pattern_name(SyntheticPattern pattern);

/// Parses and validates; every failure is a ManifestError naming the field,
/// e.g. "codec[1].qp_min".
RunManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
RunManifest load_manifest(const std::filesystem::path& path);
void validate_manifest(const RunManifest& manifest);

/// Canonical TOML text; parse_manifest(format_manifest(m)) reproduces m.
std::string format_manifest(const RunManifest& manifest);

/// "1300/2250/4700/9270"
std::string format_kbps_list(const std::vector<double>& kbps);

VideoSequence load_sequence(const RunManifest& manifest, const SequenceEntry& entry);

}  // namespace rqbench::cli
