#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rqbench/cli/manifest.hpp"
#include "rqbench/ratequality.hpp"

namespace rqbench::cli {

struct PipelineOptions {
  int jobs = 1;
  bool timing = false;  // record enc_seconds; forces jobs = 1
  std::filesystem::path work_dir;
  /// Receives non-fatal diagnostics, one line each.
  std::function<void(const std::string&)> warn;
};

/// Scores `dist` against `ref` on every metric listed in the manifest.
std::map<std::string, double> score_metrics(const RunManifest& manifest, const VideoSequence& ref,
                                            const VideoSequence& dist,
                                            const std::filesystem::path& work_dir);

/// Fixed-QP encodes of one source at every ladder resolution and QP of a
/// group; reconstructions are scored at the group's reference resolution.
/// Points are ordered by (sequence, codec, ladder position, qp).
std::vector<RatePoint> encode_ladder(const RunManifest& manifest,
                                     const std::vector<std::string>& sequences,
                                     const std::vector<std::string>& codecs,
                                     const ResolutionGroup& group, const std::vector<int>& qps,
                                     const PipelineOptions& options);

/// Fixed-QP sweeps (same sequence, codec and encode resolution) whose rate
/// fails to fall strictly as QP rises, one message each. encode_ladder
/// reports these through PipelineOptions::warn.
std::vector<std::string> rate_monotonicity_violations(const std::vector<RatePoint>& points);

struct TargetFailure {
  std::string sequence;
  std::string codec;
  std::string group;
  std::string rate_index;
  double target_kbps = 0.0;
  std::string reason;
};

struct TargetRun {
  std::vector<RatePoint> selected;  // one per reachable (target, codec)
  std::vector<TargetFailure> failures;
};

/// Target-bitrate search at each ladder resolution followed by selection
/// on the manifest's selection metric.
TargetRun run_targets(const RunManifest& manifest, const std::vector<TargetEntry>& targets,
                      const std::vector<std::string>& codecs, double tolerance,
                      const PipelineOptions& options);

/// Hull of one (sequence, codec, group) point set against its curve at a
/// single encode resolution.
struct DoComparison {
  ConvexHull hull;
  RQCurve fixed;
  RQCurve dynamic;  // hull envelope sampled at the fixed curve's rates
  double min_quality_delta = 0.0;
  BDResult bd;  // bd_rate(fixed, dynamic); NaN when either curve is unfit
  std::string bd_error;
};

DoComparison compare_do_vs_fixed(const std::vector<RatePoint>& points, Dimensions fixed_resolution,
                                 const std::string& metric_id);

}  // namespace rqbench::cli
