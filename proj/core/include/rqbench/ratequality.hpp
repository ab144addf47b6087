#pragma once

#include <array>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rqbench/media.hpp"

namespace rqbench {

/// One encode measured at the evaluation resolution.
struct RatePoint {
  std::string sequence;
  std::string codec;
  std::string group;
  Dimensions encode_resolution;
  Dimensions evaluation_resolution;
  double qp = 0.0;
  double bitrate_kbps = 0.0;
  std::map<std::string, double> scores;
  std::optional<std::string> rate_index;  // "R1".."R5"
  std::optional<double> target_kbps;
  std::optional<double> wall_seconds;

  bool has_score(const std::string& metric_id) const { return scores.contains(metric_id); }
  /// Throws DataError when the metric is missing.
  double score(const std::string& metric_id) const;
};

/// Points of one sequence/codec sorted by strictly increasing bitrate.
struct RQCurve {
  std::vector<RatePoint> points;
  std::string metric_id;
  std::vector<std::string> warnings;

  std::vector<double> rates() const;
  std::vector<double> qualities() const;
};

RQCurve build_rq_curve(std::vector<RatePoint> points, const std::string& metric_id);

/// Upper-left envelope of rate points in the (bitrate, quality) plane.
struct ConvexHull {
  std::vector<RatePoint> vertices;
  std::string metric_id;
  std::set<Dimensions> source_resolutions;

  /// Piecewise-linear envelope value. Below the first vertex there is no
  /// envelope; beyond the last it stays flat.
  std::optional<double> envelope_at(double bitrate_kbps) const;
  RQCurve as_curve() const;
};

/// Drops dominated points (another point with no more rate and no less
/// quality), then runs a monotone chain over the survivors. Collinear
/// points are not vertices. Exact duplicates keep the encode with fewer
/// pixels.
ConvexHull upper_convex_hull(std::span<const RatePoint> points, const std::string& metric_id);

/// The hull's envelope evaluated at each rate of `fixed`: the dynamic
/// (cross-resolution) counterpart of a fixed-resolution curve. Points keep
/// their labels from `fixed`; throws DataError below the hull's first vertex.
RQCurve sample_envelope(const ConvexHull& hull, const RQCurve& fixed);

/// Picks the best-scoring candidate among those within `tolerance` of the
/// target; ties go to the lower encode resolution.
RatePoint select_per_target(std::span<const RatePoint> candidates, const std::string& metric_id,
                            double target_kbps, double tolerance = 0.03);

/// Cubic in a normalized variable t = (x - shift) / scale.
struct Cubic {
  std::array<double, 4> coeffs{};  // c0 + c1 t + c2 t^2 + c3 t^3
  double shift = 0.0;
  double scale = 1.0;

  double operator()(double x) const;
  /// Exact integral over [a, b] in x.
  double integral(double a, double b) const;
};

/// Least-squares cubic fit, y as a function of x. Requires four or more
/// distinct x values.
Cubic fit_cubic(std::span<const double> x, std::span<const double> y);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BDResult {
  double bd_rate_percent = std::numeric_limits<double>::quiet_NaN();
  double bd_quality = std::numeric_limits<double>::quiet_NaN();
  /// Quality range for bd_rate, log10(kbps) range for bd_quality.
  Interval overlap_interval;
};

/// Quality dips of at most this many metric units are tolerated within a
/// curve when fitting.
inline constexpr double kBdMonotoneTolerance = 0.5;

/// log10(rate) fitted as a cubic in quality (the curve used by bd_rate).
Cubic fit_log_rate_vs_quality(const RQCurve& curve);
/// Quality fitted as a cubic in log10(rate) (the curve used by bd_quality).
Cubic fit_quality_vs_log_rate(const RQCurve& curve);

/// Average rate difference at equal quality, in percent; negative means the
/// test curve needs less rate.
BDResult bd_rate(const RQCurve& anchor, const RQCurve& test);
/// Average quality difference at equal log-rate.
BDResult bd_quality(const RQCurve& anchor, const RQCurve& test);

/// Point-wise mean of curves aligned by rate_index labels.
RQCurve average_curves(std::span<const RQCurve> curves);

}  // namespace rqbench
