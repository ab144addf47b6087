#include "rqbench/ratequality.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "rqbench/error.hpp"

namespace rqbench {

namespace {

double cross(const RatePoint& o, const RatePoint& a, const RatePoint& b, const std::string& m) {
  return (a.bitrate_kbps - o.bitrate_kbps) * (b.score(m) - o.score(m)) -
         (a.score(m) - o.score(m)) * (b.bitrate_kbps - o.bitrate_kbps);
}

/// Rates and qualities of a BD input curve, checked for the quality
/// monotonicity the fit relies on.
void check_bd_curve(const RQCurve& curve, const char* role) {
  if (curve.points.size() < 4) {
    throw DataError(fmt::format("BD measurement needs at least 4 points on the {} curve, got {}",
                                role, curve.points.size()));
  }
  const auto q = curve.qualities();
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] < q[i - 1] - kBdMonotoneTolerance) {
      throw DataError(fmt::format(
          "{} curve quality drops from {:.4f} to {:.4f} between {:.1f} and {:.1f} kbps; "
          "quality axis is not invertible",
          role, q[i - 1], q[i], curve.points[i - 1].bitrate_kbps, curve.points[i].bitrate_kbps));
    }
  }
}

std::vector<double> log10_rates(const RQCurve& curve) {
  std::vector<double> out;
  for (const auto& p : curve.points) out.push_back(std::log10(p.bitrate_kbps));
  return out;
}

Interval overlap(std::span<const double> a, std::span<const double> b) {
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  return {std::max(*amin, *bmin), std::min(*amax, *bmax)};
}

}  // namespace

double RatePoint::score(const std::string& metric_id) const {
  auto it = scores.find(metric_id);
  if (it == scores.end()) {
    throw DataError(fmt::format("rate point {}/{} at {:.3f} kbps has no '{}' score", sequence,
                                codec, bitrate_kbps, metric_id));
  }
  return it->second;
}

std::vector<double> RQCurve::rates() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.bitrate_kbps);
  return out;
}

std::vector<double> RQCurve::qualities() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.score(metric_id));
  return out;
}

RQCurve build_rq_curve(std::vector<RatePoint> points, const std::string& metric_id) {
  if (points.size() < 2) {
    throw DataError(fmt::format("a rate-quality curve needs at least 2 points, got {}",
                                points.size()));
  }
  for (const auto& p : points) {
    if (!(p.bitrate_kbps > 0.0)) throw DataError("rate point bitrate must be positive");
    p.score(metric_id);
    if (p.sequence != points.front().sequence || p.codec != points.front().codec) {
      throw DataError(fmt::format("curve mixes {}/{} with {}/{}", points.front().sequence,
                                  points.front().codec, p.sequence, p.codec));
    }
  }
  std::sort(points.begin(), points.end(),
            [](const RatePoint& a, const RatePoint& b) { return a.bitrate_kbps < b.bitrate_kbps; });
  RQCurve curve{std::move(points), metric_id, {}};
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& prev = curve.points[i - 1];
    const auto& cur = curve.points[i];
    if (cur.bitrate_kbps == prev.bitrate_kbps) {
      throw DataError(fmt::format("duplicate bitrate {:.3f} kbps in {}/{}", cur.bitrate_kbps,
                                  cur.sequence, cur.codec));
    }
    if (cur.score(metric_id) < prev.score(metric_id)) {
      curve.warnings.push_back(fmt::format(
          "{}/{}: {} decreases from {:.4f} to {:.4f} between {:.1f} and {:.1f} kbps",
          cur.sequence, cur.codec, metric_id, prev.score(metric_id), cur.score(metric_id),
          prev.bitrate_kbps, cur.bitrate_kbps));
    }
  }
  return curve;
}

std::optional<double> ConvexHull::envelope_at(double rate) const {
  if (vertices.empty() || rate < vertices.front().bitrate_kbps) return std::nullopt;
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    const auto& a = vertices[i - 1];
    const auto& b = vertices[i];
    if (rate <= b.bitrate_kbps) {
      const double t = (rate - a.bitrate_kbps) / (b.bitrate_kbps - a.bitrate_kbps);
      return a.score(metric_id) + t * (b.score(metric_id) - a.score(metric_id));
    }
  }
  return vertices.back().score(metric_id);
}

RQCurve ConvexHull::as_curve() const { return RQCurve{vertices, metric_id, {}}; }

ConvexHull upper_convex_hull(std::span<const RatePoint> points, const std::string& metric_id) {
  if (points.empty()) throw DataError("convex hull needs at least one point");
  for (const auto& p : points) {
    p.score(metric_id);
    if (p.evaluation_resolution != points.front().evaluation_resolution) {
      throw DataError(fmt::format(
          "convex hull inputs must share one evaluation resolution ({} vs {})",
          to_string(points.front().evaluation_resolution), to_string(p.evaluation_resolution)));
    }
  }
  std::vector<RatePoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(), [&](const RatePoint& a, const RatePoint& b) {
    if (a.bitrate_kbps != b.bitrate_kbps) return a.bitrate_kbps < b.bitrate_kbps;
    if (a.score(metric_id) != b.score(metric_id)) return a.score(metric_id) > b.score(metric_id);
    return a.encode_resolution.pixel_count() < b.encode_resolution.pixel_count();
  });

  std::vector<RatePoint> frontier;
  for (auto& p : sorted) {
    if (frontier.empty() || p.score(metric_id) > frontier.back().score(metric_id)) {
      frontier.push_back(std::move(p));
    }
  }

  ConvexHull hull;
  hull.metric_id = metric_id;
  for (auto& p : frontier) {
    while (hull.vertices.size() >= 2 &&
           cross(hull.vertices[hull.vertices.size() - 2], hull.vertices.back(), p, metric_id) >=
               0.0) {
      hull.vertices.pop_back();
    }
    hull.vertices.push_back(std::move(p));
  }
  for (const auto& v : hull.vertices) hull.source_resolutions.insert(v.encode_resolution);
  return hull;
}

RQCurve sample_envelope(const ConvexHull& hull, const RQCurve& fixed) {
  RQCurve out{{}, hull.metric_id, {}};
  for (const auto& p : fixed.points) {
    const auto q = hull.envelope_at(p.bitrate_kbps);
    if (!q) {
      throw DataError(fmt::format("{:.3f} kbps lies below the hull's lowest rate", p.bitrate_kbps));
    }
    RatePoint d = p;
    d.scores = {{hull.metric_id, *q}};
    out.points.push_back(std::move(d));
  }
  return out;
}

RatePoint select_per_target(std::span<const RatePoint> candidates, const std::string& metric_id,
                            double target_kbps, double tolerance) {
  const RatePoint* best = nullptr;
  for (const auto& c : candidates) {
    if (std::abs(c.bitrate_kbps / target_kbps - 1.0) > tolerance + 1e-12) continue;
    if (!best) {
      best = &c;
      continue;
    }
    const double qc = c.score(metric_id), qb = best->score(metric_id);
    if (qc > qb || (qc == qb && c.encode_resolution.pixel_count() <
                                    best->encode_resolution.pixel_count())) {
      best = &c;
    }
  }
  if (!best) {
    throw DataError(fmt::format("no candidate within ±{:.1f}% of {:.1f} kbps to select from",
                                tolerance * 100.0, target_kbps));
  }
  return *best;
}

double Cubic::operator()(double x) const {
  const double t = (x - shift) / scale;
  return coeffs[0] + t * (coeffs[1] + t * (coeffs[2] + t * coeffs[3]));
}

double Cubic::integral(double a, double b) const {
  auto antiderivative = [&](double x) {
    const double t = (x - shift) / scale;
    return t * (coeffs[0] + t * (coeffs[1] / 2 + t * (coeffs[2] / 3 + t * coeffs[3] / 4)));
  };
  return scale * (antiderivative(b) - antiderivative(a));
}

Cubic fit_cubic(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("cubic fit: x and y lengths differ");
  std::vector<double> distinct(x.begin(), x.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 4) {
    throw DataError(fmt::format("cubic fit needs 4 distinct abscissae, got {}", distinct.size()));
  }
  Cubic c;
  c.shift = 0.5 * (distinct.front() + distinct.back());
  c.scale = 0.5 * (distinct.back() - distinct.front());
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (x[static_cast<std::size_t>(i)] - c.shift) / c.scale;
    a(i, 0) = 1.0;
    a(i, 1) = t;
    a(i, 2) = t * t;
    a(i, 3) = t * t * t;
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector4d sol = a.colPivHouseholderQr().solve(b);
  for (int k = 0; k < 4; ++k) c.coeffs[static_cast<std::size_t>(k)] = sol(k);
  return c;
}

Cubic fit_log_rate_vs_quality(const RQCurve& curve) {
  const auto q = curve.qualities();
  const auto r = log10_rates(curve);
  return fit_cubic(q, r);
}

Cubic fit_quality_vs_log_rate(const RQCurve& curve) {
  const auto q = curve.qualities();
  const auto r = log10_rates(curve);
  return fit_cubic(r, q);
}

BDResult bd_rate(const RQCurve& anchor, const RQCurve& test) {
  check_bd_curve(anchor, "anchor");
  check_bd_curve(test, "test");
  const auto qa = anchor.qualities(), qt = test.qualities();
  const Interval iv = overlap(qa, qt);
  if (!(iv.hi > iv.lo)) {
    throw DataError(fmt::format("BD-rate: quality ranges do not overlap ({:.4f} .. {:.4f})",
                                iv.lo, iv.hi));
  }
  const Cubic fa = fit_log_rate_vs_quality(anchor);
  const Cubic ft = fit_log_rate_vs_quality(test);
  const double avg = (ft.integral(iv.lo, iv.hi) - fa.integral(iv.lo, iv.hi)) / (iv.hi - iv.lo);
  BDResult out;
  out.bd_rate_percent = (std::pow(10.0, avg) - 1.0) * 100.0;
  out.overlap_interval = iv;
  return out;
}

BDResult bd_quality(const RQCurve& anchor, const RQCurve& test) {
  check_bd_curve(anchor, "anchor");
  check_bd_curve(test, "test");
  const auto ra = log10_rates(anchor), rt = log10_rates(test);
  const Interval iv = overlap(ra, rt);
  if (!(iv.hi > iv.lo)) throw DataError("BD-quality: rate ranges do not overlap");
  const Cubic fa = fit_quality_vs_log_rate(anchor);
  const Cubic ft = fit_quality_vs_log_rate(test);
  BDResult out;
  out.bd_quality = (ft.integral(iv.lo, iv.hi) - fa.integral(iv.lo, iv.hi)) / (iv.hi - iv.lo);
  out.overlap_interval = iv;
  return out;
}

RQCurve average_curves(std::span<const RQCurve> curves) {
  if (curves.empty()) throw DataError("nothing to average");
  const auto& first = curves.front();
  for (const auto& c : curves) {
    if (c.points.size() != first.points.size()) {
      throw DataError(fmt::format("cannot average curves of {} and {} points",
                                  first.points.size(), c.points.size()));
    }
    if (c.metric_id != first.metric_id) throw DataError("cannot average curves of different metrics");
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      if (!c.points[i].rate_index || c.points[i].rate_index != first.points[i].rate_index) {
        throw DataError(fmt::format("misaligned rate index at position {} ({} vs {})", i,
                                    first.points[i].rate_index.value_or("<none>"),
                                    c.points[i].rate_index.value_or("<none>")));
      }
    }
  }
  RQCurve out{{}, first.metric_id, {}};
  const double n = static_cast<double>(curves.size());
  for (std::size_t i = 0; i < first.points.size(); ++i) {
    RatePoint p;
    p.sequence = "average";
    p.codec = first.points[i].codec;
    p.group = first.points[i].group;
    p.encode_resolution = first.points[i].encode_resolution;
    p.evaluation_resolution = first.points[i].evaluation_resolution;
    p.rate_index = first.points[i].rate_index;
    double rate = 0.0, quality = 0.0;
    for (const auto& c : curves) {
      rate += c.points[i].bitrate_kbps;
      quality += c.points[i].score(first.metric_id);
      if (c.points[i].codec != p.codec) p.codec = "mixed";
    }
    p.bitrate_kbps = rate / n;
    p.scores[first.metric_id] = quality / n;
    out.points.push_back(std::move(p));
  }
  return out;
}

}  // namespace rqbench
