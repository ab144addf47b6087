#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rqbench/error.hpp"
#include "rqbench/ratequality.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace rqbench;
using fixture::point;

namespace {

RQCurve scaled(const RQCurve& c, double factor, double quality_shift = 0.0) {
  std::vector<RatePoint> pts = c.points;
  for (auto& p : pts) {
    p.bitrate_kbps *= factor;
    p.scores[c.metric_id] += quality_shift;
  }
  return build_rq_curve(pts, c.metric_id);
}

RQCurve with_codec(const RQCurve& c, const std::string& codec) {
  std::vector<RatePoint> pts = c.points;
  for (auto& p : pts) p.codec = codec;
  return build_rq_curve(pts, c.metric_id);
}

}  // namespace

TEST(Curve, SortsAndWarnsOnQualityDrops) {
  const RQCurve c = build_rq_curve({point("a", 400, 36), point("a", 100, 30), point("a", 200, 35),
                                    point("a", 300, 34.5)},
                                   "q");
  EXPECT_EQ(c.rates(), (std::vector<double>{100, 200, 300, 400}));
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_NE(c.warnings[0].find("200.0 and 300.0"), std::string::npos) << c.warnings[0];
}

TEST(Curve, RejectsMalformedInput) {
  EXPECT_THROW(build_rq_curve({point("a", 100, 30)}, "q"), DataError);
  EXPECT_THROW(build_rq_curve({point("a", 100, 30), point("a", 100, 31)}, "q"), DataError);
  EXPECT_THROW(build_rq_curve({point("a", 100, 30), point("b", 200, 31)}, "q"), DataError);
  EXPECT_THROW(build_rq_curve({point("a", 0, 30), point("a", 200, 31)}, "q"), DataError);
  EXPECT_THROW(build_rq_curve({point("a", 100, 30), point("a", 200, 31)}, "vmaf"), DataError);
}

TEST(Hull, EnvelopeMatchesBruteForce) {
  std::mt19937_64 rng(17);
  const std::vector<Dimensions> res{{1920, 1080}, {1280, 720}, {960, 540}};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RatePoint> pts;
    std::vector<oracle::RQ> raw;
    const int n = fixture::uniform_int(rng, 1, 10);
    for (int i = 0; i < n; ++i) {
      const double r = std::round(fixture::uniform(rng, 100, 5000));
      const double q = std::round(fixture::uniform(rng, 20, 50) * 4) / 4;
      pts.push_back(point("c", r, q, "q", res[rng() % res.size()]));
      raw.push_back({r, q});
    }
    const ConvexHull hull = upper_convex_hull(pts, "q");
    for (std::size_t i = 1; i < hull.vertices.size(); ++i) {
      EXPECT_LT(hull.vertices[i - 1].bitrate_kbps, hull.vertices[i].bitrate_kbps);
      EXPECT_LT(hull.vertices[i - 1].score("q"), hull.vertices[i].score("q"));
    }
    for (int k = 0; k < 30; ++k) {
      const double probe = fixture::uniform(rng, 50, 5500);
      const auto want = oracle::envelope(raw, probe);
      const auto got = hull.envelope_at(probe);
      ASSERT_EQ(got.has_value(), want.has_value()) << probe;
      if (want) EXPECT_NEAR(*got, *want, 1e-9) << "trial " << trial << " rate " << probe;
    }
  }
}

TEST(Hull, CollinearAndDuplicatePoints) {
  const std::vector<RatePoint> pts{point("c", 100, 30, "q", {1920, 1080}),
                                   point("c", 200, 32, "q"), point("c", 300, 34, "q"),
                                   point("c", 100, 30, "q", {960, 540})};
  const ConvexHull hull = upper_convex_hull(pts, "q");
  ASSERT_EQ(hull.vertices.size(), 2u);
  EXPECT_EQ(hull.vertices[0].encode_resolution, (Dimensions{960, 540}));
  EXPECT_EQ(hull.vertices[1].bitrate_kbps, 300);
  EXPECT_EQ(hull.source_resolutions.size(), 2u);
}

TEST(Hull, MixedEvaluationResolutionRejected) {
  auto b = point("c", 200, 32);
  b.evaluation_resolution = {1280, 720};
  EXPECT_THROW(upper_convex_hull(std::vector<RatePoint>{point("c", 100, 30), b}, "q"), DataError);
}

TEST(Hull, SampleEnvelopeKeepsLabels) {
  const std::vector<RatePoint> pts{point("c", 100, 30, "q", {960, 540}), point("c", 400, 40)};
  const ConvexHull hull = upper_convex_hull(pts, "q");
  auto fixed_pts = std::vector<RatePoint>{point("c", 200, 31), point("c", 400, 40)};
  fixed_pts[0].rate_index = "R1";
  const RQCurve fixed = build_rq_curve(fixed_pts, "q");
  const RQCurve dyn = sample_envelope(hull, fixed);
  EXPECT_NEAR(dyn.points[0].score("q"), 30 + 10.0 / 3.0, 1e-12);
  EXPECT_EQ(dyn.points[0].rate_index, "R1");
  EXPECT_EQ(dyn.points[0].encode_resolution, (Dimensions{1920, 1080}));
  const RQCurve low = build_rq_curve({point("c", 50, 25), point("c", 400, 40)}, "q");
  EXPECT_THROW(sample_envelope(hull, low), DataError);
}

TEST(SelectPerTarget, BestInToleranceWithLowResTieBreak) {
  const std::vector<RatePoint> c{point("c", 1000, 40, "q", {1920, 1080}),
                                 point("c", 1020, 41, "q", {1280, 720}),
                                 point("c", 990, 41, "q", {960, 540}),
                                 point("c", 1100, 45, "q", {960, 540})};
  const RatePoint pick = select_per_target(c, "q", 1000.0);
  EXPECT_EQ(pick.encode_resolution, (Dimensions{960, 540}));
  EXPECT_EQ(pick.bitrate_kbps, 990);
  EXPECT_EQ(select_per_target(c, "q", 1000.0, 0.1).bitrate_kbps, 1100);
  EXPECT_THROW(select_per_target(c, "q", 2000.0), DataError);
}

TEST(SelectPerTarget, InvariantUnderMonotoneQualityTransform) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RatePoint> c, t;
    for (int i = 0; i < 6; ++i) {
      const double q = fixture::uniform(rng, 0.1, 1.0);
      c.push_back(point("c", fixture::uniform(rng, 970, 1030), q, "q",
                        {160 * (i + 1), 90 * (i + 1)}));
      t.push_back(c.back());
      t.back().scores["q"] = std::exp(3 * q) - 7;
    }
    const RatePoint a = select_per_target(c, "q", 1000), b = select_per_target(t, "q", 1000);
    EXPECT_EQ(a.bitrate_kbps, b.bitrate_kbps);
    EXPECT_EQ(a.encode_resolution, b.encode_resolution);
  }
}

TEST(Cubic, FitMatchesOracleAndIntegratesExactly) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x, y;
    const int n = fixture::uniform_int(rng, 4, 8);
    double v = fixture::uniform(rng, 20, 30);
    for (int i = 0; i < n; ++i) {
      v += fixture::uniform(rng, 0.5, 4);
      x.push_back(v);
      y.push_back(fixture::uniform(rng, 2, 4));
    }
    std::sort(y.begin(), y.end());
    const Cubic got = fit_cubic(x, y);
    const oracle::PolyFit want = oracle::cubic_fit(x, y);
    for (double p = x.front(); p <= x.back(); p += 0.25) {
      EXPECT_NEAR(got(p), static_cast<double>(want(p)), 1e-9);
    }
    const double a = x.front(), b = x.back();
    const auto ref = oracle::trapezoid([&](long double t) { return want(t); }, a, b, 20000);
    EXPECT_NEAR(got.integral(a, b), static_cast<double>(ref), 1e-6 * (b - a));
  }
  const std::vector<double> x{1, 1, 2, 3}, y{1, 2, 3, 4};
  EXPECT_THROW(fit_cubic(x, y), DataError);
}

TEST(Cubic, ReproducesExactCubic) {
  const std::vector<double> x{30, 33, 36, 39, 42};
  std::vector<double> y;
  for (double v : x) y.push_back(0.002 * v * v * v - 0.1 * v * v + v + 3);
  const Cubic c = fit_cubic(x, y);
  for (double v = 30; v <= 42; v += 1.5) EXPECT_NEAR(c(v), 0.002 * v * v * v - 0.1 * v * v + v + 3, 1e-9);
}

TEST(BdRate, SelfIsZeroAndScalingIsExact) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const RQCurve a = fixture::random_monotone_curve(rng, "a", fixture::uniform_int(rng, 4, 7));
    EXPECT_NEAR(bd_rate(a, with_codec(a, "b")).bd_rate_percent, 0.0, 1e-9);
    const double f = fixture::uniform(rng, 0.3, 3.0);
    EXPECT_NEAR(bd_rate(a, scaled(a, f)).bd_rate_percent, (f - 1) * 100, 1e-8);
    // Scaling both curves leaves the comparison unchanged.
    const RQCurve b = scaled(a, 1.3, 0.4);
    const double base = bd_rate(a, b).bd_rate_percent;
    EXPECT_NEAR(bd_rate(scaled(a, 7.0), scaled(b, 7.0)).bd_rate_percent, base, 1e-8);
  }
}

TEST(BdRate, SwapGivesReciprocalRatio) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const RQCurve a = fixture::random_monotone_curve(rng, "a", 5);
    const RQCurve b = scaled(a, fixture::uniform(rng, 0.6, 1.6), fixture::uniform(rng, -1, 1));
    const double ab = bd_rate(a, b).bd_rate_percent / 100 + 1;
    const double ba = bd_rate(b, a).bd_rate_percent / 100 + 1;
    EXPECT_NEAR(ab * ba, 1.0, 1e-9);
  }
}

TEST(BdRate, Errors) {
  const RQCurve three = build_rq_curve({point("a", 100, 30), point("a", 200, 32), point("a", 400, 34)}, "q");
  const RQCurve four = build_rq_curve(
      {point("b", 100, 30), point("b", 200, 32), point("b", 400, 34), point("b", 800, 36)}, "q");
  EXPECT_THROW(bd_rate(three, four), DataError);
  const RQCurve high = build_rq_curve(
      {point("c", 100, 40), point("c", 200, 42), point("c", 400, 44), point("c", 800, 46)}, "q");
  EXPECT_THROW(bd_rate(four, high), DataError);
  const RQCurve dip = build_rq_curve(
      {point("d", 100, 30), point("d", 200, 33), point("d", 400, 32), point("d", 800, 36)}, "q");
  EXPECT_THROW(bd_rate(four, dip), DataError);
  const RQCurve small_dip = build_rq_curve(
      {point("d", 100, 30), point("d", 200, 33), point("d", 400, 32.6), point("d", 800, 36)}, "q");
  EXPECT_NO_THROW(bd_rate(four, small_dip));
}

TEST(BdQuality, ShiftAndAntisymmetry) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const RQCurve a = fixture::random_monotone_curve(rng, "a", 5);
    const double shift = fixture::uniform(rng, -2, 2);
    const RQCurve b = scaled(a, 1.0, shift);
    EXPECT_NEAR(bd_quality(a, b).bd_quality, shift, 1e-9);
    const RQCurve c = scaled(a, fixture::uniform(rng, 0.7, 1.4), fixture::uniform(rng, -1, 1));
    EXPECT_NEAR(bd_quality(a, c).bd_quality, -bd_quality(c, a).bd_quality, 1e-9);
  }
}

TEST(AverageCurves, PointwiseMeanByRateIndex) {
  auto make = [](const std::string& seq, double k) {
    std::vector<RatePoint> pts;
    for (int i = 0; i < 3; ++i) {
      pts.push_back(point("x", k * (i + 1) * 100, 30 + k * i, "q", {1920, 1080}, seq));
      pts.back().rate_index = "R" + std::to_string(i + 1);
    }
    return build_rq_curve(pts, "q");
  };
  const std::vector<RQCurve> curves{make("a", 1), make("b", 3)};
  const RQCurve avg = average_curves(curves);
  ASSERT_EQ(avg.points.size(), 3u);
  EXPECT_DOUBLE_EQ(avg.points[1].bitrate_kbps, 400);
  EXPECT_DOUBLE_EQ(avg.points[2].score("q"), 34);
  EXPECT_EQ(avg.points[0].rate_index, "R1");
  auto bad = curves;
  bad[1].points[0].rate_index = "R2";
  EXPECT_THROW(average_curves(bad), DataError);
  EXPECT_THROW(average_curves(std::vector<RQCurve>{}), DataError);
}
