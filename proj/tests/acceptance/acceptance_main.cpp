// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rqbench/cli/commands.hpp"
#include "rqbench/cli/manifest.hpp"
#include "rqbench/cli/pipeline.hpp"
#include "rqbench/codecs.hpp"
#include "rqbench/correlation.hpp"
#include "rqbench/csv.hpp"
#include "rqbench/metrics.hpp"
#include "rqbench/ratequality.hpp"
#include "rqbench/resample.hpp"
#include "rqbench/special_functions.hpp"
#include "rqbench/subjective.hpp"
#include "rqbench/synthetic.hpp"
#include "rqbench/toy_codec.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace rqbench;
using rqbench::fixture::point;
using rqbench::fixture::uniform;
using rqbench::fixture::uniform_int;

namespace {

/// Collects the first few failure messages of one criterion.
struct Check {
  int failures = 0;
  std::vector<std::string> notes;
  std::string summary;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures;
    if (notes.size() < 5) notes.push_back(what);
  }
  void near(double actual, double expected, double tol, const std::string& what) {
    expect(std::abs(actual - expected) <= tol,
           fmt::format("{}: {:.17g} vs {:.17g} (|diff| {:.3g} > {:.1g})", what, actual, expected,
                       std::abs(actual - expected), tol));
  }
};

struct Criterion {
  int id;
  std::string title;
  double time_limit_s;  // 0 = no limit
  std::function<void(Check&)> run;
};

/// Pair of curves with overlapping quality ranges.
std::pair<RQCurve, RQCurve> random_pair(std::mt19937_64& rng) {
  RQCurve a = fixture::random_monotone_curve(rng, "a", uniform_int(rng, 4, 6));
  std::vector<RatePoint> b;
  const double shift = uniform(rng, -1.0, 1.0), factor = uniform(rng, 0.6, 1.7);
  for (const auto& p : a.points) {
    b.push_back(point("b", p.bitrate_kbps * factor * uniform(rng, 0.9, 1.1),
                      p.score("q") + shift + uniform(rng, -0.3, 0.3)));
  }
  return {a, build_rq_curve(b, "q")};
}

// --------------------------------------------------------------- criteria

void bd_self_test(Check& c) {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 100; ++i) {
    const RQCurve curve = fixture::random_monotone_curve(rng, "c", uniform_int(rng, 4, 6));
    const double self = bd_rate(curve, curve).bd_rate_percent;
    c.expect(std::abs(self) <= 1e-12, fmt::format("curve {}: bd_rate(c, c) = {:.3g}", i, self));
    auto [a, b] = random_pair(rng);
    const double ab = bd_rate(a, b).bd_rate_percent, ba = bd_rate(b, a).bd_rate_percent;
    c.near((1 + ab / 100) * (1 + ba / 100), 1.0, 1e-9, fmt::format("pair {} antisymmetry", i));
  }
  c.summary = "100 self pairs, 100 swapped pairs";
}

void bd_analytic(Check& c) {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const RQCurve anchor = fixture::random_monotone_curve(rng, "a", uniform_int(rng, 4, 6));
    for (const double factor : {2.0, 0.5}) {
      std::vector<RatePoint> scaled = anchor.points;
      for (auto& p : scaled) p.bitrate_kbps *= factor;
      const double got = bd_rate(anchor, build_rq_curve(scaled, "q")).bd_rate_percent;
      const double want = factor == 2.0 ? 100.0 : -50.0;
      worst = std::max(worst, std::abs(got - want));
      c.near(got, want, 1e-9, fmt::format("curve {} rate x{}", i, factor));
    }
  }
  c.summary = fmt::format("200 scaled curves, worst error {:.2g}", worst);
}

void bd_oracle(Check& c) {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto [a, b] = random_pair(rng);
    const auto qa = a.qualities(), qb = b.qualities();
    const double lo = std::max(*std::min_element(qa.begin(), qa.end()),
                               *std::min_element(qb.begin(), qb.end()));
    const double hi = std::min(*std::max_element(qa.begin(), qa.end()),
                               *std::max_element(qb.begin(), qb.end()));
    const Cubic fa = fit_log_rate_vs_quality(a), fb = fit_log_rate_vs_quality(b);
    const long double ia = oracle::trapezoid([&](long double q) { return fa(q); }, lo, hi, 1000000);
    const long double ib = oracle::trapezoid([&](long double q) { return fb(q); }, lo, hi, 1000000);
    const double want = static_cast<double>((std::pow(10.0L, (ib - ia) / (hi - lo)) - 1) * 100);
    const double got = bd_rate(a, b).bd_rate_percent;
    worst = std::max(worst, std::abs(got - want));
    c.near(got, want, 1e-9, fmt::format("pair {}", i));
  }
  c.summary = fmt::format("100 pairs, worst error {:.2g}", worst);
}

void hull_oracle(Check& c) {
  std::mt19937_64 rng(404);
  const std::vector<Dimensions> ladder{{1920, 1080}, {1280, 720}, {960, 544}, {640, 360}};
  long probes = 0;
  for (int set = 0; set < 1000; ++set) {
    std::vector<RatePoint> pts;
    const int n_res = uniform_int(rng, 1, 4);
    for (int r = 0; r < n_res && pts.size() < 12; ++r) {
      double rate = uniform(rng, 100, 2000), q = uniform(rng, 20, 40);
      const int n = uniform_int(rng, 1, 4);
      for (int k = 0; k < n && pts.size() < 12; ++k) {
        pts.push_back(point("x", rate, q, "q", ladder[static_cast<std::size_t>(r)]));
        rate *= uniform(rng, 1.2, 2.5);
        q += uniform(rng, -1.0, 5.0);
      }
    }
    std::vector<oracle::RQ> raw;
    double max_rate = 0.0;
    for (const auto& p : pts) {
      raw.push_back({p.bitrate_kbps, p.score("q")});
      max_rate = std::max(max_rate, p.bitrate_kbps);
    }
    const ConvexHull hull = upper_convex_hull(pts, "q");
    std::vector<double> probe_rates;
    for (const auto& p : raw) probe_rates.push_back(p.rate);
    for (int k = 0; k < 20; ++k) probe_rates.push_back(uniform(rng, 50, max_rate * 1.2));
    for (double r : probe_rates) {
      const auto want = oracle::envelope(raw, r);
      const auto got = hull.envelope_at(r);
      ++probes;
      c.expect(want.has_value() == got.has_value(),
               fmt::format("set {} rate {:.3f}: defined {} vs {}", set, r, got.has_value(),
                           want.has_value()));
      if (want && got) c.near(*got, *want, 1e-9 * std::max(1.0, std::abs(*want)),
                              fmt::format("set {} envelope at {:.3f}", set, r));
    }
    for (const auto& p : raw) {
      const auto env = hull.envelope_at(p.rate);
      c.expect(env && *env >= p.quality - 1e-12,
               fmt::format("set {}: point ({:.3f}, {:.3f}) above the hull", set, p.rate, p.quality));
    }
    for (std::size_t v = 1; v < hull.vertices.size(); ++v) {
      c.expect(hull.vertices[v].bitrate_kbps > hull.vertices[v - 1].bitrate_kbps &&
                   hull.vertices[v].score("q") > hull.vertices[v - 1].score("q"),
               fmt::format("set {}: vertices not strictly increasing", set));
    }
  }
  c.summary = fmt::format("1000 sets, {} envelope probes", probes);
}

void do_pipeline(Check& c, const fs::path& source_dir) {
  cli::RunManifest m = cli::load_manifest(source_dir / "data" / "toy_demo.toml");
  const auto& group = m.group("DO");
  c.expect(group.ladder.size() == 2 && group.qps.size() == 5, "demo manifest shape changed");
  std::vector<std::string> names;
  for (const auto& s : m.sequences) {
    c.expect(s.dims == Dimensions{320, 180} && s.frames.value_or(0) == 60,
             fmt::format("{}: expected 60 frames of 320x180", s.name));
    names.push_back(s.name);
  }
  c.expect(names.size() == 3, "expected three synthetic sequences");
  cli::PipelineOptions opts;
  opts.jobs = 1;
  opts.work_dir = fs::temp_directory_path() / "rqbench_acceptance_do";
  const auto points = cli::encode_ladder(m, names, {"toy"}, group, group.qps, opts);
  c.expect(points.size() == 30, fmt::format("expected 30 encodes, got {}", points.size()));
  for (const auto& v : cli::rate_monotonicity_violations(points)) c.expect(false, v);
  std::vector<std::string> notes;
  for (const auto& name : names) {
    std::vector<RatePoint> seq_points;
    for (const auto& p : points)
      if (p.sequence == name) seq_points.push_back(p);
    for (const auto& metric : m.metrics) {
      for (const Dimensions res : group.ladder) {
        const auto cmp = cli::compare_do_vs_fixed(seq_points, res, metric);
        c.expect(cmp.min_quality_delta >= 0.0,
                 fmt::format("{} {} {}: hull below fixed curve by {:.3g}", name, metric,
                             to_string(res), -cmp.min_quality_delta));
        for (std::size_t i = 0; i < cmp.fixed.points.size(); ++i) {
          const auto env = cmp.hull.envelope_at(cmp.fixed.points[i].bitrate_kbps);
          c.expect(env && *env >= cmp.fixed.points[i].score(metric),
                   fmt::format("{} {} {}: rate point {} not dominated", name, metric,
                               to_string(res), i));
        }
        if (metric != m.selection_metric) continue;
        c.expect(cmp.bd_error.empty(), fmt::format("{} {}: {}", name, to_string(res), cmp.bd_error));
        c.expect(cmp.bd.bd_rate_percent <= 0.0,
                 fmt::format("{} {}: hull BD-rate {:.4f}% > 0", name, to_string(res),
                             cmp.bd.bd_rate_percent));
        if (res == group.reference)
          notes.push_back(fmt::format("{} {:.1f}%", name, cmp.bd.bd_rate_percent));
      }
    }
  }
  fs::remove_all(opts.work_dir);
  c.summary = fmt::format("hull BD-rate vs 320x180 on psnr: {}", fmt::join(notes, ", "));
}

void rate_targeting(Check& c) {
  // Short clips keep the exhaustive sweep affordable.
  const auto corpus = standard_synthetic_corpus({320, 180}, 8);
  const EncoderAdapter toy = EncoderAdapter::toy({toy::kMinQp, toy::kMaxQp});
  constexpr double tol = 0.03;
  std::mt19937_64 rng(606);
  int checked = 0, fractional = 0, rises = 0;
  double worst_rise = 0.0;
  for (const auto& seq : corpus) {
    std::vector<double> sweep;
    for (int qp = toy::kMinQp; qp <= toy::kMaxQp; ++qp)
      sweep.push_back(encode_with_qp(toy, seq, qp).bitrate_kbps);
    for (std::size_t q = 1; q < sweep.size(); ++q)
      if (sweep[q] > sweep[q - 1]) {
        ++rises;
        worst_rise = std::max(worst_rise, sweep[q] / sweep[q - 1] - 1.0);
      }

    std::map<int, std::vector<double>> increment_rates;  // base qp -> rate per k
    auto oracle_setting = [&](double target) -> std::optional<QpSetting> {
      const double upper = target * (1 + tol), lower = target * (1 - tol);
      int qp = toy::kMinQp;
      while (qp <= toy::kMaxQp && sweep[static_cast<std::size_t>(qp)] > upper) ++qp;
      if (qp > toy::kMaxQp || (qp == toy::kMinQp && sweep[static_cast<std::size_t>(qp)] < lower))
        return std::nullopt;
      if (sweep[static_cast<std::size_t>(qp)] >= lower) return QpSetting{qp, std::nullopt};
      const int base = qp - 1;
      auto& rates = increment_rates[base];
      if (rates.empty())
        for (int k = 0; k < static_cast<int>(seq.frame_count()); ++k)
          rates.push_back(encode_with_setting(toy, seq, {base, k}).bitrate_kbps);
      for (int k = static_cast<int>(rates.size()) - 1; k >= 0; --k)
        if (rates[static_cast<std::size_t>(k)] <= upper && rates[static_cast<std::size_t>(k)] >= lower)
          return QpSetting{base, k};
      return std::nullopt;
    };

    const double lo = std::log(sweep.back()), hi = std::log(sweep.front());
    int taken = 0, attempts = 0;
    const int quota = seq.name() == corpus.back().name() ? 20 - checked : 7;
    while (taken < quota && attempts++ < 200) {
      const double target = std::exp(uniform(rng, lo, hi));
      const auto expected = oracle_setting(target);
      if (!expected) continue;
      ++taken;
      ++checked;
      const RateTargetOutcome got = target_bitrate_search(toy, seq, target, tol);
      c.expect(std::abs(got.relative_error) <= tol,
               fmt::format("{} target {:.1f}: relative error {:.4f}", seq.name(), target,
                           got.relative_error));
      c.expect(got.achieved.qp == *expected,
               fmt::format("{} target {:.1f}: search chose qp {}+{} but the sweep says {}+{}",
                           seq.name(), target, got.achieved.qp.qp,
                           got.achieved.qp.increment_frame.value_or(-1), expected->qp,
                           expected->increment_frame.value_or(-1)));
      if (expected->increment_frame) ++fractional;
    }
    for (const double target : {sweep.front() * 1.5, sweep.back() * 0.5}) {
      bool thrown = false;
      try {
        target_bitrate_search(toy, seq, target, tol);
      } catch (const TargetUnreachableError& e) {
        thrown = true;
        const bool too_high = target > sweep.front();
        c.expect(too_high ? e.qp_below_target() == toy::kMinQp && !e.qp_above_target()
                          : e.qp_above_target() == toy::kMaxQp && !e.qp_below_target(),
                 fmt::format("{} target {:.1f}: wrong bracket in error", seq.name(), target));
      }
      c.expect(thrown, fmt::format("{} target {:.1f}: expected TargetUnreachableError",
                                   seq.name(), target));
    }
  }
  c.expect(checked == 20, fmt::format("only {} achievable targets drawn", checked));
  c.summary = fmt::format(
      "{} targets ({} needing a fractional pass), 6 unreachable; sweep has {} QP steps where "
      "rate rises (worst +{:.2f}%)",
      checked, fractional, rises, 100.0 * worst_rise);
}

void metric_sanity(Check& c) {
  const Dimensions d{64, 64};
  const auto ref = fixture::luma_sequence(d, 8, 2, [](int, int, int) { return 100; });
  const auto dist = fixture::luma_sequence(d, 8, 2, [](int, int, int) { return 101; });
  c.near(psnr(ref, dist).value, 48.1308036086791, 1e-4, "PSNR of a uniform difference of 1");

  std::mt19937_64 rng(707);
  for (int i = 0; i < 5; ++i) {
    const auto seq = fixture::random_sequence(rng, {128, 128}, i % 2 ? 10 : 8, 2);
    const double s = ssim(seq, seq).value, ms = ms_ssim(seq, seq).value;
    c.expect(s == 1.0, fmt::format("SSIM of identical input = {:.17g}", s));
    c.expect(ms == 1.0, fmt::format("MS-SSIM of identical input = {:.17g}", ms));
  }
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Plane a = fixture::random_plane(rng, 64, 64, 255);
    Plane b = a;
    const int noise = i < 10 ? 255 : 8 * (i - 9);
    for (auto& s : b.samples())
      s = static_cast<std::uint16_t>(
          std::clamp(static_cast<int>(s) + uniform_int(rng, -noise, noise), 0, 255));
    const auto want = oracle::ssim(oracle::grid(a), oracle::grid(b), 255);
    const auto got = ssim_plane(a, b, 255);
    worst = std::max(worst, std::abs(got.ssim - want.first));
    c.near(got.ssim, want.first, 1e-9, fmt::format("pair {} SSIM", i));
    c.near(got.cs, want.second, 1e-9, fmt::format("pair {} contrast-structure", i));
  }
  c.summary = fmt::format("20 random pairs, worst SSIM error {:.2g}", worst);
}

void resampler(Check& c) {
  const std::vector<std::pair<Dimensions, Dimensions>> dc_cases{
      {{64, 64}, {32, 32}},   {{32, 32}, {64, 64}},       {{96, 96}, {64, 64}},
      {{64, 64}, {96, 96}},   {{1920, 1080}, {960, 544}}, {{960, 544}, {1920, 1080}},
      {{1920, 1080}, {1280, 720}}};
  for (const auto& [from, to] : dc_cases) {
    for (const int depth : {8, 10}) {
      const int max = (1 << depth) - 1;
      for (const int level : {0, 1, max / 3, max}) {
        const auto frame = VideoFrame::filled(from, depth, static_cast<std::uint16_t>(level),
                                              static_cast<std::uint16_t>(max - level),
                                              static_cast<std::uint16_t>(level / 2));
        const auto out = resize_frame(frame, to);
        c.expect(out == VideoFrame::filled(to, depth, static_cast<std::uint16_t>(level),
                                           static_cast<std::uint16_t>(max - level),
                                           static_cast<std::uint16_t>(level / 2)),
                 fmt::format("DC level {} at {}-bit not preserved {} -> {}", level, depth,
                             to_string(from), to_string(to)));
      }
    }
  }
  std::mt19937_64 rng(808);
  double worst = 0.0;
  for (const Dimensions to : std::vector<Dimensions>{{16, 16}, {21, 21}, {48, 48}, {64, 64},
                                                     {17, 30}, {32, 32}, {40, 18}}) {
    const Plane src = fixture::random_plane(rng, 32, 32, 1023);
    const auto got = ResamplePlan::make(src.dims(), to).apply_unrounded(src);
    const auto want = oracle::resample_2d(src, to);
    for (std::size_t i = 0; i < got.size(); ++i) {
      worst = std::max(worst, std::abs(got[i] - want[i]));
      c.near(got[i], want[i], 1e-6, fmt::format("32x32 -> {} sample {}", to_string(to), i));
    }
  }
  c.summary = fmt::format("DC exact in {} cases, worst 2-D oracle error {:.2g}",
                          dc_cases.size() * 8, worst);
}

void statistics(Check& c) {
  std::mt19937_64 rng(909);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = uniform_int(rng, 5, 60), levels = uniform_int(rng, 3, 12);
    std::vector<double> a(static_cast<std::size_t>(n)), b(a.size());
    do {
      for (auto& v : a) v = uniform_int(rng, 0, levels);
      for (auto& v : b) v = uniform_int(rng, 0, levels) + 0.25 * uniform_int(rng, 0, 3);
    } while (oracle::ranks(a) == std::vector<double>(a.size(), (n + 1) / 2.0) ||
             oracle::ranks(b) == std::vector<double>(b.size(), (n + 1) / 2.0));
    const double s = spearman(a, b), l = pearson(a, b);
    worst = std::max({worst, std::abs(s - oracle::spearman(a, b)), std::abs(l - oracle::pearson(a, b))});
    c.near(s, oracle::spearman(a, b), 1e-12, fmt::format("vector {} SROCC", i));
    c.near(l, oracle::pearson(a, b), 1e-12, fmt::format("vector {} LCC", i));
  }
  for (int i = 0; i < 50; ++i) {
    std::vector<double> a(static_cast<std::size_t>(uniform_int(rng, 2, 30))),
        b(static_cast<std::size_t>(uniform_int(rng, 2, 30)));
    const double shift = uniform(rng, -2, 2);
    for (auto& v : a) v = fixture::normal(rng);
    for (auto& v : b) v = fixture::normal(rng) + shift;
    const AnovaResult r = anova_one_way(a, b);
    const double t = oracle::pooled_t(a, b);
    c.near(r.f, t * t, 1e-9 * std::max(1.0, t * t), fmt::format("ANOVA {} F vs t^2", i));
  }
  double worst_p = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double f = i < 25 ? uniform(rng, 0.01, 5.0) : uniform(rng, 5.0, 40.0);
    const double d2 = uniform_int(rng, 2, 120);
    const double want = 1.0 - oracle::f_cdf(f, 1, d2);
    const double got = f_survival(f, 1, d2);
    worst_p = std::max(worst_p, std::abs(got - want));
    c.near(got, want, 1e-6, fmt::format("p-value F={:.4f} d2={}", f, d2));
  }
  c.summary = fmt::format("1000 tied vectors (worst {:.2g}), 50 ANOVA, 50 p-values (worst {:.2g})",
                          worst, worst_p);
}

void logistic_recovery(Check& c) {
  const std::array<double, 4> planted{90, 10, 50, 8};
  std::vector<double> x, y, w;
  for (int i = 0; i <= 40; ++i) {
    x.push_back(20.0 + 1.5 * i);
    y.push_back(rqbench::logistic(planted, x.back()));
    w.push_back(1.0);
  }
  const FittedModel first = logistic_fit(x, y, w);
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sse += std::pow(first.predict(x[i]) - y[i], 2);
  const double rmse = std::sqrt(sse / static_cast<double>(x.size()));
  c.expect(rmse < 1e-6, fmt::format("prediction RMSE {:.3g}", rmse));
  for (int run = 0; run < 3; ++run) {
    const FittedModel again = logistic_fit(x, y, w);
    c.expect(again.beta == first.beta && again.iterations == first.iterations,
             "refit differs from the first fit");
  }
  c.summary = fmt::format("RMSE {:.2g}, beta = ({:.6f}, {:.6f}, {:.6f}, {:.6f}), {} iterations",
                          rmse, first.beta[0], first.beta[1], first.beta[2], std::abs(first.beta[3]),
                          first.iterations);
}

std::vector<TrialScore> gaussian_panel(std::mt19937_64& rng, int subjects, int points,
                                       const std::function<double(int, int)>& extra) {
  std::vector<TrialScore> trials;
  for (int p = 0; p < points; ++p) {
    const double truth = uniform(rng, 15, 45);
    for (int s = 0; s < subjects; ++s) {
      const double ref = uniform(rng, 75, 85);
      const double diff = truth + 4.0 * fixture::normal(rng) + extra(s, p);
      trials.push_back({"1", fmt::format("S{:02}", s), fmt::format("seq{}", p / 50), "toy",
                        fmt::format("R{}", p % 50 + 1), ref, ref - diff});
    }
  }
  return trials;
}

void screening(Check& c) {
  // Large panels keep an ordinary observer's 2-sigma exceedance rate (about
  // 4.6%) reliably under the 5% rejection threshold.
  constexpr int kPoints = 2000;
  std::mt19937_64 rng(1111);
  const auto clean = screen_subjects(gaussian_panel(rng, 20, kPoints, [](int, int) { return 0.0; }));
  c.expect(clean.rejected.empty(),
           fmt::format("clean panel rejected {}", fmt::join(clean.rejected, ",")));
  c.expect(clean.retained.size() == 20, "clean panel lost subjects");
  const auto planted = screen_subjects(gaussian_panel(rng, 20, kPoints, [](int s, int p) {
    if (s != 7 || p % 2) return 0.0;
    return p % 4 ? 12.0 : -12.0;  // +-3 sigma on alternate points
  }));
  c.expect(planted.rejected == std::vector<std::string>{"S07"},
           fmt::format("planted panel rejected [{}]", fmt::join(planted.rejected, ",")));
  c.summary = fmt::format("clean: 0 of 20 rejected; planted: [{}]", fmt::join(planted.rejected, ","));
}

void report_fidelity(Check& c, const fs::path& source_dir) {
  const fs::path csv_path = source_dir / "data" / "reference_targets.csv";
  const fs::path out = fs::temp_directory_path() / "rqbench_acceptance_report";
  fs::remove_all(out);
  std::ostringstream sout, serr;
  const int code = cli::run({"report", "--targets", csv_path.string(), "-o", out.string()}, sout, serr);
  c.expect(code == 0, fmt::format("report exited {}: {}", code, serr.str()));
  if (code != 0) return;
  const std::string text = read_text_file(out / "manifest.toml");
  const cli::RunManifest m = cli::load_manifest(out / "manifest.toml");
  const CsvTable table = read_csv_file(csv_path);
  c.expect(m.targets.size() == table.rows.size(),
           fmt::format("{} targets for {} rows", m.targets.size(), table.rows.size()));
  std::size_t cursor = 0;
  for (std::size_t r = 0; r < table.rows.size() && r < m.targets.size(); ++r) {
    const auto& row = table.rows[r];
    std::vector<std::string> cells;
    for (std::size_t k = 0; k < table.header.size(); ++k)
      if (table.header[k].starts_with("R") && !row[k].empty()) cells.push_back(row[k]);
    const auto& t = m.targets[r];
    c.expect(t.sequence == row[table.require_column("sequence")] &&
                 t.group == row[table.require_column("group")],
             fmt::format("row {}: target order differs", r));
    c.expect(cli::format_kbps_list(t.kbps) == fmt::format("{}", fmt::join(cells, "/")),
             fmt::format("row {}: {} vs {}", r, cli::format_kbps_list(t.kbps),
                         fmt::join(cells, "/")));
    const std::string literal = fmt::format("kbps = [{}]", fmt::join(cells, ", "));
    const auto at = text.find(literal, cursor);
    c.expect(at != std::string::npos, fmt::format("row {}: '{}' not found in order", r, literal));
    if (at != std::string::npos) cursor = at + literal.size();
  }
  const auto v1a = std::find_if(m.targets.begin(), m.targets.end(), [](const cli::TargetEntry& t) {
    return t.sequence == "AirAcrobatic" && t.group == "A";
  });
  c.expect(v1a != m.targets.end() && cli::format_kbps_list(v1a->kbps) == "1300/2250/4700/9270",
           "V1 group A list");
  fs::remove_all(out);
  c.summary = fmt::format("{} target rows byte-match", table.rows.size());
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path source_dir = argc > 1 ? fs::path(argv[1]) : fs::path(RQBENCH_SOURCE_DIR);
  const std::vector<Criterion> criteria{
      {1, "BD-rate self-test and antisymmetry", 1.0, bd_self_test},
      {2, "BD-rate analytic rate doubling and halving", 0.0, bd_analytic},
      {3, "BD closed form vs trapezoid oracle", 10.0, bd_oracle},
      {4, "convex hull vs brute-force envelope", 5.0, hull_oracle},
      {5, "end-to-end DO pipeline on the toy codec", 300.0,
       [&](Check& c) { do_pipeline(c, source_dir); }},
      {6, "rate targeting vs exhaustive sweep", 120.0, rate_targeting},
      {7, "metric sanity and SSIM oracle", 0.0, metric_sanity},
      {8, "resampler DC invariance and 2-D oracle", 0.0, resampler},
      {9, "rank/linear correlation, ANOVA and F p-values", 0.0, statistics},
      {10, "logistic fit recovers planted parameters", 0.0, logistic_recovery},
      {11, "subject screening", 0.0, screening},
      {12, "report transcribes target table", 0.0,
       [&](Check& c) { report_fidelity(c, source_dir); }},
  };
  int failed = 0;
  for (const auto& crit : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      crit.run(check);
    } catch (const std::exception& e) {
      check.expect(false, fmt::format("uncaught exception: {}", e.what()));
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (crit.time_limit_s > 0.0)
      check.expect(seconds < crit.time_limit_s,
                   fmt::format("took {:.2f} s, limit {:.0f} s", seconds, crit.time_limit_s));
    const bool pass = check.failures == 0;
    failed += pass ? 0 : 1;
    std::printf("%s criterion %d: %s (%.2f s) %s\n", pass ? "PASS" : "FAIL", crit.id,
                crit.title.c_str(), seconds, check.summary.c_str());
    for (const auto& note : check.notes) std::printf("    %s\n", note.c_str());
    if (check.failures > static_cast<int>(check.notes.size()))
      std::printf("    ... %d more\n", check.failures - static_cast<int>(check.notes.size()));
    std::fflush(stdout);
  }
  std::printf("SKIP criterion 13: published-dataset reproduction (advisory, no data supplied)\n");
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
