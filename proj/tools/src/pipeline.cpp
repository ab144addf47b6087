#include "rqbench/cli/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

#include <fmt/format.h>

#include "rqbench/codecs.hpp"
#include "rqbench/error.hpp"
#include "rqbench/metrics.hpp"
#include "rqbench/process.hpp"
#include "rqbench/resample.hpp"

namespace rqbench::cli {

namespace {

int effective_jobs(const PipelineOptions& o) { return o.timing ? 1 : std::max(1, o.jobs); }

std::string task_dir_name(const std::string& seq, const std::string& codec, Dimensions d,
                          const std::string& tag) {
  return fmt::format("{}_{}_{}_{}", seq, codec, to_string(d), tag);
}

RatePoint make_point(const std::string& seq, const std::string& codec, const ResolutionGroup& g,
                     Dimensions enc, const EncodeResult& r, bool timing) {
  RatePoint p;
  p.sequence = seq;
  p.codec = codec;
  p.group = g.name;
  p.encode_resolution = enc;
  p.evaluation_resolution = g.reference;
  p.qp = r.qp.effective(r.recon.frame_count());
  p.bitrate_kbps = r.bitrate_kbps;
  if (timing) p.wall_seconds = r.wall_seconds;
  return p;
}

// Sources resized once per (sequence, resolution) and shared read-only by tasks.
struct Prepared {
  VideoSequence reference;
  std::vector<VideoSequence> ladder;
};

Prepared prepare(const RunManifest& m, const std::string& seq_name, const ResolutionGroup& g) {
  const VideoSequence source = load_sequence(m, m.sequence(seq_name));
  Prepared p{resize_sequence(source, g.reference), {}};
  for (const auto& d : g.ladder) p.ladder.push_back(resize_sequence(source, d));
  return p;
}

}  // namespace

std::map<std::string, double> score_metrics(const RunManifest& manifest, const VideoSequence& ref,
                                            const VideoSequence& dist,
                                            const std::filesystem::path& work_dir) {
  std::map<std::string, double> scores;
  bool files_written = false;
  for (const auto& id : manifest.metrics) {
    if (id == "psnr") {
      scores[id] = psnr(ref, dist).value;
    } else if (id == "psnr_yuv611") {
      scores[id] = psnr(ref, dist, PsnrMode::kYuv611).value;
    } else if (id == "ssim") {
      scores[id] = ssim(ref, dist).value;
    } else if (id == "msssim") {
      scores[id] = ms_ssim(ref, dist).value;
    } else if (const auto* tool = manifest.external_metric(id)) {
      const auto ref_path = work_dir / "ref.yuv";
      const auto dist_path = work_dir / "dist.yuv";
      if (!files_written) {
        std::filesystem::create_directories(work_dir);
        write_raw_video(ref, ref_path);
        write_raw_video(dist, dist_path);
        files_written = true;
      }
      scores[id] = external_metric(*tool, ref_path, dist_path,
                                   RawGeometry{ref.dims(), ref.bit_depth(), ref.fps()}).value;
    } else {
      throw ManifestError("metrics", fmt::format("unknown metric '{}'", id));
    }
  }
  if (files_written) {
    std::error_code ec;
    std::filesystem::remove(work_dir / "ref.yuv", ec);
    std::filesystem::remove(work_dir / "dist.yuv", ec);
  }
  return scores;
}

std::vector<RatePoint> encode_ladder(const RunManifest& m, const std::vector<std::string>& sequences,
                                     const std::vector<std::string>& codecs,
                                     const ResolutionGroup& group, const std::vector<int>& qps,
                                     const PipelineOptions& options) {
  if (qps.empty()) {
    throw ManifestError(fmt::format("group.{}.qps", group.name), "no QPs configured for fixed-QP encoding");
  }
  struct Task {
    std::size_t seq, codec, res;
    int qp;
  };
  std::vector<Prepared> prepared;
  for (const auto& s : sequences) prepared.push_back(prepare(m, s, group));
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (std::size_t c = 0; c < codecs.size(); ++c) {
      const auto& adapter = m.codec(codecs[c]);
      for (int qp : qps) {
        if (qp < adapter.qp_range.min || qp > adapter.qp_range.max) {
          throw ManifestError(fmt::format("group.{}.qps", group.name),
                              fmt::format("QP {} outside codec {} range [{}, {}]", qp, codecs[c],
                                          adapter.qp_range.min, adapter.qp_range.max));
        }
      }
      for (std::size_t r = 0; r < group.ladder.size(); ++r) {
        for (int qp : qps) tasks.push_back({s, c, r, qp});
      }
    }
  }
  std::vector<RatePoint> points(tasks.size());
  parallel_for(tasks.size(), effective_jobs(options), [&](std::size_t i) {
    const Task& t = tasks[i];
    const auto& adapter = m.codec(codecs[t.codec]);
    const Dimensions enc = group.ladder[t.res];
    EncodeOptions eo;
    eo.work_dir = options.work_dir /
                  task_dir_name(sequences[t.seq], codecs[t.codec], enc, fmt::format("qp{}", t.qp));
    const EncodeResult r = encode_with_qp(adapter, prepared[t.seq].ladder[t.res], t.qp, eo);
    RatePoint p = make_point(sequences[t.seq], codecs[t.codec], group, enc, r, options.timing);
    const VideoSequence up = resize_sequence(r.recon, group.reference);
    p.scores = score_metrics(m, prepared[t.seq].reference, up, eo.work_dir);
    points[i] = std::move(p);
  });
  if (options.warn) {
    for (const auto& v : rate_monotonicity_violations(points)) options.warn(v);
  }
  return points;
}

std::vector<std::string> rate_monotonicity_violations(const std::vector<RatePoint>& points) {
  std::map<std::tuple<std::string, std::string, Dimensions>, std::vector<const RatePoint*>> sweeps;
  for (const auto& p : points) sweeps[{p.sequence, p.codec, p.encode_resolution}].push_back(&p);
  std::vector<std::string> out;
  for (auto& [key, sweep] : sweeps) {
    std::sort(sweep.begin(), sweep.end(),
              [](const RatePoint* a, const RatePoint* b) { return a->qp < b->qp; });
    for (std::size_t i = 1; i < sweep.size(); ++i) {
      if (sweep[i]->qp > sweep[i - 1]->qp && sweep[i]->bitrate_kbps >= sweep[i - 1]->bitrate_kbps) {
        out.push_back(fmt::format("{} {} {}: rate does not fall from QP {} ({:.3f} kbps) to QP {} ({:.3f} kbps)",
                                  std::get<0>(key), std::get<1>(key), to_string(std::get<2>(key)),
                                  sweep[i - 1]->qp, sweep[i - 1]->bitrate_kbps, sweep[i]->qp,
                                  sweep[i]->bitrate_kbps));
      }
    }
  }
  return out;
}

TargetRun run_targets(const RunManifest& m, const std::vector<TargetEntry>& targets,
                      const std::vector<std::string>& codecs, double tolerance,
                      const PipelineOptions& options) {
  struct Task {
    std::size_t target, rate, codec, res;
  };
  struct Slot {
    std::optional<RatePoint> point;
    std::string failure;
  };
  std::map<std::pair<std::string, std::string>, Prepared> prepared;
  std::vector<Task> tasks;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto& g = m.group(targets[t].group);
    const auto key = std::make_pair(targets[t].sequence, g.name);
    if (!prepared.contains(key)) prepared.emplace(key, prepare(m, targets[t].sequence, g));
    for (std::size_t k = 0; k < targets[t].kbps.size(); ++k) {
      for (std::size_t c = 0; c < codecs.size(); ++c) {
        for (std::size_t r = 0; r < g.ladder.size(); ++r) tasks.push_back({t, k, c, r});
      }
    }
  }
  std::vector<Slot> slots(tasks.size());
  parallel_for(tasks.size(), effective_jobs(options), [&](std::size_t i) {
    const Task& t = tasks[i];
    const auto& entry = targets[t.target];
    const auto& g = m.group(entry.group);
    const Prepared& prep = prepared.at({entry.sequence, g.name});
    const Dimensions enc = g.ladder[t.res];
    const double target = entry.kbps[t.rate];
    EncodeOptions eo;
    eo.work_dir = options.work_dir / task_dir_name(entry.sequence, codecs[t.codec], enc,
                                                   fmt::format("{}_R{}", g.name, t.rate + 1));
    try {
      const RateTargetOutcome o =
          target_bitrate_search(m.codec(codecs[t.codec]), prep.ladder[t.res], target, tolerance, eo);
      RatePoint p = make_point(entry.sequence, codecs[t.codec], g, enc, o.achieved, options.timing);
      p.rate_index = fmt::format("R{}", t.rate + 1);
      p.target_kbps = target;
      p.scores = score_metrics(m, prep.reference, resize_sequence(o.achieved.recon, g.reference), eo.work_dir);
      slots[i].point = std::move(p);
    } catch (const TargetUnreachableError& e) {
      slots[i].failure = fmt::format("{}: {}", to_string(enc), e.what());
    }
  });

  TargetRun run;
  std::size_t i = 0;
  while (i < tasks.size()) {
    const Task& head = tasks[i];
    const auto& entry = targets[head.target];
    std::vector<RatePoint> candidates;
    std::vector<std::string> reasons;
    std::size_t j = i;
    for (; j < tasks.size() && tasks[j].target == head.target && tasks[j].rate == head.rate &&
           tasks[j].codec == head.codec;
         ++j) {
      if (slots[j].point) {
        candidates.push_back(*slots[j].point);
      } else {
        reasons.push_back(slots[j].failure);
      }
    }
    const std::string rate_index = fmt::format("R{}", head.rate + 1);
    if (candidates.empty()) {
      std::string why;
      for (const auto& r : reasons) why += (why.empty() ? "" : "; ") + r;
      run.failures.push_back({entry.sequence, codecs[head.codec], entry.group, rate_index,
                              entry.kbps[head.rate], why});
    } else {
      run.selected.push_back(
          select_per_target(candidates, m.selection_metric, entry.kbps[head.rate], tolerance));
    }
    i = j;
  }
  return run;
}

DoComparison compare_do_vs_fixed(const std::vector<RatePoint>& points, Dimensions fixed_resolution,
                                 const std::string& metric_id) {
  DoComparison cmp;
  cmp.hull = upper_convex_hull(points, metric_id);
  std::vector<RatePoint> fixed;
  for (const auto& p : points) {
    if (p.encode_resolution == fixed_resolution) fixed.push_back(p);
  }
  cmp.fixed = build_rq_curve(std::move(fixed), metric_id);
  cmp.dynamic = sample_envelope(cmp.hull, cmp.fixed);
  cmp.min_quality_delta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cmp.fixed.points.size(); ++i) {
    cmp.min_quality_delta = std::min(cmp.min_quality_delta, cmp.dynamic.points[i].score(metric_id) -
                                                                cmp.fixed.points[i].score(metric_id));
  }
  try {
    cmp.bd = bd_rate(cmp.fixed, cmp.dynamic);
  } catch (const DataError& e) {
    cmp.bd_error = e.what();
  }
  return cmp;
}

}  // namespace rqbench::cli
