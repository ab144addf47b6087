#include "rqbench/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "rqbench/cli/manifest.hpp"
#include "rqbench/cli/pipeline.hpp"
#include "rqbench/cli/svg.hpp"
#include "rqbench/cli/tables.hpp"
#include "rqbench/codecs.hpp"
#include "rqbench/correlation.hpp"
#include "rqbench/metrics.hpp"
#include "rqbench/resample.hpp"

namespace rqbench::cli {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kManifest: return kExitManifest;
    case ErrorKind::kProcess: return kExitProcess;
    case ErrorKind::kData:
    case ErrorKind::kIo: return kExitData;
  }
  return kExitData;
}

namespace {

const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kManifest: return "manifest";
    case ErrorKind::kProcess: return "process";
    case ErrorKind::kData: return "data";
    case ErrorKind::kIo: return "io";
  }
  return "data";
}

std::string json_line(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

struct Flags {
  std::string manifest;
  std::optional<int> jobs;
  std::uint64_t seed = 0;
  std::vector<std::string> groups;
  std::vector<std::string> metrics;
  std::optional<double> tolerance;
  bool no_timestamp = false;
  std::string output_dir;
  bool timing = false;
  bool keep_work = false;
  std::vector<std::string> sequences;
  std::vector<std::string> codecs;
  std::vector<int> qps;
  std::string input;
  std::vector<std::string> inputs;
  std::string anchor;
  std::string resolution;
  std::string scores;
  std::string dmos;
  std::string rqpoints;
  std::string targets;
  std::string bd;
  double alpha = 0.05;
  bool no_screen = false;
  int source_bit_depth = 10;
  int permutations = 2000;
};

class Context {
 public:
  Context(const Flags& flags, std::ostream& out, std::ostream& err)
      : flags_(flags), out_(out), err_(err) {}

  const Flags& flags() const { return flags_; }
  std::ostream& out() { return out_; }

  bool has_manifest() const { return !flags_.manifest.empty(); }
  const RunManifest& manifest() {
    if (!manifest_) {
      if (!has_manifest()) throw ManifestError("--manifest", "this command needs a run manifest");
      manifest_ = load_manifest(flags_.manifest);
    }
    return *manifest_;
  }

  std::filesystem::path output_dir() {
    if (!flags_.output_dir.empty()) return flags_.output_dir;
    if (has_manifest()) return manifest().resolved_output_dir();
    return ".";
  }

  void write(const std::string& name, const std::string& text) {
    const auto path = output_dir() / name;
    write_text_file(path, text);
    out_ << "wrote " << path.string() << '\n';
  }

  void warn(const std::string& code, const std::string& message) {
    err_ << json_line({{"warning", code}, {"message", message}}) << '\n';
  }

  std::string metric() {
    if (!flags_.metrics.empty()) return flags_.metrics.front();
    if (has_manifest()) return manifest().selection_metric;
    return "psnr";
  }

  std::optional<std::string> timestamp() const {
    if (flags_.no_timestamp) return std::nullopt;
    return utc_timestamp();
  }

  PipelineOptions pipeline() {
    PipelineOptions o;
    o.jobs = flags_.jobs.value_or(has_manifest() ? manifest().jobs : 1);
    o.timing = flags_.timing;
    o.work_dir = output_dir() / "work";
    o.warn = [this](const std::string& m) { warn("pipeline", m); };
    return o;
  }

  void cleanup_work() {
    if (flags_.keep_work) return;
    std::error_code ec;
    std::filesystem::remove_all(output_dir() / "work", ec);
  }

  std::vector<const ResolutionGroup*> selected_groups() {
    std::vector<const ResolutionGroup*> out;
    for (const auto& g : manifest().groups) {
      if (flags_.groups.empty() ||
          std::find(flags_.groups.begin(), flags_.groups.end(), g.name) != flags_.groups.end()) {
        out.push_back(&g);
      }
    }
    for (const auto& name : flags_.groups) manifest().group(name);
    if (out.empty()) throw ManifestError("group", "no [[group]] configured");
    return out;
  }

  std::vector<std::string> selected_sequences() {
    std::vector<std::string> out;
    if (!flags_.sequences.empty()) {
      for (const auto& s : flags_.sequences) out.push_back(manifest().sequence(s).name);
      return out;
    }
    for (const auto& s : manifest().sequences) out.push_back(s.name);
    if (out.empty()) throw ManifestError("sequence", "no [[sequence]] configured");
    return out;
  }

  std::vector<std::string> selected_codecs() {
    std::vector<std::string> out;
    if (!flags_.codecs.empty()) {
      for (const auto& c : flags_.codecs) out.push_back(manifest().codec(c).codec_id);
      return out;
    }
    for (const auto& c : manifest().codecs) out.push_back(c.codec_id);
    if (out.empty()) throw ManifestError("codec", "no [[codec]] configured");
    return out;
  }

 private:
  const Flags& flags_;
  std::ostream& out_;
  std::ostream& err_;
  std::optional<RunManifest> manifest_;
};

bool group_selected(const Flags& f, const std::string& g) {
  return f.groups.empty() || std::find(f.groups.begin(), f.groups.end(), g) != f.groups.end();
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return s;
}

// ---------------------------------------------------------------- encode

std::vector<RatePoint> encode_all(Context& ctx) {
  std::vector<RatePoint> points;
  const auto sequences = ctx.selected_sequences();
  const auto codecs = ctx.selected_codecs();
  for (const auto* g : ctx.selected_groups()) {
    const auto& qps = ctx.flags().qps.empty() ? g->qps : ctx.flags().qps;
    auto part = encode_ladder(ctx.manifest(), sequences, codecs, *g, qps, ctx.pipeline());
    points.insert(points.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  ctx.cleanup_work();
  return points;
}

int cmd_encode(Context& ctx) {
  const auto points = encode_all(ctx);
  ctx.write("rqpoints.csv", format_rqpoints(points));
  return kExitOk;
}

// ---------------------------------------------------------------- target

int cmd_target(Context& ctx) {
  const auto& m = ctx.manifest();
  std::vector<TargetEntry> targets;
  for (const auto& t : m.targets) {
    if (!group_selected(ctx.flags(), t.group)) continue;
    if (!ctx.flags().sequences.empty() &&
        std::find(ctx.flags().sequences.begin(), ctx.flags().sequences.end(), t.sequence) ==
            ctx.flags().sequences.end()) {
      continue;
    }
    targets.push_back(t);
  }
  if (targets.empty()) throw ManifestError("target", "no [[target]] entries selected");
  const double tolerance = ctx.flags().tolerance.value_or(m.tolerance);
  const TargetRun run = run_targets(m, targets, ctx.selected_codecs(), tolerance, ctx.pipeline());
  ctx.cleanup_work();
  ctx.write("rqpoints.csv", format_rqpoints(run.selected));
  for (const auto& f : run.failures) {
    ctx.warn("target_unreachable", fmt::format("{}/{}/{}/{} target {} kbps: {}", f.sequence, f.codec,
                                               f.group, f.rate_index, f.target_kbps, f.reason));
  }
  if (!run.failures.empty()) {
    throw DataError(fmt::format("{} of {} targets unreachable within ±{:.1f}%", run.failures.size(),
                                run.failures.size() + run.selected.size(), tolerance * 100.0));
  }
  return kExitOk;
}

// ---------------------------------------------------------------- ladder

int cmd_ladder(Context& ctx) {
  const auto& m = ctx.manifest();
  std::set<std::string> written;
  for (const auto& name : ctx.selected_sequences()) {
    const SequenceEntry& entry = m.sequence(name);
    const VideoSequence source = load_sequence(m, entry);
    for (const auto* g : ctx.selected_groups()) {
      for (const auto& d : g->ladder) {
        const std::string file = format_sequence_filename({name, d, source.fps(), source.bit_depth()});
        if (!written.insert(file).second) continue;
        const auto path = ctx.output_dir() / "ladder" / file;
        std::filesystem::create_directories(path.parent_path());
        write_raw_video(resize_sequence(source, d), path);
        ctx.out() << "wrote " << path.string() << '\n';
      }
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- hull

struct CurveKey {
  std::string group, sequence, codec;
  auto operator<=>(const CurveKey&) const = default;
};

std::map<CurveKey, std::vector<RatePoint>> by_curve(const std::vector<RatePoint>& points) {
  std::map<CurveKey, std::vector<RatePoint>> out;
  for (const auto& p : points) out[{p.group, p.sequence, p.codec}].push_back(p);
  return out;
}

PlotSeries series_of(const std::string& label, const std::vector<RatePoint>& pts,
                     const std::string& metric, bool dashed = false) {
  PlotSeries s{label, {}, dashed};
  for (const auto& p : pts) s.points.emplace_back(p.bitrate_kbps, p.score(metric));
  std::sort(s.points.begin(), s.points.end());
  return s;
}

int cmd_hull(Context& ctx) {
  std::vector<RatePoint> points;
  const bool from_file = !ctx.flags().input.empty();
  if (from_file) {
    for (auto& p : read_rqpoints(ctx.flags().input)) {
      if (group_selected(ctx.flags(), p.group)) points.push_back(std::move(p));
    }
  } else {
    points = encode_all(ctx);
    ctx.write("rqpoints.csv", format_rqpoints(points));
  }
  if (points.empty()) throw DataError("no rate points to build a hull from");
  const std::string metric = ctx.metric();

  std::vector<HullRow> hulls;
  std::vector<BdRow> bd_rows;
  // (group, codec) -> per-sequence comparisons, for the averaged overlay.
  std::map<std::pair<std::string, std::string>, std::vector<DoComparison>> overlays;
  for (const auto& [key, pts] : by_curve(points)) {
    Dimensions fixed_res{};
    if (!from_file && ctx.has_manifest()) {
      fixed_res = ctx.manifest().group(key.group).reference;
    } else {
      for (const auto& p : pts) {
        if (p.encode_resolution.pixel_count() > fixed_res.pixel_count()) fixed_res = p.encode_resolution;
      }
    }
    DoComparison cmp = compare_do_vs_fixed(pts, fixed_res, metric);
    hulls.push_back({key.group, cmp.hull});
    for (const auto& w : cmp.fixed.warnings) ctx.warn("non_monotone", w);
    if (!cmp.bd_error.empty()) ctx.warn("bd", fmt::format("{}/{}/{}: {}", key.group, key.sequence, key.codec, cmp.bd_error));
    bd_rows.push_back({key.group, key.sequence, metric, fmt::format("{}@{}", key.codec, to_string(fixed_res)),
                       key.codec + "@DO", cmp.bd, {}});
    bd_rows.back().quality.bd_quality = std::nan("");
    try {
      bd_rows.back().quality = bd_quality(cmp.fixed, cmp.dynamic);
    } catch (const DataError&) {
    }

    PlotSpec plot{fmt::format("{} / {} / group {}", key.sequence, key.codec, key.group),
                  "bitrate (kbps)", metric, {}, true, ctx.timestamp()};
    std::map<Dimensions, std::vector<RatePoint>> per_res;
    for (const auto& p : pts) per_res[p.encode_resolution].push_back(p);
    for (auto it = per_res.rbegin(); it != per_res.rend(); ++it) {
      plot.series.push_back(series_of(to_string(it->first), it->second, metric));
    }
    plot.series.push_back(series_of("hull", cmp.hull.vertices, metric, true));
    ctx.write(safe_name(fmt::format("rq_{}_{}_{}.svg", key.sequence, key.codec, key.group)), render_svg(plot));
    overlays[{key.group, key.codec}].push_back(std::move(cmp));
  }

  for (auto& [gc, cmps] : overlays) {
    const auto& [group, codec] = gc;
    std::vector<RQCurve> fixed, dynamic;
    bool aligned = true;
    for (const auto& c : cmps) {
      if (c.fixed.points.size() != cmps.front().fixed.points.size()) aligned = false;
      RQCurve f = c.fixed, d = c.dynamic;
      for (std::size_t i = 0; i < f.points.size(); ++i) {
        f.points[i].rate_index = d.points[i].rate_index = fmt::format("P{}", i + 1);
      }
      fixed.push_back(std::move(f));
      dynamic.push_back(std::move(d));
    }
    if (!aligned) {
      ctx.warn("overlay", fmt::format("group {} codec {}: curves differ in length, no average overlay", group, codec));
      continue;
    }
    const RQCurve avg_fixed = average_curves(fixed), avg_dynamic = average_curves(dynamic);
    BDResult bd;
    std::string bd_text = "n/a";
    try {
      bd = bd_rate(avg_fixed, avg_dynamic);
      bd_text = fmt::format("{:.1f}%", bd.bd_rate_percent);
    } catch (const DataError& e) {
      ctx.warn("bd", fmt::format("group {} codec {} average: {}", group, codec, e.what()));
    }
    BdRow row{group, "average", metric, fmt::format("{}@{}", codec, to_string(cmps.front().fixed.points.front().encode_resolution)),
              codec + "@DO", bd, {}};
    row.quality.bd_quality = std::nan("");
    try {
      row.quality = bd_quality(avg_fixed, avg_dynamic);
    } catch (const DataError&) {
    }
    bd_rows.push_back(row);
    PlotSpec plot{fmt::format("average over {} sequences, {} group {} (BD-rate {})", cmps.size(), codec, group, bd_text),
                  "bitrate (kbps)", metric,
                  {series_of("fixed", avg_fixed.points, metric), series_of("DO", avg_dynamic.points, metric, true)},
                  true, ctx.timestamp()};
    ctx.write(safe_name(fmt::format("do_vs_fixed_{}_{}.svg", codec, group)), render_svg(plot));
    ctx.out() << fmt::format("group {} codec {}: DO vs fixed BD-rate {}\n", group, codec, bd_text);
  }
  ctx.write("hull.csv", format_hull(hulls));
  ctx.write("hull_bd.csv", format_bdreport(bd_rows));
  return kExitOk;
}

// ---------------------------------------------------------------- bd

int cmd_bd(Context& ctx) {
  const auto& f = ctx.flags();
  if (f.input.empty()) throw ManifestError("--input", "rqpoints.csv path required");
  if (f.anchor.empty()) throw ManifestError("--anchor", "anchor codec required");
  const std::string metric = ctx.metric();
  std::optional<Dimensions> res;
  if (!f.resolution.empty()) res = parse_dimensions(f.resolution);

  std::map<CurveKey, std::vector<RatePoint>> curves;
  for (auto& p : read_rqpoints(f.input)) {
    if (!group_selected(f, p.group)) continue;
    if (res && p.encode_resolution != *res) continue;
    curves[{p.group, p.sequence, p.codec}].push_back(std::move(p));
  }
  // Several ladder rungs in one curve would interleave unrelated encodes;
  // without --resolution only native-resolution encodes are compared.
  for (auto& [key, pts] : curves) {
    std::set<Dimensions> seen;
    for (const auto& p : pts) seen.insert(p.encode_resolution);
    if (seen.size() > 1) {
      std::erase_if(pts, [](const RatePoint& p) { return p.encode_resolution != p.evaluation_resolution; });
    }
  }
  std::vector<BdRow> rows;
  for (const auto& [key, pts] : curves) {
    if (key.codec != f.anchor) continue;
    const RQCurve anchor = build_rq_curve(pts, metric);
    for (const auto& [other, test_pts] : curves) {
      if (other.group != key.group || other.sequence != key.sequence || other.codec == f.anchor) continue;
      const RQCurve test = build_rq_curve(test_pts, metric);
      for (const auto& w : test.warnings) ctx.warn("non_monotone", w);
      try {
        rows.push_back({key.group, key.sequence, metric, f.anchor, other.codec, bd_rate(anchor, test),
                        bd_quality(anchor, test)});
      } catch (const DataError& e) {
        throw DataError(fmt::format("group {} sequence {} {} vs {}: {}", key.group, key.sequence,
                                    other.codec, f.anchor, e.what()));
      }
    }
  }
  if (rows.empty()) {
    throw DataError(fmt::format("no (sequence, group) has both anchor '{}' and a test codec", f.anchor));
  }
  ctx.write("bdreport.csv", format_bdreport(rows));
  for (const auto& r : rows) {
    ctx.out() << fmt::format("{} {} {} vs {}: BD-rate {:.2f}%, BD-{} {:.4f}\n", r.group, r.sequence,
                             r.test, r.anchor, r.rate.bd_rate_percent, metric, r.quality.bd_quality);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- dmos / anova

DifferenceTable screened_differences(Context& ctx, std::vector<std::string>* rejected = nullptr) {
  const auto& f = ctx.flags();
  if (f.scores.empty()) throw ManifestError("--scores", "scores.csv path required");
  const auto trials = read_scores(f.scores);
  DifferenceTable diffs = difference_scores(trials);
  if (f.no_screen) return diffs;
  const ScreeningResult screening = screen_subjects(diffs);
  ctx.write("screening.csv", format_screening(screening));
  ctx.out() << fmt::format("screening: {} retained, {} rejected\n", screening.retained.size(),
                           screening.rejected.size());
  if (rejected) *rejected = screening.rejected;
  for (auto& [key, per_subject] : diffs) {
    for (const auto& s : screening.rejected) per_subject.erase(s);
  }
  return diffs;
}

int cmd_dmos(Context& ctx) {
  const DifferenceTable diffs = screened_differences(ctx);
  const auto records = compute_dmos(diffs);
  for (const auto& r : records) {
    if (quality_from_dmos(r).flagged) {
      ctx.warn("negative_dmos", fmt::format("{}/{}/{}: DMOS {:.4f}, distorted rated above reference",
                                            r.sequence, r.codec, r.rate_index, r.dmos));
    }
  }
  ctx.write("dmos.csv", format_dmos(records));
  return kExitOk;
}

int cmd_anova(Context& ctx) {
  const DifferenceTable diffs = screened_differences(ctx);
  const auto cells = significance_matrix(panels_from_differences(diffs), ctx.flags().alpha);
  ctx.write("significance.csv", format_significance(cells));
  std::vector<std::string> codecs;
  for (const auto& c : cells) {
    if (std::find(codecs.begin(), codecs.end(), c.codec_a) == codecs.end()) codecs.push_back(c.codec_a);
  }
  std::size_t width = 8;
  for (const auto& c : cells) width = std::max(width, c.render().size() + 2);
  ctx.out() << fmt::format("{:<10}", "");
  for (const auto& c : codecs) ctx.out() << fmt::format("{:>{}}", c, width);
  ctx.out() << '\n';
  for (const auto& a : codecs) {
    ctx.out() << fmt::format("{:<10}", a);
    for (const auto& b : codecs) {
      std::string text = "-";
      for (const auto& c : cells) {
        if (c.codec_a == a && c.codec_b == b) text = c.render();
      }
      ctx.out() << fmt::format("{:>{}}", text, width);
    }
    ctx.out() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- correlate

int cmd_correlate(Context& ctx) {
  const auto& f = ctx.flags();
  const std::string rq_path = !f.rqpoints.empty() ? f.rqpoints : f.input;
  if (rq_path.empty()) throw ManifestError("--rqpoints", "rqpoints.csv path required");
  if (f.dmos.empty()) throw ManifestError("--dmos", "dmos.csv path required");
  const auto points = read_rqpoints(rq_path);
  const auto dmos = read_dmos(f.dmos);
  std::vector<std::string> groups;
  for (const auto& p : points) {
    if (p.rate_index && group_selected(f, p.group) &&
        std::find(groups.begin(), groups.end(), p.group) == groups.end()) {
      groups.push_back(p.group);
    }
  }
  if (groups.empty()) throw DataError("no rate points with a rate_index in the selected groups");
  MetricSuiteOptions options;
  options.metrics = f.metrics;
  options.seed = f.seed;
  options.floor_permutations = f.permutations;
  std::vector<MetricSuiteRow> rows;
  for (const auto& g : groups) {
    std::set<PointKey> keys;
    for (const auto& p : points) {
      if (p.group == g && p.rate_index) keys.insert({p.sequence, p.codec, *p.rate_index});
    }
    std::vector<DMOSRecord> group_dmos;
    for (const auto& d : dmos) {
      if (keys.contains(d.key())) group_dmos.push_back(d);
    }
    if (group_dmos.empty()) {
      throw DataError(fmt::format("group {}: no DMOS records match its rate points", g));
    }
    auto part = evaluate_metric_suite(points, group_dmos, g, options);
    for (const auto& r : part) {
      if (!r.model.converged) ctx.warn("fit", fmt::format("group {} metric {}: logistic fit did not converge", g, r.metric));
      if (r.below_noise_floor) {
        ctx.warn("noise_floor", fmt::format("group {} metric {}: |SROCC| {:.4f} below the permutation floor",
                                            g, r.metric, std::abs(r.stats.srocc)));
      }
    }
    rows.insert(rows.end(), part.begin(), part.end());
  }
  ctx.write("correlation.csv", format_correlation(rows));
  ctx.out() << render_metric_table(rows);
  return kExitOk;
}

// ---------------------------------------------------------------- siti

int cmd_siti(Context& ctx) {
  std::vector<std::pair<std::string, VideoSequence>> seqs;
  if (!ctx.flags().inputs.empty()) {
    for (const auto& path : ctx.flags().inputs) {
      const auto g = parse_sequence_filename(std::filesystem::path(path).filename().string());
      seqs.emplace_back(g.base, read_raw_video(path, g.dims, g.bit_depth, g.fps));
    }
  } else {
    for (const auto& name : ctx.selected_sequences()) {
      seqs.emplace_back(name, load_sequence(ctx.manifest(), ctx.manifest().sequence(name)));
    }
  }
  std::string csv = csv_row(kSitiHeader);
  for (const auto& [name, seq] : seqs) {
    const SITI v = si_ti(seq);
    csv += csv_row({name, fmt::format("{:.4f}", v.si), fmt::format("{:.4f}", v.ti)});
    ctx.out() << fmt::format("{}: SI {:.2f}, TI {:.2f}\n", name, v.si, v.ti);
  }
  ctx.write("siti.csv", csv);
  return kExitOk;
}

// ---------------------------------------------------------------- report

RunManifest manifest_from_targets(const CsvTable& t, const std::string& source_name, int bit_depth) {
  const std::size_t c_seq = t.require_column("sequence"), c_group = t.require_column("group");
  std::vector<std::size_t> rate_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (std::regex_match(t.header[i], std::regex("R[0-9]+"))) rate_cols.push_back(i);
  }
  if (rate_cols.empty()) throw DataError("targets table has no R1..Rn columns");
  const std::map<std::string, std::pair<Dimensions, std::vector<Dimensions>>> known{
      {"A", {{3840, 2160}, {{3840, 2160}}}},
      {"B", {{1920, 1080}, {{1920, 1080}}}},
      {"C", {{1920, 1080}, {{1920, 1080}, {1280, 720}, {960, 544}}}}};

  RunManifest m;
  m.output_dir = "out";
  m.metrics = {"psnr", "ssim", "msssim", "vmaf"};
  m.selection_metric = "vmaf";
  std::set<std::string> groups_used;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    TargetEntry e{row[c_seq], row[c_group], {}};
    if (!known.contains(e.group)) {
      throw DataError(fmt::format("{} row {}: unknown resolution group '{}'", source_name, r + 2, e.group));
    }
    for (std::size_t c : rate_cols) {
      if (row[c].empty()) continue;
      const double v = parse_number(row[c], t.header[c]);
      if (fmt::format("{}", v) != row[c]) {
        throw DataError(fmt::format("{} row {}: '{}' is not in canonical decimal form", source_name, r + 2, row[c]));
      }
      e.kbps.push_back(v);
    }
    groups_used.insert(e.group);
    if (std::none_of(m.sequences.begin(), m.sequences.end(),
                     [&](const SequenceEntry& s) { return s.name == e.sequence; })) {
      SequenceEntry s;
      s.name = e.sequence;
      s.dims = {3840, 2160};
      s.fps = {60, 1};
      s.bit_depth = bit_depth;
      s.path = format_sequence_filename({e.sequence, s.dims, s.fps, bit_depth});
      m.sequences.push_back(std::move(s));
    }
    m.targets.push_back(std::move(e));
  }
  for (const auto& name : groups_used) {
    const auto& [ref, ladder] = known.at(name);
    m.groups.push_back({name, ref, ladder, {}});
  }
  const std::string hm_like =
      "-i {input} -o {recon} -b {bitstream} -wdt {width} -hgt {height} -fr {fps} "
      "--InputBitDepth={bitdepth} --InternalBitDepth={bitdepth} -q {qp} {extra}";
  EncoderAdapter hm;
  hm.codec_id = "hm";
  hm.encode_template = "TAppEncoder -c encoder_randomaccess_main10.cfg " + hm_like;
  hm.fixed_args = "--IntraPeriod=64 --GOPSize=16";
  hm.fractional_template = "--QPIncrementFrame={frame}";
  EncoderAdapter vtm = hm;
  vtm.codec_id = "vtm";
  vtm.qp_range = {0, 63};
  vtm.encode_template = "EncoderApp -c encoder_randomaccess_vtm.cfg " + hm_like;
  EncoderAdapter av1;
  av1.codec_id = "av1";
  av1.qp_range = {0, 255};
  av1.encode_template =
      "aomenc --ivf --end-usage=q --cq-level={qp} --bit-depth={bitdepth} --input-bit-depth={bitdepth} "
      "--width={width} --height={height} --fps={fps} {extra} -o {bitstream} {input} && "
      "aomdec --rawvideo -o {recon} {bitstream}";
  av1.fixed_args = "--kf-max-dist=64 --lag-in-frames=16";
  m.codecs = {hm, av1, vtm};
  m.external_metrics.push_back(
      {"vmaf",
       "vmaf --reference {ref} --distorted {dist} --width {width} --height {height} "
       "--pixel_format 420 --bitdepth {bitdepth} --output /dev/stdout --json",
       "\"mean\":\\s*([0-9.]+)", "VMAF version ([0-9.]+)"});
  validate_manifest(m);
  return m;
}

std::string bd_matrix_text(const std::vector<BdRow>& rows, std::string* csv_out) {
  std::vector<std::string> columns, sequences;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const auto& r : rows) {
    const std::string col = fmt::format("{}:{}:{}", r.group, r.metric, r.test);
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (r.sequence != "average" &&
        std::find(sequences.begin(), sequences.end(), r.sequence) == sequences.end()) {
      sequences.push_back(r.sequence);
    }
    if (r.sequence != "average") cell[{r.sequence, col}] = r.rate.bd_rate_percent;
  }
  std::vector<std::string> csv_header{"sequence"};
  csv_header.insert(csv_header.end(), columns.begin(), columns.end());
  std::string csv = csv_row(csv_header);
  std::size_t width = 10;
  for (const auto& c : columns) width = std::max(width, c.size() + 2);
  std::string text = fmt::format("{:<16}", "Sequence");
  for (const auto& c : columns) text += fmt::format("{:>{}}", c, width);
  text += '\n';
  auto emit = [&](const std::string& label, const std::vector<std::optional<double>>& values) {
    text += fmt::format("{:<16}", label);
    std::vector<std::string> fields{label};
    for (const auto& v : values) {
      const std::string s = v && std::isfinite(*v) ? fmt::format("{:.1f}%", *v) : "-";
      text += fmt::format("{:>{}}", s, width);
      fields.push_back(v && std::isfinite(*v) ? fmt::format("{:.4f}", *v) : "");
    }
    text += '\n';
    csv += csv_row(fields);
  };
  std::vector<double> sums(columns.size(), 0.0);
  std::vector<int> counts(columns.size(), 0);
  for (const auto& s : sequences) {
    std::vector<std::optional<double>> values;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      auto it = cell.find({s, columns[i]});
      if (it == cell.end() || !std::isfinite(it->second)) {
        values.emplace_back();
        continue;
      }
      values.emplace_back(it->second);
      sums[i] += it->second;
      ++counts[i];
    }
    emit(s, values);
  }
  std::vector<std::optional<double>> avg;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    avg.push_back(counts[i] ? std::optional<double>(sums[i] / counts[i]) : std::nullopt);
  }
  emit("Average", avg);
  if (csv_out) *csv_out = csv;
  return text;
}

int cmd_report(Context& ctx) {
  const auto& f = ctx.flags();
  bool did = false;
  if (!f.targets.empty()) {
    const CsvTable t = read_csv_file(f.targets);
    const RunManifest m = manifest_from_targets(t, std::filesystem::path(f.targets).filename().string(),
                                                f.source_bit_depth);
    ctx.write("manifest.toml", fmt::format("# targets transcribed from {}\n", std::filesystem::path(f.targets).filename().string()) +
                                   format_manifest(m));
    for (const auto& e : m.targets) {
      ctx.out() << fmt::format("{} {}: {}\n", e.sequence, e.group, format_kbps_list(e.kbps));
    }
    did = true;
  }
  if (!f.bd.empty()) {
    std::string csv;
    const std::string text = bd_matrix_text(read_bdreport(f.bd), &csv);
    ctx.write("bd_table.txt", text);
    ctx.write("bd_table.csv", csv);
    ctx.out() << text;
    did = true;
  }
  if (!f.rqpoints.empty()) {
    if (f.anchor.empty()) throw ManifestError("--anchor", "complexity report needs the benchmark codec");
    const auto points = read_rqpoints(f.rqpoints);
    std::map<std::tuple<std::string, std::string, std::string>, double> anchor_time;
    for (const auto& p : points) {
      if (p.codec == f.anchor && p.wall_seconds && p.rate_index) {
        anchor_time[{p.group, p.sequence, *p.rate_index}] = *p.wall_seconds;
      }
    }
    std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>> pairs;
    for (const auto& p : points) {
      if (p.codec == f.anchor || !p.wall_seconds || !p.rate_index || !group_selected(f, p.group)) continue;
      auto it = anchor_time.find({p.group, p.sequence, *p.rate_index});
      if (it == anchor_time.end()) continue;
      auto& [codec_times, bench_times] = pairs[{p.group, p.codec}];
      codec_times.push_back(*p.wall_seconds);
      bench_times.push_back(it->second);
    }
    if (pairs.empty()) throw DataError("no timed rate points pair with the anchor codec (run with --timing)");
    std::string csv = csv_row({"group", "codec", "anchor", "ratio", "display", "n"});
    for (const auto& [key, times] : pairs) {
      const double ratio = complexity_ratio(times.first, times.second);
      csv += csv_row({key.first, key.second, f.anchor, fmt::format("{:.4f}", ratio),
                      format_complexity_ratio(ratio), std::to_string(times.first.size())});
      ctx.out() << fmt::format("group {} {} vs {}: {}\n", key.first, key.second, f.anchor,
                               format_complexity_ratio(ratio));
    }
    ctx.write("complexity.csv", csv);
    did = true;
  }
  if (!did) throw ManifestError("report", "give at least one of --targets, --bd, --rqpoints");
  return kExitOk;
}

}  // namespace

std::string error_line(const Error& e) {
  nlohmann::json j{{"error", kind_name(e.kind())}, {"message", e.what()}};
  if (const auto* m = dynamic_cast<const ManifestError*>(&e)) j["field"] = m->field();
  if (const auto* p = dynamic_cast<const ProcessError*>(&e)) {
    const std::string& o = p->captured_output();
    j["output"] = o.size() > 4000 ? o.substr(o.size() - 4000) : o;
  }
  return json_line(j);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Codec comparison and rate-quality analysis harness", "rqbench"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--manifest", f.manifest, "Run manifest (TOML)");
  app.add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", f.seed, "Seed for randomized procedures");
  app.add_option("--group", f.groups, "Restrict to resolution group(s)");
  app.add_option("--metric", f.metrics, "Quality metric id(s)");
  app.add_option("--tolerance", f.tolerance, "Rate tolerance as a fraction")->check(CLI::Range(1e-6, 0.999));
  app.add_flag("--no-timestamp", f.no_timestamp, "Omit the timestamp from SVG output");
  app.add_option("-o,--output-dir", f.output_dir, "Artifact directory (default: manifest output_dir)");

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(Context&);
  };
  const Sub subs[] = {
      {"encode", "Fixed-QP encodes over every ladder resolution; writes rqpoints.csv", cmd_encode},
      {"target", "Target-bitrate search and per-target resolution selection", cmd_target},
      {"ladder", "Write Lanczos-3 resampled ladder sources", cmd_ladder},
      {"hull", "Convex hull (dynamic optimizer) versus fixed-resolution curves", cmd_hull},
      {"bd", "Bjontegaard delta rate and quality against an anchor codec", cmd_bd},
      {"dmos", "Screen subjects and compute DMOS from DSCQS scores", cmd_dmos},
      {"anova", "Pairwise one-way ANOVA significance matrix", cmd_anova},
      {"correlate", "Logistic fit and correlation of metrics against DMOS", cmd_correlate},
      {"siti", "Spatial and temporal information", cmd_siti},
      {"report", "Manifest from a targets table, BD matrix, complexity ratios", cmd_report},
  };
  std::map<CLI::App*, int (*)(Context&)> handlers;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    handlers[sub] = s.fn;
    const std::string name = s.name;
    if (name == "encode" || name == "hull" || name == "target" || name == "ladder" || name == "siti") {
      sub->add_option("--sequence", f.sequences, "Restrict to sequence(s)");
    }
    if (name == "encode" || name == "hull" || name == "target") {
      sub->add_option("--codec", f.codecs, "Restrict to codec(s)");
      sub->add_flag("--timing", f.timing, "Record encode wall time (forces --jobs 1)");
      sub->add_flag("--keep-work", f.keep_work, "Keep intermediate files under output_dir/work");
    }
    if (name == "encode" || name == "hull") sub->add_option("--qp", f.qps, "Override the group's QP list");
    if (name == "hull" || name == "bd") sub->add_option("--input", f.input, "Existing rqpoints.csv");
    if (name == "siti") sub->add_option("--input", f.inputs, "Raw .yuv file(s) named <base>_<W>x<H>_<fps>fps_<depth>bit.yuv");
    if (name == "bd") {
      sub->add_option("--anchor", f.anchor, "Anchor codec id")->required();
      sub->add_option("--resolution", f.resolution, "Only points encoded at WxH");
    }
    if (name == "dmos" || name == "anova") {
      sub->add_option("--scores", f.scores, "scores.csv")->required();
      sub->add_flag("--no-screen", f.no_screen, "Skip subject screening");
    }
    if (name == "anova") sub->add_option("--alpha", f.alpha, "Significance level")->check(CLI::Range(1e-9, 0.5));
    if (name == "correlate") {
      sub->add_option("--rqpoints", f.rqpoints, "rqpoints.csv with metric columns");
      sub->add_option("--dmos", f.dmos, "dmos.csv")->required();
      sub->add_option("--permutations", f.permutations, "Draws for the SROCC noise floor")->check(CLI::PositiveNumber);
    }
    if (name == "report") {
      sub->add_option("--targets", f.targets, "Target bitrate table (id,sequence,group,R1..Rn)");
      sub->add_option("--bd", f.bd, "bdreport.csv to render as a sequence x codec matrix");
      sub->add_option("--rqpoints", f.rqpoints, "Timed rqpoints.csv for complexity ratios");
      sub->add_option("--anchor", f.anchor, "Benchmark codec for complexity ratios");
      sub->add_option("--source-bit-depth", f.source_bit_depth, "Bit depth declared for sources")
          ->check(CLI::IsMember({8, 10}));
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << json_line({{"error", "usage"}, {"message", e.what()}}) << '\n';
    return kExitManifest;
  }

  Context ctx(f, out, err);
  try {
    for (auto& [sub, fn] : handlers) {
      if (sub->parsed()) return fn(ctx);
    }
    return kExitManifest;
  } catch (const Error& e) {
    err << error_line(e) << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << error_line(IoError(e.what())) << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << json_line({{"error", "internal"}, {"message", e.what()}}) << '\n';
    return 1;
  }
}

}  // namespace rqbench::cli
