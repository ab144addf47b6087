#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rqbench/correlation.hpp"
#include "rqbench/csv.hpp"
#include "rqbench/ratequality.hpp"
#include "rqbench/subjective.hpp"

namespace rqbench::cli {

// Column order is part of each file's contract.
inline const std::vector<std::string> kRqPointsHeader{
    "sequence", "codec", "group", "enc_w", "enc_h", "eval_w", "eval_h", "rate_index", "target_kbps",
    "actual_kbps", "qp", "psnr", "ssim", "msssim", "vmaf", "subj", "enc_seconds"};
inline const std::vector<std::string> kHullHeader{
    "sequence", "codec", "group", "metric", "vertex", "enc_w", "enc_h", "qp", "actual_kbps", "quality"};
inline const std::vector<std::string> kBdReportHeader{
    "group", "sequence", "metric", "anchor", "test", "bd_rate", "bd_quality", "overlap_lo", "overlap_hi"};
inline const std::vector<std::string> kDmosHeader{"sequence", "codec", "rate_index", "dmos", "stdev", "n"};
inline const std::vector<std::string> kScoresHeader{
    "session", "subject_id", "sequence", "codec", "rate_index", "score_reference", "score_distorted"};
inline const std::vector<std::string> kSignificanceHeader{
    "codec_a", "codec_b", "n_significant", "n_total", "wins", "losses", "cell"};
inline const std::vector<std::string> kCorrelationHeader{"group", "metric", "srocc", "lcc", "or", "rmse", "n"};
inline const std::vector<std::string> kScreeningHeader{"subject_id", "n_points", "above", "below", "rejected"};
inline const std::vector<std::string> kSitiHeader{"sequence", "si", "ti"};

/// Metric columns beyond the fixed set are appended after enc_seconds in
/// sorted order.
std::string format_rqpoints(std::span<const RatePoint> points);
/// Any column not in the fixed header is read as a metric score; empty
/// cells mean "not measured".
std::vector<RatePoint> parse_rqpoints(const CsvTable& table);
std::vector<RatePoint> read_rqpoints(const std::filesystem::path& path);

struct HullRow {
  std::string group;
  ConvexHull hull;
};
std::string format_hull(std::span<const HullRow> hulls);

struct BdRow {
  std::string group;
  std::string sequence;
  std::string metric;
  std::string anchor;
  std::string test;
  BDResult rate;     // bd_rate_percent and its quality overlap
  BDResult quality;  // bd_quality
};
std::string format_bdreport(std::span<const BdRow> rows);
std::vector<BdRow> read_bdreport(const std::filesystem::path& path);

std::string format_dmos(std::span<const DMOSRecord> records);
std::vector<DMOSRecord> read_dmos(const std::filesystem::path& path);

std::vector<TrialScore> parse_scores(const CsvTable& table);
std::vector<TrialScore> read_scores(const std::filesystem::path& path);

std::string format_significance(std::span<const SignificanceCell> cells);
std::string format_correlation(std::span<const MetricSuiteRow> rows);
std::string format_screening(const ScreeningResult& result);

/// Strict decimal parse; throws DataError naming the column.
double parse_number(const std::string& text, std::string_view column);

}  // namespace rqbench::cli
