#include "rqbench/cli/tables.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "rqbench/error.hpp"

namespace rqbench::cli {

namespace {

const std::vector<std::string> kFixedMetrics{"psnr", "ssim", "msssim", "vmaf", "subj"};

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.{}f}", v, digits);
}
std::string shortest(double v) { return fmt::format("{}", v); }

std::string optional_cell(const std::optional<double>& v, int digits) {
  return v ? fixed(*v, digits) : std::string();
}

int parse_int(const std::string& text, std::string_view column) {
  int v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw DataError(fmt::format("column {}: '{}' is not an integer", column, text));
  }
  return v;
}

std::string table_error_context(const std::filesystem::path& path, const std::exception& e) {
  return fmt::format("{}: {}", path.string(), e.what());
}

template <typename Parse>
auto with_path(const std::filesystem::path& path, Parse parse) {
  const CsvTable table = read_csv_file(path);
  try {
    return parse(table);
  } catch (const DataError& e) {
    throw DataError(table_error_context(path, e));
  }
}

}  // namespace

double parse_number(const std::string& text, std::string_view column) {
  double v = 0.0;
  const char* begin = text.data();
  if (!text.empty() && text.front() == '+') ++begin;
  auto [p, ec] = std::from_chars(begin, text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v)) {
    throw DataError(fmt::format("column {}: '{}' is not a number", column, text));
  }
  return v;
}

std::string format_rqpoints(std::span<const RatePoint> points) {
  std::set<std::string> extra;
  for (const auto& p : points) {
    for (const auto& [id, v] : p.scores) {
      if (std::find(kFixedMetrics.begin(), kFixedMetrics.end(), id) == kFixedMetrics.end()) extra.insert(id);
    }
  }
  std::vector<std::string> header = kRqPointsHeader;
  header.insert(header.end(), extra.begin(), extra.end());
  std::string out = csv_row(header);
  for (const auto& p : points) {
    std::vector<std::string> row{p.sequence,
                                 p.codec,
                                 p.group,
                                 std::to_string(p.encode_resolution.width),
                                 std::to_string(p.encode_resolution.height),
                                 std::to_string(p.evaluation_resolution.width),
                                 std::to_string(p.evaluation_resolution.height),
                                 p.rate_index.value_or(""),
                                 p.target_kbps ? shortest(*p.target_kbps) : "",
                                 fixed(p.bitrate_kbps, 3),
                                 shortest(p.qp)};
    auto score_cell = [&](const std::string& id) {
      auto it = p.scores.find(id);
      return it == p.scores.end() ? std::string() : fixed(it->second, 6);
    };
    for (const auto& id : kFixedMetrics) row.push_back(score_cell(id));
    row.push_back(optional_cell(p.wall_seconds, 6));
    for (const auto& id : extra) row.push_back(score_cell(id));
    out += csv_row(row);
  }
  return out;
}

std::vector<RatePoint> parse_rqpoints(const CsvTable& t) {
  auto col = [&](const char* name) { return t.require_column(name); };
  const std::size_t c_seq = col("sequence"), c_codec = col("codec"), c_group = col("group"),
                    c_ew = col("enc_w"), c_eh = col("enc_h"), c_vw = col("eval_w"),
                    c_vh = col("eval_h"), c_ri = col("rate_index"), c_tk = col("target_kbps"),
                    c_ak = col("actual_kbps"), c_qp = col("qp"), c_es = col("enc_seconds");
  std::vector<std::pair<std::size_t, std::string>> metric_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (std::find(kRqPointsHeader.begin(), kRqPointsHeader.end(), t.header[i]) == kRqPointsHeader.end() ||
        std::find(kFixedMetrics.begin(), kFixedMetrics.end(), t.header[i]) != kFixedMetrics.end()) {
      metric_cols.emplace_back(i, t.header[i]);
    }
  }
  std::vector<RatePoint> points;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    try {
      RatePoint p;
      p.sequence = row[c_seq];
      p.codec = row[c_codec];
      p.group = row[c_group];
      if (p.sequence.empty() || p.codec.empty()) throw DataError("sequence and codec are required");
      p.encode_resolution = {parse_int(row[c_ew], "enc_w"), parse_int(row[c_eh], "enc_h")};
      p.evaluation_resolution = {parse_int(row[c_vw], "eval_w"), parse_int(row[c_vh], "eval_h")};
      if (!row[c_ri].empty()) p.rate_index = row[c_ri];
      if (!row[c_tk].empty()) p.target_kbps = parse_number(row[c_tk], "target_kbps");
      p.bitrate_kbps = parse_number(row[c_ak], "actual_kbps");
      if (!(p.bitrate_kbps > 0.0)) throw DataError("actual_kbps must be positive");
      p.qp = row[c_qp].empty() ? std::nan("") : parse_number(row[c_qp], "qp");
      if (!row[c_es].empty()) p.wall_seconds = parse_number(row[c_es], "enc_seconds");
      for (const auto& [i, id] : metric_cols) {
        if (!row[i].empty()) p.scores[id] = parse_number(row[i], id);
      }
      points.push_back(std::move(p));
    } catch (const DataError& e) {
      throw DataError(fmt::format("row {}: {}", r + 2, e.what()));
    }
  }
  return points;
}

std::vector<RatePoint> read_rqpoints(const std::filesystem::path& path) {
  return with_path(path, parse_rqpoints);
}

std::string format_hull(std::span<const HullRow> hulls) {
  std::string out = csv_row(kHullHeader);
  for (const auto& h : hulls) {
    for (std::size_t i = 0; i < h.hull.vertices.size(); ++i) {
      const auto& v = h.hull.vertices[i];
      out += csv_row({v.sequence, v.codec, h.group, h.hull.metric_id, std::to_string(i),
                      std::to_string(v.encode_resolution.width),
                      std::to_string(v.encode_resolution.height), shortest(v.qp),
                      fixed(v.bitrate_kbps, 3), fixed(v.score(h.hull.metric_id), 6)});
    }
  }
  return out;
}

std::string format_bdreport(std::span<const BdRow> rows) {
  std::string out = csv_row(kBdReportHeader);
  for (const auto& r : rows) {
    out += csv_row({r.group, r.sequence, r.metric, r.anchor, r.test, fixed(r.rate.bd_rate_percent, 4),
                    fixed(r.quality.bd_quality, 4), fixed(r.rate.overlap_interval.lo, 6),
                    fixed(r.rate.overlap_interval.hi, 6)});
  }
  return out;
}

std::vector<BdRow> read_bdreport(const std::filesystem::path& path) {
  return with_path(path, [](const CsvTable& t) {
    std::vector<std::size_t> c;
    for (const auto& h : kBdReportHeader) c.push_back(t.require_column(h));
    std::vector<BdRow> rows;
    for (const auto& row : t.rows) {
      BdRow r{row[c[0]], row[c[1]], row[c[2]], row[c[3]], row[c[4]], {}, {}};
      auto num = [&](std::size_t k) {
        return row[c[k]].empty() || row[c[k]] == "nan" ? std::nan("")
                                                       : parse_number(row[c[k]], kBdReportHeader[k]);
      };
      r.rate.bd_rate_percent = num(5);
      r.quality.bd_quality = num(6);
      r.rate.overlap_interval = {num(7), num(8)};
      rows.push_back(std::move(r));
    }
    return rows;
  });
}

std::string format_dmos(std::span<const DMOSRecord> records) {
  std::string out = csv_row(kDmosHeader);
  for (const auto& r : records) {
    out += csv_row({r.sequence, r.codec, r.rate_index, fixed(r.dmos, 6), fixed(r.stdev, 6),
                    std::to_string(r.n_subjects)});
  }
  return out;
}

std::vector<DMOSRecord> read_dmos(const std::filesystem::path& path) {
  return with_path(path, [](const CsvTable& t) {
    std::vector<std::size_t> c;
    for (const auto& h : kDmosHeader) c.push_back(t.require_column(h));
    std::vector<DMOSRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      try {
        DMOSRecord rec;
        rec.sequence = row[c[0]];
        rec.codec = row[c[1]];
        rec.rate_index = row[c[2]];
        rec.dmos = parse_number(row[c[3]], "dmos");
        rec.stdev = parse_number(row[c[4]], "stdev");
        rec.n_subjects = parse_int(row[c[5]], "n");
        if (rec.stdev < 0.0) throw DataError("stdev must be non-negative");
        out.push_back(std::move(rec));
      } catch (const DataError& e) {
        throw DataError(fmt::format("row {}: {}", r + 2, e.what()));
      }
    }
    return out;
  });
}

std::vector<TrialScore> parse_scores(const CsvTable& t) {
  std::vector<std::size_t> c;
  for (const auto& h : kScoresHeader) c.push_back(t.require_column(h));
  std::vector<TrialScore> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    try {
      TrialScore s;
      s.session = row[c[0]];
      s.subject_id = row[c[1]];
      s.sequence = row[c[2]];
      s.codec = row[c[3]];
      s.rate_index = row[c[4]];
      if (row[c[5]].empty() || row[c[6]].empty()) throw DataError("missing score field");
      s.score_reference = parse_number(row[c[5]], "score_reference");
      s.score_distorted = parse_number(row[c[6]], "score_distorted");
      out.push_back(std::move(s));
    } catch (const DataError& e) {
      throw DataError(fmt::format("row {}: {}", r + 2, e.what()));
    }
  }
  return out;
}

std::vector<TrialScore> read_scores(const std::filesystem::path& path) {
  return with_path(path, parse_scores);
}

std::string format_significance(std::span<const SignificanceCell> cells) {
  std::string out = csv_row(kSignificanceHeader);
  for (const auto& c : cells) {
    out += csv_row({c.codec_a, c.codec_b, std::to_string(c.n_significant), std::to_string(c.n_total),
                    std::to_string(c.wins), std::to_string(c.losses), c.render()});
  }
  return out;
}

std::string format_correlation(std::span<const MetricSuiteRow> rows) {
  std::string out = csv_row(kCorrelationHeader);
  for (const auto& r : rows) {
    out += csv_row({r.group, r.metric, fixed(r.stats.srocc, 4), fixed(r.stats.lcc, 4),
                    fixed(r.stats.outlier_ratio, 4), fixed(r.stats.rmse, 4),
                    std::to_string(r.stats.n_points)});
  }
  return out;
}

std::string format_screening(const ScreeningResult& result) {
  std::string out = csv_row(kScreeningHeader);
  for (const auto& d : result.diagnostics) {
    out += csv_row({d.subject_id, std::to_string(d.n_points), std::to_string(d.above),
                    std::to_string(d.below), d.rejected ? "1" : "0"});
  }
  return out;
}

}  // namespace rqbench::cli
