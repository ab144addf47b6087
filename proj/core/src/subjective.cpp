#include "rqbench/subjective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "rqbench/error.hpp"
#include "rqbench/special_functions.hpp"

namespace rqbench {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stdev(std::span<const double> v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

DifferenceTable difference_scores(std::span<const TrialScore> trials) {
  DifferenceTable table;
  for (const auto& t : trials) {
    if (t.subject_id.empty() || t.sequence.empty() || t.codec.empty() || t.rate_index.empty()) {
      throw DataError("trial score with a missing subject, sequence, codec or rate index");
    }
    for (double s : {t.score_reference, t.score_distorted}) {
      if (!(s >= 0.0 && s <= 100.0)) {
        throw DataError(fmt::format("score {} of subject {} outside [0, 100]", s, t.subject_id));
      }
    }
    auto& row = table[PointKey{t.sequence, t.codec, t.rate_index}];
    if (!row.emplace(t.subject_id, t.score_reference - t.score_distorted).second) {
      throw DataError(fmt::format("duplicate trial for subject {} at {}/{}/{}", t.subject_id,
                                  t.sequence, t.codec, t.rate_index));
    }
  }
  return table;
}

std::vector<DMOSRecord> compute_dmos(const DifferenceTable& diffs) {
  std::vector<DMOSRecord> out;
  out.reserve(diffs.size());
  for (const auto& [key, by_subject] : diffs) {
    if (by_subject.size() < 2) {
      throw DataError(fmt::format("point {}/{}/{} has {} subject(s); at least 2 are needed",
                                  key.sequence, key.codec, key.rate_index, by_subject.size()));
    }
    DMOSRecord rec{key.sequence, key.codec, key.rate_index, 0.0, 0.0, 0, {}};
    for (const auto& [subject, d] : by_subject) rec.diff_scores.push_back(d);
    rec.n_subjects = static_cast<int>(rec.diff_scores.size());
    rec.dmos = mean_of(rec.diff_scores);
    rec.stdev = sample_stdev(rec.diff_scores, rec.dmos);
    out.push_back(std::move(rec));
  }
  return out;
}

SubjectiveQuality quality_from_dmos(const DMOSRecord& record) {
  return {100.0 - record.dmos, record.dmos < 0.0};
}

ScreeningResult screen_subjects(std::span<const TrialScore> trials) {
  return screen_subjects(difference_scores(trials));
}

ScreeningResult screen_subjects(const DifferenceTable& diffs) {
  std::map<std::string, SubjectDiagnostics> per_subject;
  for (const auto& [key, by_subject] : diffs)
    for (const auto& [subject, d] : by_subject) per_subject[subject].subject_id = subject;
  if (per_subject.size() < 3) {
    throw DataError(fmt::format("screening needs at least 3 subjects, got {}", per_subject.size()));
  }

  std::vector<double> values;
  for (const auto& [key, by_subject] : diffs) {
    values.clear();
    for (const auto& [subject, d] : by_subject) values.push_back(d);
    const double n = static_cast<double>(values.size());
    const double mean = mean_of(values);
    double m2 = 0.0, m4 = 0.0;
    for (double x : values) {
      const double dev2 = (x - mean) * (x - mean);
      m2 += dev2;
      m4 += dev2 * dev2;
    }
    m2 /= n;
    m4 /= n;
    const double kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 3.0;
    const double s = values.size() > 1 ? sample_stdev(values, mean) : 0.0;
    const double k = (kurtosis >= 2.0 && kurtosis <= 4.0) ? 2.0 : std::sqrt(20.0);
    for (const auto& [subject, d] : by_subject) {
      auto& diag = per_subject[subject];
      ++diag.n_points;
      if (d > mean + k * s) ++diag.above;
      if (d < mean - k * s) ++diag.below;
    }
  }

  ScreeningResult result;
  for (auto& [subject, diag] : per_subject) {
    const int pq = diag.above + diag.below;
    diag.rejected = pq > 0 && static_cast<double>(pq) / diag.n_points > 0.05 &&
                    static_cast<double>(std::abs(diag.above - diag.below)) / pq < 0.3;
    (diag.rejected ? result.rejected : result.retained).push_back(subject);
    result.diagnostics.push_back(diag);
  }
  return result;
}

AnovaResult anova_one_way(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw DataError("ANOVA needs at least two groups");
  std::size_t total = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw DataError("each ANOVA group needs at least 2 values");
    for (double x : g) {
      if (!std::isfinite(x)) throw DataError("ANOVA input contains a non-finite value");
      grand += x;
    }
    total += g.size();
  }
  grand /= static_cast<double>(total);

  double ss_between = 0.0, ss_within = 0.0;
  bool means_equal = true;
  const double first_mean = mean_of(groups.front());
  for (const auto& g : groups) {
    const double m = mean_of(g);
    means_equal = means_equal && m == first_mean;
    ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) ss_within += (x - m) * (x - m);
  }
  AnovaResult r;
  r.df_between = static_cast<double>(groups.size() - 1);
  r.df_within = static_cast<double>(total - groups.size());
  if (ss_within == 0.0) {
    if (means_equal) {
      r.f = 0.0;
      r.p = 1.0;
    } else {
      r.f = std::numeric_limits<double>::infinity();
      r.p = 0.0;
      r.degenerate = true;
    }
    return r;
  }
  r.f = (ss_between / r.df_between) / (ss_within / r.df_within);
  r.p = f_survival(r.f, r.df_between, r.df_within);
  return r;
}

AnovaResult anova_one_way(const std::vector<double>& group_a, const std::vector<double>& group_b) {
  const std::vector<double> groups[] = {group_a, group_b};
  return anova_one_way(std::span<const std::vector<double>>(groups));
}

std::string SignificanceCell::render() const {
  return fmt::format("{}/{}, ({}/{})", n_significant, n_total, wins,
                     losses == 0 ? std::string("0") : fmt::format("-{}", losses));
}

CodecPanels panels_from_differences(const DifferenceTable& diffs) {
  CodecPanels panels;
  for (const auto& [key, by_subject] : diffs) {
    auto& v = panels[key.codec][{key.sequence, key.rate_index}];
    for (const auto& [subject, d] : by_subject) v.push_back(d);
  }
  return panels;
}

std::vector<SignificanceCell> significance_matrix(const CodecPanels& panels, double alpha) {
  if (panels.size() < 2) throw DataError("significance matrix needs at least two codecs");
  const auto& reference = panels.begin()->second;
  for (const auto& [codec, points] : panels) {
    bool same = points.size() == reference.size();
    for (auto a = points.begin(), b = reference.begin(); same && a != points.end(); ++a, ++b) {
      same = a->first == b->first;
    }
    if (!same) {
      throw DataError(fmt::format("codec '{}' does not cover the same test points as '{}'",
                                  codec, panels.begin()->first));
    }
  }

  std::vector<SignificanceCell> cells;
  for (const auto& [codec_a, points_a] : panels) {
    for (const auto& [codec_b, points_b] : panels) {
      if (codec_a == codec_b) continue;
      SignificanceCell cell{codec_a, codec_b, 0, static_cast<int>(points_a.size()), 0, 0};
      for (const auto& [point, diffs_a] : points_a) {
        const auto& diffs_b = points_b.at(point);
        const AnovaResult r = anova_one_way(diffs_a, diffs_b);
        if (!r.significant(alpha)) continue;
        ++cell.n_significant;
        if (mean_of(diffs_a) < mean_of(diffs_b)) {
          ++cell.wins;
        } else {
          ++cell.losses;
        }
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace rqbench
