#pragma once

#include <compare>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rqbench {

/// One subject's double-stimulus rating pair for one test point.
struct TrialScore {
  std::string session;
  std::string subject_id;
  std::string sequence;
  std::string codec;
  std::string rate_index;
  double score_reference = 0.0;
  double score_distorted = 0.0;
};

struct PointKey {
  std::string sequence;
  std::string codec;
  std::string rate_index;

  auto operator<=>(const PointKey&) const = default;
};

/// point -> subject -> (reference - distorted)
using DifferenceTable = std::map<PointKey, std::map<std::string, double>>;

DifferenceTable difference_scores(std::span<const TrialScore> trials);

struct DMOSRecord {
  std::string sequence;
  std::string codec;
  std::string rate_index;
  double dmos = 0.0;
  double stdev = 0.0;  // sample standard deviation (n - 1)
  int n_subjects = 0;
  std::vector<double> diff_scores;  // ordered by subject id

  PointKey key() const { return {sequence, codec, rate_index}; }
};

std::vector<DMOSRecord> compute_dmos(const DifferenceTable& diffs);

inline constexpr const char* kSubjectiveMetric = "subj";

struct SubjectiveQuality {
  double value = 0.0;
  /// Set when the distorted clip was rated above its reference (DMOS < 0).
  bool flagged = false;
};

/// 100 - DMOS, unclamped.
SubjectiveQuality quality_from_dmos(const DMOSRecord& record);

struct SubjectDiagnostics {
  std::string subject_id;
  int n_points = 0;
  int above = 0;  // P
  int below = 0;  // Q
  bool rejected = false;
};

struct ScreeningResult {
  std::vector<std::string> retained;
  std::vector<std::string> rejected;
  std::vector<SubjectDiagnostics> diagnostics;
};

/// Observer screening on difference scores. Per point: mean, sample
/// standard deviation s and kurtosis b2 = m4 / m2^2. Scores strictly above
/// mean + k s count toward P, strictly below mean - k s toward Q, with k = 2
/// when 2 <= b2 <= 4 and sqrt(20) otherwise. A subject is rejected when
/// (P + Q) / N > 0.05 and |P - Q| / (P + Q) < 0.3.
ScreeningResult screen_subjects(std::span<const TrialScore> trials);
ScreeningResult screen_subjects(const DifferenceTable& diffs);

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  double df_between = 0.0;
  double df_within = 0.0;
  /// Zero within-group variance with differing means: F is infinite.
  bool degenerate = false;

  bool significant(double alpha = 0.05) const { return p < alpha; }
};

/// One-way ANOVA over two or more groups.
AnovaResult anova_one_way(std::span<const std::vector<double>> groups);
AnovaResult anova_one_way(const std::vector<double>& group_a, const std::vector<double>& group_b);

/// Codec pair summary over all shared test points.
struct SignificanceCell {
  std::string codec_a;
  std::string codec_b;
  int n_significant = 0;
  int n_total = 0;
  int wins = 0;    // codec_a significantly better (lower DMOS)
  int losses = 0;  // codec_a significantly worse

  /// "k/N, (w/-l)", e.g. "5/36, (0/-5)".
  std::string render() const;
};

/// codec -> (sequence, rate_index) -> per-subject difference scores
using CodecPanels =
    std::map<std::string, std::map<std::pair<std::string, std::string>, std::vector<double>>>;

CodecPanels panels_from_differences(const DifferenceTable& diffs);

/// Every ordered codec pair (a != b), ordered by (a, b).
std::vector<SignificanceCell> significance_matrix(const CodecPanels& panels, double alpha = 0.05);

}  // namespace rqbench
