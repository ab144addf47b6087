#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rqbench/ratequality.hpp"
#include "rqbench/subjective.hpp"

namespace rqbench {

/// q(x) = b2 + (b1 - b2) / (1 + exp(-(x - b3) / |b4|)); monotone in x.
double logistic(const std::array<double, 4>& beta, double x);

struct FittedModel {
  std::array<double, 4> beta{};
  double residual_sse = 0.0;  // weighted
  bool converged = false;
  int iterations = 0;

  double predict(double x) const { return logistic(beta, x); }
};

inline constexpr double kStdevFloor = 0.5;
inline constexpr int kMaxFitIterations = 10000;
inline constexpr double kFitStepTolerance = 1e-10;

/// 1 / max(stdev, floor)^2 per point.
std::vector<double> inverse_variance_weights(std::span<const double> stdevs,
                                             double floor = kStdevFloor);

/// Weighted least-squares logistic fit by damped Gauss-Newton
/// (Levenberg-Marquardt) from b1 = max(y), b2 = min(y), b3 = median(x),
/// b4 = stdev(x). Stops when the step falls below 1e-10 (relative) or after
/// 10000 iterations; in the latter case `converged` is false.
FittedModel logistic_fit(std::span<const double> metric_values, std::span<const double> targets,
                         std::span<const double> weights);

struct CorrelationStats {
  double srocc = 0.0;
  double lcc = 0.0;
  double outlier_ratio = 0.0;
  double rmse = 0.0;
  int n_points = 0;

  /// "0.8463 / 0.8375 / 0.1574 / 5.9972"
  std::string format() const;
};

double pearson(std::span<const double> a, std::span<const double> b);
/// 1-based ranks, ties share the average rank.
std::vector<double> average_ranks(std::span<const double> v);
double spearman(std::span<const double> a, std::span<const double> b);

/// SROCC on the raw values; LCC, RMSE and the outlier ratio
/// (|q(x) - y| > 2 stdev) on model predictions.
CorrelationStats correlation_stats(std::span<const double> metric_values,
                                   std::span<const double> targets,
                                   std::span<const double> stdevs, const FittedModel& model);

/// `quantile` of |SROCC| between two independent random orderings of n
/// items, estimated from `permutations` draws.
double srocc_noise_floor(int n, int permutations = 2000, std::uint64_t seed = 0,
                         double quantile = 0.95);

struct MetricSuiteRow {
  std::string group;
  std::string metric;
  CorrelationStats stats;
  FittedModel model;
  bool below_noise_floor = false;
};

struct MetricSuiteOptions {
  /// Metric columns to evaluate; empty means every column present on all
  /// joined points.
  std::vector<std::string> metrics;
  int floor_permutations = 2000;
  std::uint64_t seed = 0;
};

/// Joins rate points of one resolution group with DMOS records on
/// (sequence, codec, rate_index), then fits and scores every metric column
/// against subjective quality (100 - DMOS).
std::vector<MetricSuiteRow> evaluate_metric_suite(std::span<const RatePoint> points,
                                                  std::span<const DMOSRecord> dmos,
                                                  const std::string& group,
                                                  const MetricSuiteOptions& options = {});

/// Plain-text table, one row per metric and four columns per group; the
/// best value of each column is starred.
std::string render_metric_table(std::span<const MetricSuiteRow> rows);

}  // namespace rqbench
