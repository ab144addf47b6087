#include "rqbench/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "rqbench/error.hpp"

namespace rqbench {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double weighted_sse(const std::array<double, 4>& beta, std::span<const double> x,
                    std::span<const double> y, std::span<const double> w) {
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - logistic(beta, x[i]);
    sse += w[i] * r * r;
  }
  return sse;
}

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DataError(fmt::format("{}: length mismatch ({} vs {})", what, a, b));
}

const std::vector<std::string>& canonical_metric_order() {
  static const std::vector<std::string> order{"psnr", "ssim", "msssim", "vif", "vsnr", "vmaf"};
  return order;
}

}  // namespace

double logistic(const std::array<double, 4>& beta, double x) {
  const double z = (x - beta[2]) / std::abs(beta[3]);
  return beta[1] + (beta[0] - beta[1]) / (1.0 + std::exp(-z));
}

std::vector<double> inverse_variance_weights(std::span<const double> stdevs, double floor) {
  std::vector<double> w;
  w.reserve(stdevs.size());
  for (double s : stdevs) {
    const double e = std::max(s, floor);
    w.push_back(1.0 / (e * e));
  }
  return w;
}

FittedModel logistic_fit(std::span<const double> x, std::span<const double> y,
                         std::span<const double> w) {
  check_lengths(x.size(), y.size(), "logistic fit");
  check_lengths(x.size(), w.size(), "logistic fit weights");
  if (x.size() < 5) throw DataError(fmt::format("logistic fit needs 5 points, got {}", x.size()));
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  if (*xmin == *xmax) throw DataError("logistic fit: metric values are constant");
  for (double wi : w) {
    if (!(wi > 0.0) || !std::isfinite(wi)) throw DataError("logistic fit weights must be positive");
  }

  const double mx = mean_of(x);
  double var = 0.0;
  for (double xi : x) var += (xi - mx) * (xi - mx);
  FittedModel model;
  std::array<double, 4>& beta = model.beta;
  beta = {*std::max_element(y.begin(), y.end()), *std::min_element(y.begin(), y.end()),
          median_of(x), std::sqrt(var / static_cast<double>(x.size() - 1))};

  const std::size_t n = x.size();
  double sse = weighted_sse(beta, x, y, w);
  double lambda = 1e-3;
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 4);
  Eigen::VectorXd res(static_cast<Eigen::Index>(n));

  for (model.iterations = 0; model.iterations < kMaxFitIterations; ++model.iterations) {
    if (sse == 0.0) {
      model.converged = true;
      break;
    }
    const double scale = std::abs(beta[3]);
    const double sign = beta[3] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (x[i] - beta[2]) / scale;
      const double s = 1.0 / (1.0 + std::exp(-z));
      const double ds = s * (1.0 - s) * (beta[0] - beta[1]);
      const auto r = static_cast<Eigen::Index>(i);
      jac(r, 0) = s;
      jac(r, 1) = 1.0 - s;
      jac(r, 2) = -ds / scale;
      jac(r, 3) = -ds * z / scale * sign;
      res(r) = y[i] - (beta[1] + (beta[0] - beta[1]) * s);
    }
    const Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(n));
    const Eigen::Matrix4d a = jac.transpose() * wv.asDiagonal() * jac;
    const Eigen::Vector4d g = jac.transpose() * (wv.asDiagonal() * res);
    const double max_diag = a.diagonal().maxCoeff();

    bool accepted = false;
    Eigen::Vector4d step = Eigen::Vector4d::Zero();
    while (lambda < 1e20) {
      Eigen::Matrix4d damped = a;
      for (int k = 0; k < 4; ++k) damped(k, k) += lambda * std::max(a(k, k), 1e-12 * max_diag);
      step = damped.ldlt().solve(g);
      std::array<double, 4> trial = beta;
      for (int k = 0; k < 4; ++k) trial[static_cast<std::size_t>(k)] += step(k);
      const double trial_sse = trial[3] != 0.0 ? weighted_sse(trial, x, y, w)
                                               : std::numeric_limits<double>::infinity();
      if (std::isfinite(trial_sse) && trial_sse <= sse) {
        beta = trial;
        sse = trial_sse;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    const double beta_norm =
        std::max({std::abs(beta[0]), std::abs(beta[1]), std::abs(beta[2]), std::abs(beta[3])});
    if (!accepted || step.cwiseAbs().maxCoeff() <= kFitStepTolerance * (1.0 + beta_norm)) {
      // No descent direction left: a stationary point when the gradient
      // is negligible against the weighted curvature.
      model.converged = g.cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + max_diag) * (1.0 + beta_norm);
      ++model.iterations;
      break;
    }
  }
  model.residual_sse = sse;
  return model;
}

std::string CorrelationStats::format() const {
  return fmt::format("{:.4f} / {:.4f} / {:.4f} / {:.4f}", srocc, lcc, outlier_ratio, rmse);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size(), "pearson");
  if (a.size() < 2) throw DataError("pearson needs at least 2 points");
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size(), "spearman");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  return pearson(ra, rb);
}

CorrelationStats correlation_stats(std::span<const double> x, std::span<const double> y,
                                   std::span<const double> stdevs, const FittedModel& model) {
  check_lengths(x.size(), y.size(), "correlation stats");
  check_lengths(x.size(), stdevs.size(), "correlation stats stdevs");
  if (x.size() < 3) throw DataError("correlation statistics need at least 3 points");
  std::vector<double> predicted(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) predicted[i] = model.predict(x[i]);
  CorrelationStats s;
  s.n_points = static_cast<int>(x.size());
  s.srocc = spearman(x, y);
  s.lcc = pearson(predicted, y);
  double sq = 0.0;
  int outliers = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = predicted[i] - y[i];
    sq += e * e;
    if (std::abs(e) > 2.0 * stdevs[i]) ++outliers;
  }
  s.rmse = std::sqrt(sq / static_cast<double>(x.size()));
  s.outlier_ratio = static_cast<double>(outliers) / static_cast<double>(x.size());
  return s;
}

double srocc_noise_floor(int n, int permutations, std::uint64_t seed, double quantile) {
  if (n < 3 || permutations < 1) throw DataError("noise floor needs n >= 3 and permutations >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> base(static_cast<std::size_t>(n)), perm(static_cast<std::size_t>(n));
  std::iota(base.begin(), base.end(), 1.0);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(permutations));
  for (int k = 0; k < permutations; ++k) {
    perm = base;
    // Fisher-Yates with engine output only, so draws match across libraries.
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      std::swap(perm[i], perm[rng() % (i + 1)]);
    }
    values.push_back(std::abs(pearson(base, perm)));
  }
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(
      std::clamp(std::ceil(quantile * permutations) - 1.0, 0.0, permutations - 1.0));
  return values[idx];
}

std::vector<MetricSuiteRow> evaluate_metric_suite(std::span<const RatePoint> points,
                                                  std::span<const DMOSRecord> dmos,
                                                  const std::string& group,
                                                  const MetricSuiteOptions& options) {
  std::map<PointKey, const RatePoint*> by_key;
  for (const auto& p : points) {
    if (p.group != group || !p.rate_index) continue;
    const PointKey key{p.sequence, p.codec, *p.rate_index};
    if (!by_key.emplace(key, &p).second) {
      throw DataError(fmt::format("group {}: duplicate rate point {}/{}/{}", group, key.sequence,
                                  key.codec, key.rate_index));
    }
  }
  std::vector<std::string> missing;
  std::set<PointKey> seen;
  std::vector<const RatePoint*> joined;
  std::vector<const DMOSRecord*> joined_dmos;
  for (const auto& rec : dmos) {
    auto it = by_key.find(rec.key());
    if (it == by_key.end()) {
      missing.push_back(fmt::format("rqpoints:{}/{}/{}", rec.sequence, rec.codec, rec.rate_index));
      continue;
    }
    seen.insert(rec.key());
    joined.push_back(it->second);
    joined_dmos.push_back(&rec);
  }
  for (const auto& [key, p] : by_key) {
    if (!seen.contains(key)) {
      missing.push_back(fmt::format("dmos:{}/{}/{}", key.sequence, key.codec, key.rate_index));
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError(fmt::format("group {}: join failed, missing keys: {}", group, list));
  }
  if (joined.size() < 5) {
    throw DataError(fmt::format("group {}: {} joined points, at least 5 needed", group,
                                joined.size()));
  }

  std::vector<std::string> metrics = options.metrics;
  if (metrics.empty()) {
    std::set<std::string> common;
    for (const auto& [id, v] : joined.front()->scores) common.insert(id);
    for (const auto* p : joined) {
      std::erase_if(common, [&](const std::string& id) { return !p->has_score(id); });
    }
    common.erase(kSubjectiveMetric);
    for (const auto& id : canonical_metric_order()) {
      if (common.erase(id)) metrics.push_back(id);
    }
    metrics.insert(metrics.end(), common.begin(), common.end());
  }

  std::vector<double> targets, stdevs;
  for (const auto* rec : joined_dmos) {
    targets.push_back(100.0 - rec->dmos);
    stdevs.push_back(rec->stdev);
  }
  const auto weights = inverse_variance_weights(stdevs);
  const double floor = srocc_noise_floor(static_cast<int>(joined.size()),
                                         options.floor_permutations, options.seed);

  std::vector<MetricSuiteRow> rows;
  for (const auto& metric : metrics) {
    std::vector<double> xs;
    for (const auto* p : joined) xs.push_back(p->score(metric));
    MetricSuiteRow row;
    row.group = group;
    row.metric = metric;
    row.model = logistic_fit(xs, targets, weights);
    row.stats = correlation_stats(xs, targets, stdevs, row.model);
    row.below_noise_floor = std::abs(row.stats.srocc) < floor;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_metric_table(std::span<const MetricSuiteRow> rows) {
  std::vector<std::string> groups, metrics;
  std::map<std::pair<std::string, std::string>, const MetricSuiteRow*> cell;
  for (const auto& r : rows) {
    if (std::find(groups.begin(), groups.end(), r.group) == groups.end()) groups.push_back(r.group);
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
    cell[{r.metric, r.group}] = &r;
  }
  // best[group][column]
  std::map<std::string, std::array<double, 4>> best;
  for (const auto& g : groups) {
    std::array<double, 4> b{-2.0, -2.0, 2.0, std::numeric_limits<double>::infinity()};
    for (const auto& m : metrics) {
      auto it = cell.find({m, g});
      if (it == cell.end()) continue;
      const auto& s = it->second->stats;
      b[0] = std::max(b[0], s.srocc);
      b[1] = std::max(b[1], s.lcc);
      b[2] = std::min(b[2], s.outlier_ratio);
      b[3] = std::min(b[3], s.rmse);
    }
    best[g] = b;
  }
  std::string out = fmt::format("{:<8}", "Metric");
  for (const auto& g : groups) {
    const auto first = std::find_if(rows.begin(), rows.end(), [&](const MetricSuiteRow& r) { return r.group == g; });
    out += fmt::format(" | {:^39}", fmt::format("{} ({})", g, first->stats.n_points));
  }
  out += '\n';
  out += fmt::format("{:<8}", "");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out += fmt::format(" | {:>9}{:>10}{:>10}{:>10}", "SROCC", "LCC", "OR", "RMSE");
  }
  out += '\n';
  for (const auto& m : metrics) {
    out += fmt::format("{:<8}", m);
    for (const auto& g : groups) {
      auto it = cell.find({m, g});
      if (it == cell.end()) {
        out += fmt::format(" | {:>39}", "-");
        continue;
      }
      const auto& s = it->second->stats;
      const auto& b = best[g];
      const double v[4] = {s.srocc, s.lcc, s.outlier_ratio, s.rmse};
      out += " | ";
      for (int k = 0; k < 4; ++k) {
        const std::string text = fmt::format("{:.4f}{}", v[k], v[k] == b[static_cast<std::size_t>(k)] ? "*" : " ");
        out += fmt::format("{:>{}}", text, k == 0 ? 9 : 10);
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace rqbench
