#include "rqbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>

#include <fmt/format.h>

#include "rqbench/error.hpp"
#include "rqbench/process.hpp"

namespace rqbench {

namespace {

void check_pair(const VideoSequence& ref, const VideoSequence& dist) {
  if (ref.dims() != dist.dims() || ref.bit_depth() != dist.bit_depth() ||
      ref.frame_count() != dist.frame_count()) {
    throw DataError(fmt::format(
        "geometry mismatch: reference {} {}-bit x{} vs distorted {} {}-bit x{}",
        to_string(ref.dims()), ref.bit_depth(), ref.frame_count(), to_string(dist.dims()),
        dist.bit_depth(), dist.frame_count()));
  }
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double psnr_from_mse(double mse, int max_value) {
  if (mse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(static_cast<double>(max_value) * max_value / mse);
}

struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> px;

  double at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }
};

Image to_image(const Plane& p) {
  Image img{p.width(), p.height(), {}};
  img.px.assign(p.samples().begin(), p.samples().end());
  return img;
}

Image halve(const Image& in) {
  Image out{in.width / 2, in.height / 2, {}};
  out.px.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.px[static_cast<std::size_t>(y) * out.width + x] =
          0.25 * (in.at(2 * x, 2 * y) + in.at(2 * x + 1, 2 * y) + in.at(2 * x, 2 * y + 1) +
                  in.at(2 * x + 1, 2 * y + 1));
  return out;
}

SsimComponents ssim_images(const Image& a, const Image& b, int max_value) {
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    throw DataError(fmt::format("plane {}x{} is smaller than the {}x{} SSIM window", a.width,
                                a.height, kSsimWindow, kSsimWindow));
  }
  const double c1 = std::pow(0.01 * max_value, 2);
  const double c2 = std::pow(0.03 * max_value, 2);
  constexpr double n = kSsimWindow * kSsimWindow;
  double ssim_sum = 0.0, cs_sum = 0.0;
  long windows = 0;
  for (int wy = 0; wy + kSsimWindow <= a.height; wy += kSsimStride) {
    for (int wx = 0; wx + kSsimWindow <= a.width; wx += kSsimStride) {
      double mx = 0.0, my = 0.0;
      for (int y = 0; y < kSsimWindow; ++y)
        for (int x = 0; x < kSsimWindow; ++x) {
          mx += a.at(wx + x, wy + y);
          my += b.at(wx + x, wy + y);
        }
      mx /= n;
      my /= n;
      double vx = 0.0, vy = 0.0, cxy = 0.0;
      for (int y = 0; y < kSsimWindow; ++y)
        for (int x = 0; x < kSsimWindow; ++x) {
          const double dx = a.at(wx + x, wy + y) - mx;
          const double dy = b.at(wx + x, wy + y) - my;
          vx += dx * dx;
          vy += dy * dy;
          cxy += dx * dy;
        }
      vx /= n;
      vy /= n;
      cxy /= n;
      const double l = (2 * mx * my + c1) / (mx * mx + my * my + c1);
      const double cs = (2 * cxy + c2) / (vx + vy + c2);
      ssim_sum += l * cs;
      cs_sum += cs;
      ++windows;
    }
  }
  return {ssim_sum / windows, cs_sum / windows};
}

double population_stdev(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

double plane_mse(const Plane& a, const Plane& b) {
  if (a.dims() != b.dims()) throw DataError("plane geometry mismatch");
  auto sa = a.samples(), sb = b.samples();
  double acc = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = static_cast<double>(sa[i]) - sb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(sa.size());
}

MetricScore psnr(const VideoSequence& ref, const VideoSequence& dist, PsnrMode mode) {
  check_pair(ref, dist);
  MetricScore score{mode == PsnrMode::kLuma ? "psnr" : "psnr_yuv611", 0.0, {}, {}};
  const int max_value = ref.frame(0).max_value();
  for (std::size_t f = 0; f < ref.frame_count(); ++f) {
    const auto& r = ref.frame(f);
    const auto& d = dist.frame(f);
    double mse = plane_mse(r.y(), d.y());
    if (mode == PsnrMode::kYuv611) {
      mse = (6.0 * mse + plane_mse(r.u(), d.u()) + plane_mse(r.v(), d.v())) / 8.0;
    }
    score.per_frame.push_back(psnr_from_mse(mse, max_value));
  }
  score.value = mean(score.per_frame);
  return score;
}

SsimComponents ssim_plane(const Plane& ref, const Plane& dist, int max_value) {
  if (ref.dims() != dist.dims()) throw DataError("plane geometry mismatch");
  return ssim_images(to_image(ref), to_image(dist), max_value);
}

MetricScore ssim(const VideoSequence& ref, const VideoSequence& dist) {
  check_pair(ref, dist);
  MetricScore score{"ssim", 0.0, {}, {}};
  for (std::size_t f = 0; f < ref.frame_count(); ++f) {
    score.per_frame.push_back(
        ssim_plane(ref.frame(f).y(), dist.frame(f).y(), ref.frame(f).max_value()).ssim);
  }
  score.value = mean(score.per_frame);
  return score;
}

double ms_ssim_plane(const Plane& ref, const Plane& dist, int max_value,
                     const MsSsimOptions& options) {
  if (ref.dims() != dist.dims()) throw DataError("plane geometry mismatch");
  const auto scales = static_cast<int>(options.exponents.size());
  if (scales == 0) throw DataError("MS-SSIM needs at least one scale");
  const int needed = kSsimWindow << (scales - 1);
  if (ref.width() < needed || ref.height() < needed) {
    throw DataError(fmt::format("MS-SSIM with {} scales needs at least {}x{} luma, got {}",
                                scales, needed, needed, to_string(ref.dims())));
  }
  Image a = to_image(ref), b = to_image(dist);
  double result = 1.0;
  for (int s = 0; s < scales; ++s) {
    const SsimComponents c = ssim_images(a, b, max_value);
    const bool last = s == scales - 1;
    const double term = (last && options.include_luminance) ? c.ssim : c.cs;
    result *= std::pow(std::max(term, 0.0), options.exponents[static_cast<std::size_t>(s)]);
    if (!last) {
      a = halve(a);
      b = halve(b);
    }
  }
  return result;
}

MetricScore ms_ssim(const VideoSequence& ref, const VideoSequence& dist,
                    const MsSsimOptions& options) {
  check_pair(ref, dist);
  MetricScore score{"msssim", 0.0, {}, {}};
  for (std::size_t f = 0; f < ref.frame_count(); ++f) {
    score.per_frame.push_back(
        ms_ssim_plane(ref.frame(f).y(), dist.frame(f).y(), ref.frame(f).max_value(), options));
  }
  score.value = mean(score.per_frame);
  return score;
}

SITI si_ti(const VideoSequence& seq) {
  SITI out;
  const int w = seq.dims().width, h = seq.dims().height;
  std::vector<double> values;
  for (const auto& frame : seq.frames()) {
    const Plane& y = frame.y();
    values.clear();
    for (int j = 1; j + 1 < h; ++j) {
      for (int i = 1; i + 1 < w; ++i) {
        auto p = [&](int dx, int dy) { return static_cast<double>(y.at(i + dx, j + dy)); };
        const double gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
        const double gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
        values.push_back(std::sqrt(gx * gx + gy * gy));
      }
    }
    out.si = std::max(out.si, population_stdev(values));
  }
  for (std::size_t f = 1; f < seq.frame_count(); ++f) {
    auto cur = seq.frame(f).y().samples();
    auto prev = seq.frame(f - 1).y().samples();
    values.assign(cur.size(), 0.0);
    for (std::size_t k = 0; k < cur.size(); ++k) {
      values[k] = static_cast<double>(cur[k]) - prev[k];
    }
    out.ti = std::max(out.ti, population_stdev(values));
  }
  return out;
}

MetricScore external_metric(const ExternalMetricTool& tool, const std::filesystem::path& ref_path,
                            const std::filesystem::path& dist_path, const RawGeometry& geometry) {
  const std::string command = expand_template(
      tool.command_template, {{"ref", shell_quote(ref_path.string())},
                              {"dist", shell_quote(dist_path.string())},
                              {"width", std::to_string(geometry.dims.width)},
                              {"height", std::to_string(geometry.dims.height)},
                              {"bitdepth", std::to_string(geometry.bit_depth)},
                              {"fps", fmt::format("{:g}", geometry.fps.value())}});
  const CommandResult run = run_command(command);
  if (run.exit_code != 0) {
    throw ProcessError(fmt::format("metric tool '{}' exited with status {}", tool.metric_id,
                                   run.exit_code),
                       run.output);
  }
  std::smatch m;
  const std::regex score_re(tool.score_regex);
  if (!std::regex_search(run.output, m, score_re) || m.size() < 2) {
    throw ProcessError(
        fmt::format("metric tool '{}': no score matching /{}/ in output", tool.metric_id,
                    tool.score_regex),
        run.output);
  }
  MetricScore score{tool.metric_id, 0.0, {}, {}};
  try {
    std::size_t used = 0;
    const std::string text = m[1].str();
    score.value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw ProcessError(fmt::format("metric tool '{}': unparseable score '{}'", tool.metric_id,
                                   m[1].str()),
                       run.output);
  }
  if (!tool.version_regex.empty()) {
    std::smatch vm;
    if (std::regex_search(run.output, vm, std::regex(tool.version_regex)) && vm.size() >= 2) {
      score.tool_version = vm[1].str();
    }
  }
  return score;
}

}  // namespace rqbench
