#include "rqbench/codecs.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "rqbench/process.hpp"
#include "rqbench/toy_codec.hpp"

namespace rqbench {

namespace {

std::atomic<unsigned> g_encode_counter{0};

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '_';
  return out;
}

EncodeResult encode_toy(const VideoSequence& seq, const QpSetting& setting) {
  const auto start = std::chrono::steady_clock::now();
  ToyEncoded encoded = toy_encode(seq, setting.qp, setting.increment_frame);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::size_t bytes = encoded.bitstream.size();
  return {setting, bytes, bitrate_kbps(bytes, seq.duration_seconds()), std::move(encoded.recon),
          wall};
}

EncodeResult encode_external(const EncoderAdapter& adapter, const VideoSequence& seq,
                             const QpSetting& setting, const EncodeOptions& options) {
  namespace fs = std::filesystem;
  const fs::path dir = options.work_dir.empty() ? fs::temp_directory_path() : options.work_dir;
  fs::create_directories(dir);
  const std::string stem =
      fmt::format("{}_{}_qp{}{}_{}", sanitize(seq.name()), sanitize(adapter.codec_id),
                  setting.qp,
                  setting.increment_frame ? fmt::format("i{}", *setting.increment_frame) : "",
                  g_encode_counter.fetch_add(1));
  const fs::path recon_path = dir / (stem + "_rec.yuv");
  const fs::path bitstream_path = dir / (stem + ".bin");
  fs::path input_path;
  bool wrote_input = false;
  if (options.input_path) {
    input_path = *options.input_path;
  } else {
    input_path = dir / (stem + "_in.yuv");
    write_raw_video(seq, input_path);
    wrote_input = true;
  }

  std::string extra = adapter.fixed_args;
  if (setting.increment_frame) {
    if (adapter.fractional_template.empty()) {
      throw DataError(fmt::format("codec '{}' has no fractional QP mechanism", adapter.codec_id));
    }
    if (!extra.empty()) extra += ' ';
    extra += expand_template(adapter.fractional_template,
                             {{"frame", std::to_string(*setting.increment_frame)}});
  }
  const Dimensions dims = seq.dims();
  const std::string command = expand_template(
      adapter.encode_template, {{"input", shell_quote(input_path.string())},
                                {"recon", shell_quote(recon_path.string())},
                                {"bitstream", shell_quote(bitstream_path.string())},
                                {"qp", std::to_string(setting.qp)},
                                {"width", std::to_string(dims.width)},
                                {"height", std::to_string(dims.height)},
                                {"fps", fmt::format("{:g}", seq.fps().value())},
                                {"bitdepth", std::to_string(seq.bit_depth())},
                                {"extra", extra}});

  auto cleanup = [&] {
    if (options.keep_files) return;
    std::error_code ec;
    fs::remove(recon_path, ec);
    fs::remove(bitstream_path, ec);
    if (wrote_input) fs::remove(input_path, ec);
  };

  const CommandResult run = run_command(command);
  if (run.exit_code != 0) {
    cleanup();
    throw ProcessError(fmt::format("codec '{}' exited with status {}: {}", adapter.codec_id,
                                   run.exit_code, command),
                       run.output);
  }
  if (!fs::exists(bitstream_path) || !fs::exists(recon_path)) {
    cleanup();
    throw ProcessError(fmt::format("codec '{}' did not produce {}", adapter.codec_id,
                                   fs::exists(bitstream_path) ? recon_path.string()
                                                              : bitstream_path.string()),
                       run.output);
  }
  const auto bytes = static_cast<std::size_t>(fs::file_size(bitstream_path));
  std::optional<VideoSequence> recon;
  try {
    recon = read_raw_video(recon_path, dims, seq.bit_depth(), seq.fps());
  } catch (const Error& e) {
    cleanup();
    throw DataError(fmt::format("codec '{}': reconstruction geometry mismatch: {}",
                                adapter.codec_id, e.what()));
  }
  cleanup();
  if (recon->frame_count() != seq.frame_count()) {
    throw DataError(fmt::format(
        "codec '{}': reconstruction geometry mismatch: {} frames, expected {}", adapter.codec_id,
        recon->frame_count(), seq.frame_count()));
  }
  if (bytes == 0) {
    throw ProcessError(fmt::format("codec '{}' produced an empty bitstream", adapter.codec_id),
                       run.output);
  }
  return {setting, bytes, bitrate_kbps(bytes, seq.duration_seconds()),
          VideoSequence(recon->frames(), seq.fps(), seq.name() + "_rec"), run.wall_seconds};
}

RateTargetOutcome make_outcome(double target, EncodeResult result, int iterations) {
  const double err = (result.bitrate_kbps - target) / target;
  return {target, std::move(result), err, iterations};
}

}  // namespace

void EncoderAdapter::validate() const {
  if (codec_id.empty()) throw ManifestError("codec.id", "must not be empty");
  if (qp_range.min > qp_range.max) {
    throw ManifestError(fmt::format("codec.{}.qp_min", codec_id),
                        fmt::format("qp_min {} exceeds qp_max {}", qp_range.min, qp_range.max));
  }
  if (builtin_toy) {
    if (qp_range.min < toy::kMinQp || qp_range.max > toy::kMaxQp) {
      throw ManifestError(fmt::format("codec.{}.qp_max", codec_id),
                          "toy codec QPs are limited to 0..63");
    }
    return;
  }
  if (encode_template.find("{input}") == std::string::npos ||
      encode_template.find("{qp}") == std::string::npos) {
    throw ManifestError(fmt::format("codec.{}.encode", codec_id),
                        "template must contain {input} and {qp}");
  }
}

EncoderAdapter EncoderAdapter::toy(QpRange range) {
  EncoderAdapter a;
  a.codec_id = "toy";
  a.qp_range = range;
  a.builtin_toy = true;
  return a;
}

double QpSetting::effective(std::size_t frame_count) const {
  if (!increment_frame || frame_count == 0) return qp;
  const auto start = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(0, *increment_frame)),
                                              0, frame_count);
  return qp + static_cast<double>(frame_count - start) / static_cast<double>(frame_count);
}

double bitrate_kbps(std::size_t bitstream_bytes, double duration_seconds) {
  return 8.0 * static_cast<double>(bitstream_bytes) / duration_seconds / 1000.0;
}

EncodeResult encode_with_setting(const EncoderAdapter& adapter, const VideoSequence& seq,
                                 const QpSetting& setting, const EncodeOptions& options) {
  if (setting.qp < adapter.qp_range.min || setting.qp > adapter.qp_range.max) {
    throw DataError(fmt::format("QP {} outside codec '{}' range [{}, {}]", setting.qp,
                                adapter.codec_id, adapter.qp_range.min, adapter.qp_range.max));
  }
  return adapter.builtin_toy ? encode_toy(seq, setting)
                             : encode_external(adapter, seq, setting, options);
}

EncodeResult encode_with_qp(const EncoderAdapter& adapter, const VideoSequence& seq, int qp,
                            const EncodeOptions& options) {
  return encode_with_setting(adapter, seq, QpSetting{qp, std::nullopt}, options);
}

RateTargetOutcome target_bitrate_search(const EncoderAdapter& adapter, const VideoSequence& seq,
                                        double target_kbps, double tolerance,
                                        const EncodeOptions& options) {
  if (!(target_kbps > 0.0)) throw DataError("target bitrate must be positive");
  if (!(tolerance >= 0.0)) throw DataError("tolerance must be non-negative");
  const double upper = target_kbps * (1.0 + tolerance);
  const double lower = target_kbps * (1.0 - tolerance);

  std::map<QpSetting, EncodeResult> cache;
  auto encode = [&](const QpSetting& s) -> const EncodeResult& {
    auto it = cache.find(s);
    if (it == cache.end()) it = cache.emplace(s, encode_with_setting(adapter, seq, s, options)).first;
    return it->second;
  };
  auto iterations = [&] { return static_cast<int>(cache.size()); };
  auto closest = [&] {
    const EncodeResult* best = nullptr;
    for (const auto& [s, r] : cache) {
      if (!best || std::abs(r.bitrate_kbps - target_kbps) < std::abs(best->bitrate_kbps - target_kbps))
        best = &r;
    }
    return make_outcome(target_kbps, *best, iterations());
  };

  const int qmin = adapter.qp_range.min, qmax = adapter.qp_range.max;
  const double rate_at_min = encode({qmin, std::nullopt}).bitrate_kbps;
  if (rate_at_min < lower) {
    throw TargetUnreachableError(
        fmt::format("target {:.1f} kbps unreachable for '{}': QP {} gives only {:.1f} kbps",
                    target_kbps, adapter.codec_id, qmin, rate_at_min),
        std::nullopt, qmin, closest());
  }
  const double rate_at_max = encode({qmax, std::nullopt}).bitrate_kbps;
  if (rate_at_max > upper) {
    throw TargetUnreachableError(
        fmt::format("target {:.1f} kbps unreachable for '{}': QP {} still gives {:.1f} kbps",
                    target_kbps, adapter.codec_id, qmax, rate_at_max),
        qmax, std::nullopt, closest());
  }

  // Smallest QP whose rate is at or below the upper band edge.
  int lo = qmin, hi = qmax;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (encode({mid, std::nullopt}).bitrate_kbps <= upper) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const EncodeResult& at = encode({lo, std::nullopt});
  if (at.bitrate_kbps >= lower) return make_outcome(target_kbps, at, iterations());

  // lo - 1 overshoots, lo undershoots.
  const int base = lo - 1;
  if (adapter.has_fractional() && seq.frame_count() > 1) {
    const int frames = static_cast<int>(seq.frame_count());
    // Largest increment frame k (most frames kept at `base`) within the band.
    int klo = 0, khi = frames - 1;
    std::optional<int> found;
    while (klo <= khi) {
      const int k = klo + (khi - klo) / 2;
      const double rate = encode({base, k}).bitrate_kbps;
      if (rate <= upper) {
        if (rate >= lower) found = k;
        klo = k + 1;
      } else {
        khi = k - 1;
      }
    }
    if (found) return make_outcome(target_kbps, encode({base, *found}), iterations());
  }
  throw TargetUnreachableError(
      fmt::format("target {:.1f} kbps unreachable for '{}' within ±{:.1f}%: QP {} gives {:.1f}, "
                  "QP {} gives {:.1f} kbps",
                  target_kbps, adapter.codec_id, tolerance * 100.0, base,
                  encode({base, std::nullopt}).bitrate_kbps, lo, at.bitrate_kbps),
      base, lo, closest());
}

double complexity_ratio(std::span<const double> times_codec,
                        std::span<const double> times_benchmark) {
  if (times_codec.empty() || times_codec.size() != times_benchmark.size()) {
    throw DataError(fmt::format("complexity ratio needs equal non-empty lists ({} vs {})",
                                times_codec.size(), times_benchmark.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < times_codec.size(); ++i) {
    if (!(times_benchmark[i] > 0.0)) {
      throw DataError(fmt::format("benchmark time at rate point {} is not positive", i));
    }
    sum += times_codec[i] / times_benchmark[i];
  }
  return sum / static_cast<double>(times_codec.size());
}

std::string format_complexity_ratio(double ratio) { return fmt::format("{:.2f}×", ratio); }

}  // namespace rqbench
