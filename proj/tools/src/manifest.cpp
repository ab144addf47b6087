#include "rqbench/cli/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "rqbench/cli/toml.hpp"
#include "rqbench/csv.hpp"
#include "rqbench/error.hpp"
#include "rqbench/toy_codec.hpp"

namespace rqbench::cli {

namespace {

// Typed access to one table; every key must be consumed exactly once so
// misspelled keys surface as errors instead of silently defaulting.
class Fields {
 public:
  Fields(const TomlTable& table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

  std::string field(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : fmt::format("{}.{}", prefix_, key);
  }

  const TomlValue* find(std::string_view key) {
    auto it = table_.find(std::string(key));
    if (it == table_.end()) return nullptr;
    used_.insert(it->first);
    return &it->second;
  }

  std::optional<std::string> string(std::string_view key) {
    const TomlValue* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) wrong_type(key, *v, "string");
    return std::get<std::string>(v->data);
  }
  std::string required_string(std::string_view key) {
    auto s = string(key);
    if (!s) throw ManifestError(field(key), "required");
    if (s->empty()) throw ManifestError(field(key), "must not be empty");
    return *s;
  }
  std::optional<std::int64_t> integer(std::string_view key) {
    const TomlValue* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_integer()) wrong_type(key, *v, "integer");
    return std::get<std::int64_t>(v->data);
  }
  std::optional<double> number(std::string_view key) {
    const TomlValue* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) wrong_type(key, *v, "number");
    return as_double(*v);
  }
  std::optional<std::vector<TomlValue>> array(std::string_view key) {
    const TomlValue* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) wrong_type(key, *v, "array");
    return std::get<TomlArray>(v->data);
  }
  std::optional<std::vector<std::string>> string_array(std::string_view key) {
    auto a = array(key);
    if (!a) return std::nullopt;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < a->size(); ++i) {
      if (!(*a)[i].is_string()) wrong_type(fmt::format("{}[{}]", key, i), (*a)[i], "string");
      out.push_back(std::get<std::string>((*a)[i].data));
    }
    return out;
  }
  std::optional<std::vector<double>> number_array(std::string_view key) {
    auto a = array(key);
    if (!a) return std::nullopt;
    std::vector<double> out;
    for (std::size_t i = 0; i < a->size(); ++i) {
      if (!(*a)[i].is_number()) wrong_type(fmt::format("{}[{}]", key, i), (*a)[i], "number");
      out.push_back(as_double((*a)[i]));
    }
    return out;
  }
  std::optional<Rational> rational(std::string_view key) {
    const TomlValue* v = find(key);
    if (!v) return std::nullopt;
    try {
      if (v->is_integer()) return Rational{std::get<std::int64_t>(v->data), 1};
      if (v->is_string()) return Rational::parse(std::get<std::string>(v->data));
    } catch (const Error& e) {
      throw ManifestError(field(key), e.what());
    }
    wrong_type(key, *v, "integer or string");
  }
  Dimensions dimensions(std::string_view key, const std::string& text) {
    try {
      return parse_dimensions(text);
    } catch (const Error& e) {
      throw ManifestError(field(key), e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : table_) {
      if (!used_.contains(key)) throw ManifestError(field(key), "unknown key");
    }
  }

 private:
  static double as_double(const TomlValue& v) {
    return v.is_integer() ? static_cast<double>(std::get<std::int64_t>(v.data))
                          : std::get<double>(v.data);
  }
  [[noreturn]] void wrong_type(std::string_view key, const TomlValue& v, const char* expected) const {
    throw ManifestError(field(key), fmt::format("expected {}, found {} (line {})", expected,
                                                v.type_name(), v.line));
  }

  const TomlTable& table_;
  std::string prefix_;
  std::set<std::string> used_;
};

SyntheticPattern parse_pattern(const std::string& field, const std::string& text) {
  if (text == "panning") return SyntheticPattern::kPanningTexture;
  if (text == "discs") return SyntheticPattern::kMovingDiscs;
  if (text == "zoneplate") return SyntheticPattern::kZonePlate;
  throw ManifestError(field, fmt::format("unknown pattern '{}' (panning, discs, zoneplate)", text));
}

int checked_int(const std::string& field, std::int64_t v, std::int64_t lo, std::int64_t hi) {
  if (v < lo || v > hi) throw ManifestError(field, fmt::format("{} outside [{}, {}]", v, lo, hi));
  return static_cast<int>(v);
}

SequenceEntry parse_sequence(Fields& f) {
  SequenceEntry s;
  s.name = f.required_string("name");
  const auto path = f.string("path");
  const auto synthetic = f.string("synthetic");
  if (path.has_value() == synthetic.has_value()) {
    throw ManifestError(f.field("path"), "exactly one of 'path' or 'synthetic' is required");
  }
  if (path) {
    s.path = *path;
    try {
      const auto g = parse_sequence_filename(std::filesystem::path(*path).filename().string());
      s.dims = g.dims;
      s.fps = g.fps;
      s.bit_depth = g.bit_depth;
    } catch (const DataError&) {
      // Geometry must then come from explicit keys.
    }
  } else {
    s.synthetic = parse_pattern(f.field("synthetic"), *synthetic);
    s.dims = {320, 180};
    s.frames = 60;
  }
  if (auto w = f.integer("width")) s.dims.width = checked_int(f.field("width"), *w, 2, 16384);
  if (auto h = f.integer("height")) s.dims.height = checked_int(f.field("height"), *h, 2, 16384);
  if (auto d = f.integer("bit_depth")) s.bit_depth = checked_int(f.field("bit_depth"), *d, 8, 10);
  if (auto r = f.rational("fps")) s.fps = *r;
  if (auto n = f.integer("frames")) s.frames = checked_int(f.field("frames"), *n, 1, 1 << 20);
  if (auto seed = f.integer("seed")) s.seed = static_cast<std::uint64_t>(*seed);
  if (s.dims.width == 0 || s.dims.height == 0) {
    throw ManifestError(f.field("width"),
                        "geometry unknown: name the file <base>_<W>x<H>_<fps>fps_<depth>bit.yuv "
                        "or set width/height");
  }
  if (s.dims.width % 2 || s.dims.height % 2) throw ManifestError(f.field("width"), "dimensions must be even");
  if (s.bit_depth != 8 && s.bit_depth != 10) throw ManifestError(f.field("bit_depth"), "must be 8 or 10");
  if (s.fps.num <= 0 || s.fps.den <= 0) throw ManifestError(f.field("fps"), "must be positive");
  return s;
}

EncoderAdapter parse_codec(Fields& f) {
  EncoderAdapter c;
  c.codec_id = f.required_string("id");
  if (auto b = f.string("builtin")) {
    if (*b != "toy") throw ManifestError(f.field("builtin"), fmt::format("unknown builtin codec '{}'", *b));
    c.builtin_toy = true;
    c.qp_range = {toy::kMinQp, toy::kMaxQp};
  }
  if (auto e = f.string("encode")) {
    if (c.builtin_toy) throw ManifestError(f.field("encode"), "not allowed with builtin codecs");
    c.encode_template = *e;
  } else if (!c.builtin_toy) {
    throw ManifestError(f.field("encode"), "required unless builtin is set");
  }
  if (auto v = f.integer("qp_min")) c.qp_range.min = checked_int(f.field("qp_min"), *v, -64, 255);
  if (auto v = f.integer("qp_max")) c.qp_range.max = checked_int(f.field("qp_max"), *v, -64, 255);
  if (auto a = f.string("args")) c.fixed_args = *a;
  if (auto fr = f.string("fractional")) {
    if (fr->find("{frame}") == std::string::npos) {
      throw ManifestError(f.field("fractional"), "template must contain {frame}");
    }
    c.fractional_template = *fr;
  }
  try {
    c.validate();
  } catch (const ManifestError& e) {
    const std::string reason = std::string(e.what()).substr(e.field().size() + 2);
    const auto dot = e.field().rfind('.');
    throw ManifestError(f.field(e.field().substr(dot + 1)), reason);
  }
  return c;
}

ResolutionGroup parse_group(Fields& f) {
  ResolutionGroup g;
  g.name = f.required_string("name");
  g.reference = f.dimensions("reference", f.required_string("reference"));
  if (auto ladder = f.string_array("ladder")) {
    for (std::size_t i = 0; i < ladder->size(); ++i) {
      g.ladder.push_back(f.dimensions(fmt::format("ladder[{}]", i), (*ladder)[i]));
    }
  } else {
    g.ladder = {g.reference};
  }
  if (g.ladder.empty()) throw ManifestError(f.field("ladder"), "must not be empty");
  if (auto qps = f.array("qps")) {
    for (std::size_t i = 0; i < qps->size(); ++i) {
      const auto& v = (*qps)[i];
      if (!v.is_integer()) throw ManifestError(f.field(fmt::format("qps[{}]", i)), "expected integer");
      g.qps.push_back(checked_int(f.field(fmt::format("qps[{}]", i)), std::get<std::int64_t>(v.data), -64, 255));
    }
  }
  return g;
}

TargetEntry parse_target(Fields& f) {
  TargetEntry t;
  t.sequence = f.required_string("sequence");
  t.group = f.required_string("group");
  auto kbps = f.number_array("kbps");
  if (!kbps || kbps->empty()) throw ManifestError(f.field("kbps"), "required, at least one target");
  t.kbps = *kbps;
  return t;
}

ExternalMetricTool parse_external(Fields& f) {
  ExternalMetricTool t;
  t.metric_id = f.required_string("id");
  t.command_template = f.required_string("command");
  t.score_regex = f.required_string("score_regex");
  t.version_regex = f.string("version_regex").value_or("");
  return t;
}

std::string format_number(double v) { return fmt::format("{}", v); }

}  // namespace

bool is_native_metric(std::string_view id) {
  return id == "psnr" || id == "psnr_yuv611" || id == "ssim" || id == "msssim";
}

Dimensions parse_dimensions(std::string_view text) {
  const auto x = text.find('x');
  Dimensions d;
  auto parse = [&](std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && out > 0;
  };
  if (x == std::string_view::npos || !parse(text.substr(0, x), d.width) ||
      !parse(text.substr(x + 1), d.height)) {
    throw DataError(fmt::format("invalid dimensions '{}', expected WxH", text));
  }
  if (d.width % 2 || d.height % 2) {
    throw DataError(fmt::format("dimensions '{}' must be even", text));
  }
  return d;
}

std::string_view pattern_name(SyntheticPattern pattern) {
  switch (pattern) {
    case SyntheticPattern::kPanningTexture: return "panning";
    case SyntheticPattern::kMovingDiscs: return "discs";
    case SyntheticPattern::kZonePlate: return "zoneplate";
  }
  return "panning";
}

std::filesystem::path RunManifest::resolved_output_dir() const { return resolve(output_dir); }

std::filesystem::path RunManifest::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

const SequenceEntry& RunManifest::sequence(std::string_view name) const {
  for (const auto& s : sequences) {
    if (s.name == name) return s;
  }
  throw ManifestError("sequence", fmt::format("no sequence named '{}'", name));
}

const ResolutionGroup& RunManifest::group(std::string_view name) const {
  for (const auto& g : groups) {
    if (g.name == name) return g;
  }
  throw ManifestError("group", fmt::format("no group named '{}'", name));
}

const EncoderAdapter& RunManifest::codec(std::string_view id) const {
  for (const auto& c : codecs) {
    if (c.codec_id == id) return c;
  }
  throw ManifestError("codec", fmt::format("no codec with id '{}'", id));
}

const ExternalMetricTool* RunManifest::external_metric(std::string_view id) const {
  for (const auto& t : external_metrics) {
    if (t.metric_id == id) return &t;
  }
  return nullptr;
}

void validate_manifest(const RunManifest& m) {
  if (m.tolerance <= 0.0 || m.tolerance >= 1.0) throw ManifestError("tolerance", "must be in (0, 1)");
  if (m.jobs < 1) throw ManifestError("jobs", "must be at least 1");
  if (m.metrics.empty()) throw ManifestError("metrics", "must not be empty");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < m.metrics.size(); ++i) {
    const auto& id = m.metrics[i];
    if (!seen.insert(id).second) throw ManifestError(fmt::format("metrics[{}]", i), fmt::format("duplicate metric '{}'", id));
    if (!is_native_metric(id) && !m.external_metric(id)) {
      throw ManifestError(fmt::format("metrics[{}]", i),
                          fmt::format("'{}' is neither native nor an [[external_metric]]", id));
    }
  }
  if (!seen.contains(m.selection_metric)) {
    throw ManifestError("selection_metric",
                        fmt::format("'{}' is not listed in metrics", m.selection_metric));
  }
  auto check_unique = [](const auto& items, const char* table, auto name_of) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!names.insert(name_of(items[i])).second) {
        throw ManifestError(fmt::format("{}[{}]", table, i),
                            fmt::format("duplicate name '{}'", name_of(items[i])));
      }
    }
  };
  check_unique(m.sequences, "sequence", [](const SequenceEntry& s) { return s.name; });
  check_unique(m.codecs, "codec", [](const EncoderAdapter& c) { return c.codec_id; });
  check_unique(m.groups, "group", [](const ResolutionGroup& g) { return g.name; });
  check_unique(m.external_metrics, "external_metric",
               [](const ExternalMetricTool& t) { return t.metric_id; });
  for (std::size_t i = 0; i < m.groups.size(); ++i) {
    const auto& g = m.groups[i];
    for (std::size_t k = 0; k < g.ladder.size(); ++k) {
      if (g.ladder[k].width > g.reference.width || g.ladder[k].height > g.reference.height) {
        throw ManifestError(fmt::format("group[{}].ladder[{}]", i, k),
                            fmt::format("{} exceeds reference {}", to_string(g.ladder[k]),
                                        to_string(g.reference)));
      }
    }
  }
  for (std::size_t i = 0; i < m.targets.size(); ++i) {
    const auto& t = m.targets[i];
    const std::string field = fmt::format("target[{}]", i);
    if (std::none_of(m.sequences.begin(), m.sequences.end(),
                     [&](const SequenceEntry& s) { return s.name == t.sequence; })) {
      throw ManifestError(field + ".sequence", fmt::format("unknown sequence '{}'", t.sequence));
    }
    if (std::none_of(m.groups.begin(), m.groups.end(),
                     [&](const ResolutionGroup& g) { return g.name == t.group; })) {
      throw ManifestError(field + ".group", fmt::format("unknown group '{}'", t.group));
    }
    for (std::size_t k = 0; k < t.kbps.size(); ++k) {
      if (!(t.kbps[k] > 0.0) || !std::isfinite(t.kbps[k])) {
        throw ManifestError(fmt::format("{}.kbps[{}]", field, k), "target must be positive");
      }
    }
  }
}

RunManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  const TomlDocument doc = parse_toml(text);
  RunManifest m;
  m.base_dir = base_dir;
  Fields root(doc.root, "");
  if (auto v = root.string("output_dir")) m.output_dir = *v;
  if (auto v = root.string("selection_metric")) m.selection_metric = *v;
  if (auto v = root.number("tolerance")) m.tolerance = *v;
  if (auto v = root.string_array("metrics")) m.metrics = *v;
  if (auto v = root.integer("jobs")) m.jobs = checked_int("jobs", *v, 1, 1024);
  root.reject_unknown();

  auto each = [&](const char* name, auto parse) {
    auto it = doc.arrays.find(name);
    if (it == doc.arrays.end()) return;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      Fields f(it->second[i], fmt::format("{}[{}]", name, i));
      parse(f);
      f.reject_unknown();
    }
  };
  each("sequence", [&](Fields& f) { m.sequences.push_back(parse_sequence(f)); });
  each("codec", [&](Fields& f) { m.codecs.push_back(parse_codec(f)); });
  each("group", [&](Fields& f) { m.groups.push_back(parse_group(f)); });
  each("target", [&](Fields& f) { m.targets.push_back(parse_target(f)); });
  each("external_metric", [&](Fields& f) { m.external_metrics.push_back(parse_external(f)); });
  for (const auto& [name, tables] : doc.arrays) {
    if (name != "sequence" && name != "codec" && name != "group" && name != "target" &&
        name != "external_metric") {
      throw ManifestError(fmt::format("[[{}]]", name), "unknown table");
    }
  }
  validate_manifest(m);
  return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ManifestError("manifest", e.what());
  }
  return parse_manifest(text, path.parent_path());
}

std::string format_kbps_list(const std::vector<double>& kbps) {
  std::string out;
  for (std::size_t i = 0; i < kbps.size(); ++i) out += (i ? "/" : "") + format_number(kbps[i]);
  return out;
}

std::string format_manifest(const RunManifest& m) {
  std::string out;
  auto quoted_list = [](const auto& items, auto render) {
    std::string s = "[";
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + render(items[i]);
    return s + "]";
  };
  out += fmt::format("output_dir = {}\n", toml_quote(m.output_dir));
  out += fmt::format("selection_metric = {}\n", toml_quote(m.selection_metric));
  out += fmt::format("tolerance = {}\n", format_number(m.tolerance));
  out += fmt::format("metrics = {}\n", quoted_list(m.metrics, [](const std::string& s) { return toml_quote(s); }));
  out += fmt::format("jobs = {}\n", m.jobs);
  for (const auto& s : m.sequences) {
    out += "\n[[sequence]]\n";
    out += fmt::format("name = {}\n", toml_quote(s.name));
    if (s.synthetic) {
      out += fmt::format("synthetic = {}\n", toml_quote(pattern_name(*s.synthetic)));
      out += fmt::format("seed = {}\n", s.seed);
    } else {
      out += fmt::format("path = {}\n", toml_quote(s.path));
    }
    out += fmt::format("width = {}\nheight = {}\nbit_depth = {}\nfps = {}\n", s.dims.width,
                       s.dims.height, s.bit_depth, toml_quote(to_string(s.fps)));
    if (s.frames) out += fmt::format("frames = {}\n", *s.frames);
  }
  for (const auto& c : m.codecs) {
    out += "\n[[codec]]\n";
    out += fmt::format("id = {}\n", toml_quote(c.codec_id));
    if (c.builtin_toy) {
      out += "builtin = \"toy\"\n";
    } else {
      out += fmt::format("encode = {}\n", toml_quote(c.encode_template));
    }
    out += fmt::format("qp_min = {}\nqp_max = {}\n", c.qp_range.min, c.qp_range.max);
    if (!c.fixed_args.empty()) out += fmt::format("args = {}\n", toml_quote(c.fixed_args));
    if (!c.fractional_template.empty()) out += fmt::format("fractional = {}\n", toml_quote(c.fractional_template));
  }
  for (const auto& g : m.groups) {
    out += "\n[[group]]\n";
    out += fmt::format("name = {}\nreference = {}\n", toml_quote(g.name), toml_quote(to_string(g.reference)));
    out += fmt::format("ladder = {}\n", quoted_list(g.ladder, [](Dimensions d) { return toml_quote(to_string(d)); }));
    if (!g.qps.empty()) out += fmt::format("qps = {}\n", quoted_list(g.qps, [](int q) { return std::to_string(q); }));
  }
  for (const auto& t : m.targets) {
    out += "\n[[target]]\n";
    out += fmt::format("sequence = {}\ngroup = {}\n", toml_quote(t.sequence), toml_quote(t.group));
    out += fmt::format("kbps = {}\n", quoted_list(t.kbps, format_number));
  }
  for (const auto& e : m.external_metrics) {
    out += "\n[[external_metric]]\n";
    out += fmt::format("id = {}\ncommand = {}\nscore_regex = {}\n", toml_quote(e.metric_id),
                       toml_quote(e.command_template), toml_quote(e.score_regex));
    if (!e.version_regex.empty()) out += fmt::format("version_regex = {}\n", toml_quote(e.version_regex));
  }
  return out;
}

VideoSequence load_sequence(const RunManifest& manifest, const SequenceEntry& entry) {
  if (entry.synthetic) {
    SyntheticSpec spec;
    spec.pattern = *entry.synthetic;
    spec.dims = entry.dims;
    spec.frames = entry.frames.value_or(60);
    spec.bit_depth = entry.bit_depth;
    spec.fps = entry.fps;
    spec.seed = entry.seed;
    spec.name = entry.name;
    return make_synthetic_sequence(spec);
  }
  VideoSequence seq = read_raw_video(manifest.resolve(entry.path), entry.dims, entry.bit_depth, entry.fps);
  std::vector<VideoFrame> frames = seq.frames();
  if (entry.frames && static_cast<std::size_t>(*entry.frames) < frames.size()) {
    frames.erase(frames.begin() + *entry.frames, frames.end());
  }
  return VideoSequence(std::move(frames), seq.fps(), entry.name);
}

}  // namespace rqbench::cli
