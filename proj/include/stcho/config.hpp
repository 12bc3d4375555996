#ifndef STCHO_CONFIG_HPP
#define STCHO_CONFIG_HPP

// Experiment configuration: a text file of `dotted.key = value` lines.
// `#` starts a comment, lists are comma separated, every key is optional.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stcho/error.hpp"
#include "stcho/stacks.hpp"
#include "stcho/trial.hpp"

namespace stcho {

enum class SweepAxis { slice_rate, ssr, l_max, contrast_ratio };

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "slice_rate") return SweepAxis::slice_rate;
  if (s == "ssr") return SweepAxis::ssr;
  if (s == "l_max") return SweepAxis::l_max;
  if (s == "contrast_ratio") return SweepAxis::contrast_ratio;
  throw InputError("unknown sweep axis '" + std::string(s) + "'");
}

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::slice_rate: return "slice_rate";
    case SweepAxis::ssr: return "ssr";
    case SweepAxis::l_max: return "l_max";
    case SweepAxis::contrast_ratio: return "contrast_ratio";
  }
  return "slice_rate";
}

inline std::string to_string(TextureKind k) { return k == TextureKind::power_law ? "power_law" : "white"; }

inline std::string to_string(TemporalResponse r) { return r == TemporalResponse::barten ? "barten" : "unity"; }

inline TemporalResponse parse_temporal_response(std::string_view s) {
  if (s == "barten") return TemporalResponse::barten;
  if (s == "unity") return TemporalResponse::unity;
  throw InputError("unknown temporal response '" + std::string(s) + "'");
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::slice_rate;
  std::vector<double> values = {1, 5, 10, 15, 20, 25, 30, 35, 40, 45};
  bool parallel = false;

  void validate() const {
    if (values.empty()) throw InputError("sweep: no values");
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (!(values[i] > values[i - 1])) throw InputError("sweep: values must be strictly increasing");
    }
  }
};

struct ExperimentConfig {
  GeneratorConfig generator{};
  PipelineConfig pipeline{};
  std::size_t n_readers = 4;
  std::uint64_t trial_seed = 1;
  std::string dataset;  // manifest path; empty = generate in memory
  SweepSpec sweep{};
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InputError("config: '" + std::string(key) + "' expects a number, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(std::string_view key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("config: '" + std::string(key) + "' expects true/false, got '" + v + "'");
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

}  // namespace detail

/// Splits the text into key/value pairs; rejects malformed and duplicate lines.
inline std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw InputError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

/// Applies key/value pairs on top of `cfg`. Presets (generator.preset,
/// generator.lesion) are applied before the fields they seed, whatever the
/// order in the file.
inline ExperimentConfig apply_config(std::map<std::string, std::string> kv, ExperimentConfig cfg = {}) {
  auto take = [&](const char* key, auto&& fn) {
    if (auto it = kv.find(key); it != kv.end()) {
      fn(it->first, it->second);
      kv.erase(it);
    }
  };
  auto dbl = [](double& dst) { return [&dst](std::string_view k, const std::string& v) { dst = detail::parse_number<double>(k, v); }; };
  auto sz = [](std::size_t& dst) { return [&dst](std::string_view k, const std::string& v) { dst = detail::parse_number<std::size_t>(k, v); }; };
  auto u64 = [](std::uint64_t& dst) { return [&dst](std::string_view k, const std::string& v) { dst = detail::parse_number<std::uint64_t>(k, v); }; };
  auto i32 = [](int& dst) { return [&dst](std::string_view k, const std::string& v) { dst = detail::parse_number<int>(k, v); }; };

  GeneratorConfig& g = cfg.generator;
  take("generator.preset", [&](std::string_view, const std::string& v) {
    if (v == "a") {
      g.geometry = StackGeometry::dataset_a();
    } else if (v == "b") {
      g.geometry = StackGeometry::dataset_b();
    } else {
      throw InputError("config: generator.preset must be 'a' or 'b'");
    }
  });
  take("generator.lesion", [&](std::string_view, const std::string& v) { g.lesion = LesionSpec::defaults(parse_lesion_kind(v)); });
  take("generator.width", sz(g.geometry.width));
  take("generator.height", sz(g.geometry.height));
  take("generator.n_slices", sz(g.geometry.n_slices));
  take("generator.bit_depth", i32(g.geometry.bit_depth));
  take("generator.slice_sep_mm", dbl(g.geometry.slice_sep_mm));
  take("generator.texture", [&](std::string_view, const std::string& v) { g.texture.kind = parse_texture_kind(v); });
  take("generator.beta", dbl(g.texture.beta));
  take("generator.lesion_diameter", dbl(g.lesion.diameter_px));
  take("generator.lesion_amplitude", dbl(g.lesion.amplitude));
  take("generator.lesion_sigma_z", dbl(g.lesion.sigma_z));
  take("generator.n_pairs", sz(g.n_pairs));
  take("generator.seed", u64(g.seed));

  PipelineConfig& p = cfg.pipeline;
  take("display.l_min", dbl(p.display.l_min));
  take("display.l_max", dbl(p.display.l_max));
  take("display.bit_depth", i32(p.display.bit_depth));
  take("display.mapping", [&](std::string_view, const std::string& v) { p.display.mapping = parse_luminance_mapping(v); });

  take("percept.ssr", dbl(p.ssr));
  take("percept.slice_rate", dbl(p.slice_rate));
  take("percept.taper", [&](std::string_view k, const std::string& v) { p.percept.taper = detail::parse_bool(k, v); });
  take("percept.foveal", [&](std::string_view, const std::string& v) { p.percept.foveal = parse_foveal_mode(v); });
  take("percept.temporal", [&](std::string_view, const std::string& v) { p.percept.temporal = parse_temporal_response(v); });
  CsfConstants& c = p.csf;
  take("percept.csf.k", dbl(c.k));
  take("percept.csf.eta", dbl(c.eta));
  take("percept.csf.phi0", dbl(c.phi0));
  take("percept.csf.x_max", dbl(c.x_max));
  take("percept.csf.n_max", dbl(c.n_max));
  take("percept.csf.t_int", dbl(c.t_int));
  take("percept.csf.p", dbl(c.p));
  take("percept.csf.sigma0", dbl(c.sigma0));
  take("percept.csf.c_ab", dbl(c.c_ab));
  take("percept.csf.u0_lat", dbl(c.u0_lat));
  take("percept.csf.n1", i32(c.n1));
  take("percept.csf.n2", i32(c.n2));
  take("percept.csf.tau10", dbl(c.tau10));
  take("percept.csf.tau20", dbl(c.tau20));

  ObserverConfig& o = p.observer;
  take("observer.n_channels", sz(o.n_channels));
  take("observer.spread", dbl(o.spread));
  take("observer.combiner", [&](std::string_view, const std::string& v) { o.combiner = parse_combiner(v); });
  take("observer.slice_range", [&](std::string_view k, const std::string& v) {
    o.slice_range.clear();
    if (v == "auto" || v.empty()) return;
    for (const std::string& item : detail::split_list(v)) o.slice_range.push_back(detail::parse_number<int>(k, item));
  });

  take("trial.n_readers", sz(cfg.n_readers));
  take("trial.seed", u64(cfg.trial_seed));
  take("trial.threads", [&](std::string_view k, const std::string& v) { p.threads = detail::parse_number<unsigned>(k, v); });
  take("trial.dataset", [&](std::string_view, const std::string& v) { cfg.dataset = v; });

  take("sweep.axis", [&](std::string_view, const std::string& v) { cfg.sweep.axis = parse_sweep_axis(v); });
  take("sweep.values", [&](std::string_view k, const std::string& v) {
    cfg.sweep.values.clear();
    for (const std::string& item : detail::split_list(v)) cfg.sweep.values.push_back(detail::parse_number<double>(k, item));
  });
  take("sweep.parallel", [&](std::string_view k, const std::string& v) { cfg.sweep.parallel = detail::parse_bool(k, v); });

  if (!kv.empty()) throw InputError("config: unknown key '" + kv.begin()->first + "'");
  return cfg;
}

inline ExperimentConfig parse_config(std::string_view text) { return apply_config(parse_key_values(text)); }

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const InputError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

/// Every effective setting, one `key = value` line each, in a fixed order.
/// Parsing the output reproduces the configuration.
inline std::string canonical_text(const ExperimentConfig& cfg) {
  using detail::fmt_double;
  const GeneratorConfig& g = cfg.generator;
  const PipelineConfig& p = cfg.pipeline;
  const CsfConstants& c = p.csf;
  const ObserverConfig& o = p.observer;
  std::vector<std::pair<std::string, std::string>> lines = {
      {"generator.width", std::to_string(g.geometry.width)},
      {"generator.height", std::to_string(g.geometry.height)},
      {"generator.n_slices", std::to_string(g.geometry.n_slices)},
      {"generator.bit_depth", std::to_string(g.geometry.bit_depth)},
      {"generator.slice_sep_mm", fmt_double(g.geometry.slice_sep_mm)},
      {"generator.texture", to_string(g.texture.kind)},
      {"generator.beta", fmt_double(g.texture.beta)},
      {"generator.lesion", to_string(g.lesion.kind)},
      {"generator.lesion_diameter", fmt_double(g.lesion.diameter_px)},
      {"generator.lesion_amplitude", fmt_double(g.lesion.amplitude)},
      {"generator.lesion_sigma_z", fmt_double(g.lesion.sigma_z)},
      {"generator.n_pairs", std::to_string(g.n_pairs)},
      {"generator.seed", std::to_string(g.seed)},
      {"display.l_min", fmt_double(p.display.l_min)},
      {"display.l_max", fmt_double(p.display.l_max)},
      {"display.bit_depth", std::to_string(p.display.bit_depth)},
      {"display.mapping", to_string(p.display.mapping)},
      {"percept.ssr", fmt_double(p.ssr)},
      {"percept.slice_rate", fmt_double(p.slice_rate)},
      {"percept.taper", p.percept.taper ? "true" : "false"},
      {"percept.foveal", to_string(p.percept.foveal)},
      {"percept.temporal", to_string(p.percept.temporal)},
      {"percept.csf.k", fmt_double(c.k)},
      {"percept.csf.eta", fmt_double(c.eta)},
      {"percept.csf.phi0", fmt_double(c.phi0)},
      {"percept.csf.x_max", fmt_double(c.x_max)},
      {"percept.csf.n_max", fmt_double(c.n_max)},
      {"percept.csf.t_int", fmt_double(c.t_int)},
      {"percept.csf.p", fmt_double(c.p)},
      {"percept.csf.sigma0", fmt_double(c.sigma0)},
      {"percept.csf.c_ab", fmt_double(c.c_ab)},
      {"percept.csf.u0_lat", fmt_double(c.u0_lat)},
      {"percept.csf.n1", std::to_string(c.n1)},
      {"percept.csf.n2", std::to_string(c.n2)},
      {"percept.csf.tau10", fmt_double(c.tau10)},
      {"percept.csf.tau20", fmt_double(c.tau20)},
      {"observer.n_channels", std::to_string(o.n_channels)},
      {"observer.spread", fmt_double(o.spread)},
      {"observer.combiner", to_string(o.combiner)},
      {"observer.slice_range", o.slice_range.empty() ? "auto" : detail::join(o.slice_range)},
      {"trial.n_readers", std::to_string(cfg.n_readers)},
      {"trial.seed", std::to_string(cfg.trial_seed)},
      {"trial.threads", std::to_string(p.threads)},
      {"trial.dataset", cfg.dataset},
      {"sweep.axis", to_string(cfg.sweep.axis)},
      {"sweep.values", detail::join(cfg.sweep.values)},
      {"sweep.parallel", cfg.sweep.parallel ? "true" : "false"},
  };
  std::string out;
  for (const auto& [k, v] : lines) out += k + " = " + v + "\n";
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Hash of the settings that influence results (thread count and sweep
/// parallelism excluded), as 16 hex digits.
inline std::string config_hash(ExperimentConfig cfg) {
  cfg.pipeline.threads = 0;
  cfg.sweep.parallel = false;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_text(cfg))));
  return buf;
}

}  // namespace stcho

#endif  // STCHO_CONFIG_HPP
