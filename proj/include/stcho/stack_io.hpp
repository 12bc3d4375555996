#ifndef STCHO_STACK_IO_HPP
#define STCHO_STACK_IO_HPP

// On-disk stack format: `<name>.json` header next to `<name>.raw` payload.
// The payload holds unsigned 16-bit little-endian codes, row-major within a
// slice, slices consecutive, with no padding. The dataset manifest is a JSON
// file listing stack base paths relative to the manifest directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stcho/error.hpp"
#include "stcho/stacks.hpp"

namespace stcho {

namespace fs = std::filesystem;

inline constexpr const char* kStackFormat = "stcho-stack";
inline constexpr const char* kDatasetFormat = "stcho-dataset";

inline fs::path header_path(const fs::path& base) {
  fs::path p = base;
  p += ".json";
  return p;
}

inline fs::path payload_path(const fs::path& base) {
  fs::path p = base;
  p += ".raw";
  return p;
}

namespace detail {

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + p.string() + "' failed");
}

inline nlohmann::json parse_json(const std::string& text, const fs::path& p) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + p.string() + "': malformed JSON: " + e.what(), e.byte);
  }
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const fs::path& p) {
  if (!j.contains(key)) throw FormatError("'" + p.string() + "': missing field '" + key + "'", 0);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + p.string() + "': bad field '" + key + "': " + e.what(), 0);
  }
}

}  // namespace detail

inline nlohmann::json stack_header(const ImageStack& s) {
  const StackGeometry& g = s.geometry;
  return {{"format", kStackFormat},
          {"version", 1},
          {"width", g.width},
          {"height", g.height},
          {"n_slices", g.n_slices},
          {"bit_depth", g.bit_depth},
          {"slice_sep_mm", g.slice_sep_mm},
          {"label", to_string(s.label)},
          {"lesion_slices", s.lesion_slices},
          {"stack_id", s.stack_id},
          {"source_id", s.source_id},
          {"seed", s.seed}};
}

inline void write_stack(const ImageStack& s, const fs::path& base) {
  if (s.codes.width() != s.geometry.width || s.codes.height() != s.geometry.height ||
      s.codes.depth() != s.geometry.n_slices) {
    throw InputError("write_stack: codes do not match geometry");
  }
  std::string payload;
  payload.resize(2 * s.codes.size());
  for (std::size_t i = 0; i < s.codes.size(); ++i) {
    const std::uint16_t v = s.codes.values()[i];
    payload[2 * i] = static_cast<char>(v & 0xff);
    payload[2 * i + 1] = static_cast<char>(v >> 8);
  }
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  detail::write_file(header_path(base), stack_header(s).dump(2) + "\n");
  detail::write_file(payload_path(base), payload);
}

inline ImageStack read_stack(const fs::path& base) {
  const fs::path hp = header_path(base);
  const fs::path pp = payload_path(base);
  const nlohmann::json h = detail::parse_json(detail::read_file(hp), hp);
  if (!h.is_object() || detail::field<std::string>(h, "format", hp) != kStackFormat) {
    throw FormatError("'" + hp.string() + "': not a stack header", 0);
  }
  ImageStack s;
  StackGeometry& g = s.geometry;
  g.width = detail::field<std::size_t>(h, "width", hp);
  g.height = detail::field<std::size_t>(h, "height", hp);
  g.n_slices = detail::field<std::size_t>(h, "n_slices", hp);
  g.bit_depth = detail::field<int>(h, "bit_depth", hp);
  g.slice_sep_mm = detail::field<double>(h, "slice_sep_mm", hp);
  try {
    g.validate();
    s.label = parse_label(detail::field<std::string>(h, "label", hp));
  } catch (const InputError& e) {
    throw FormatError("'" + hp.string() + "': " + e.what(), 0);
  }
  s.lesion_slices = detail::field<std::vector<int>>(h, "lesion_slices", hp);
  s.stack_id = detail::field<std::string>(h, "stack_id", hp);
  s.source_id = detail::field<std::string>(h, "source_id", hp);
  s.seed = detail::field<std::uint64_t>(h, "seed", hp);

  const std::string payload = detail::read_file(pp);
  const std::size_t n = g.width * g.height * g.n_slices;
  if (payload.size() != 2 * n) {
    throw FormatError("'" + pp.string() + "': payload is " + std::to_string(payload.size()) +
                          " bytes, expected " + std::to_string(2 * n),
                      std::min<std::size_t>(payload.size(), 2 * n));
  }
  s.codes = Volume<std::uint16_t>(g.width, g.height, g.n_slices);
  const std::uint32_t max_code = g.max_code();
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = static_cast<unsigned char>(payload[2 * i]);
    const auto hi = static_cast<unsigned char>(payload[2 * i + 1]);
    const std::uint16_t v = static_cast<std::uint16_t>(lo | (hi << 8));
    if (v > max_code) {
      throw FormatError("'" + pp.string() + "': code " + std::to_string(v) + " exceeds " +
                            std::to_string(g.bit_depth) + "-bit range",
                        2 * i);
    }
    s.codes.values()[i] = v;
  }
  return s;
}

/// Writes every stack under `dir` and a manifest `dir/manifest.json`.
/// `generator` is stored verbatim as provenance.
inline fs::path write_dataset(const Dataset& ds, const fs::path& dir,
                              const nlohmann::json& generator = nlohmann::json::object()) {
  fs::create_directories(dir / "stacks");
  nlohmann::json entries = nlohmann::json::array();
  for (const ImageStack& s : ds.stacks) {
    const fs::path rel = fs::path("stacks") / s.stack_id;
    write_stack(s, dir / rel);
    entries.push_back({{"id", s.stack_id},
                       {"path", rel.generic_string()},
                       {"label", to_string(s.label)},
                       {"source", s.source_id}});
  }
  const nlohmann::json manifest = {
      {"format", kDatasetFormat}, {"version", 1}, {"generator", generator}, {"stacks", entries}};
  const fs::path mp = dir / "manifest.json";
  detail::write_file(mp, manifest.dump(2) + "\n");
  return mp;
}

inline Dataset read_dataset(const fs::path& manifest_path) {
  const nlohmann::json m = detail::parse_json(detail::read_file(manifest_path), manifest_path);
  if (!m.is_object() || detail::field<std::string>(m, "format", manifest_path) != kDatasetFormat) {
    throw FormatError("'" + manifest_path.string() + "': not a dataset manifest", 0);
  }
  const fs::path root = manifest_path.parent_path();
  Dataset ds;
  for (const auto& e : detail::field<nlohmann::json>(m, "stacks", manifest_path)) {
    ImageStack s = read_stack(root / detail::field<std::string>(e, "path", manifest_path));
    if (s.stack_id != detail::field<std::string>(e, "id", manifest_path)) {
      throw FormatError("'" + manifest_path.string() + "': id mismatch for stack '" + s.stack_id + "'", 0);
    }
    ds.stacks.push_back(std::move(s));
  }
  ds.pairs();  // validates pairing
  return ds;
}

}  // namespace stcho

#endif  // STCHO_STACK_IO_HPP
