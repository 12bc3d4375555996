#ifndef STCHO_STACKS_HPP
#define STCHO_STACKS_HPP

// Synthetic stand-ins for browsed tomosynthesis stacks: power-law textured
// backgrounds and centered smoothed-disc lesions with a Gaussian depth profile.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stcho/error.hpp"
#include "stcho/fft.hpp"
#include "stcho/label.hpp"
#include "stcho/parallel.hpp"
#include "stcho/percept.hpp"
#include "stcho/rng.hpp"
#include "stcho/volume.hpp"

namespace stcho {

struct StackGeometry {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t n_slices = 32;
  int bit_depth = 10;
  double slice_sep_mm = 0.2;

  /// 41 slices, 1 mm apart.
  static StackGeometry dataset_a() { return {64, 64, 41, 10, 1.0}; }
  /// 32 slices, 0.2 mm apart.
  static StackGeometry dataset_b() { return {64, 64, 32, 10, 0.2}; }

  std::uint32_t max_code() const { return (1u << bit_depth) - 1u; }
  std::size_t center_x() const { return width / 2; }
  std::size_t center_y() const { return height / 2; }
  std::size_t center_slice() const { return n_slices / 2; }

  void validate() const {
    if (width == 0 || height == 0 || n_slices == 0) throw InputError("StackGeometry: empty dimension");
    if (bit_depth < 1 || bit_depth > 16) throw InputError("StackGeometry: bit_depth must be in [1, 16]");
    if (!(slice_sep_mm > 0)) throw InputError("StackGeometry: slice_sep_mm must be > 0");
  }

  friend bool operator==(const StackGeometry&, const StackGeometry&) = default;
};

struct ImageStack {
  StackGeometry geometry;
  Volume<std::uint16_t> codes;
  std::string stack_id;
  Label label = Label::healthy;
  std::vector<int> lesion_slices;  // empty for healthy stacks
  std::string source_id;           // healthy source of a lesion stack
  std::uint64_t seed = 0;          // generator seed of the background

  friend bool operator==(const ImageStack&, const ImageStack&) = default;
};

enum class TextureKind { power_law, white };

struct Texture {
  TextureKind kind = TextureKind::power_law;
  double beta = 3.0;
};

inline TextureKind parse_texture_kind(std::string_view s) {
  if (s == "power_law") return TextureKind::power_law;
  if (s == "white") return TextureKind::white;
  throw InputError("unknown texture '" + std::string(s) + "'");
}

/// Unit-variance Gaussian field. For power_law the spectrum amplitude is
/// |f|^(-beta/2) with f in cycles/voxel, zero at DC, scaled so the expected
/// variance is 1.
inline Volume<double> gaussian_field(std::size_t w, std::size_t h, std::size_t k, const Texture& tex,
                                     std::uint64_t seed) {
  if (!(tex.beta >= 0)) throw InputError("gaussian_field: beta must be >= 0");
  Random rng(seed);
  Volume<double> field(w, h, k);
  for (double& v : field.values()) v = rng.normal();
  if (tex.kind == TextureKind::white) return field;

  Volume<double> amp(w, h, k);
  double sum_sq = 0.0;
  for (std::size_t z = 0; z < k; ++z) {
    const double fz = frequency_of_index(z, k, 1.0);
    for (std::size_t y = 0; y < h; ++y) {
      const double fy = frequency_of_index(y, h, 1.0);
      for (std::size_t x = 0; x < w; ++x) {
        const double fx = frequency_of_index(x, w, 1.0);
        const double f = std::sqrt(fx * fx + fy * fy + fz * fz);
        const double a = f > 0 ? std::pow(f, -0.5 * tex.beta) : 0.0;
        amp(x, y, z) = a;
        sum_sq += a * a;
      }
    }
  }
  const double norm = std::sqrt(static_cast<double>(amp.size()) / sum_sq);
  for (double& a : amp.values()) a *= norm;
  return filter_volume(field, amp, 1e-9);
}

/// Background stack: the texture field mapped to codes with mean at mid-range
/// and one standard deviation equal to 1/10 of the code range (so +-2.5 sd
/// spans the central half), then rounded and clamped.
inline ImageStack generate_background(const StackGeometry& g, const Texture& tex, std::uint64_t seed,
                                      std::string stack_id = {}) {
  g.validate();
  const Volume<double> field = gaussian_field(g.width, g.height, g.n_slices, tex, seed);
  const double max_code = g.max_code();
  const double mid = max_code / 2.0;
  const double scale = (max_code + 1.0) / 10.0;
  ImageStack s;
  s.geometry = g;
  s.codes = Volume<std::uint16_t>(g.width, g.height, g.n_slices);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double v = std::clamp(std::round(mid + scale * field.values()[i]), 0.0, max_code);
    s.codes.values()[i] = static_cast<std::uint16_t>(v);
  }
  s.stack_id = std::move(stack_id);
  s.label = Label::healthy;
  s.seed = seed;
  return s;
}

enum class LesionKind { microcalc, mass };

inline LesionKind parse_lesion_kind(std::string_view s) {
  if (s == "microcalc") return LesionKind::microcalc;
  if (s == "mass") return LesionKind::mass;
  throw InputError("unknown lesion kind '" + std::string(s) + "'");
}

inline std::string to_string(LesionKind k) { return k == LesionKind::microcalc ? "microcalc" : "mass"; }

struct LesionSpec {
  LesionKind kind = LesionKind::microcalc;
  double diameter_px = 8.0;
  double amplitude = 48.0;  // code units at the center voxel
  double sigma_z = 0.5;     // slices

  static LesionSpec microcalc() { return {LesionKind::microcalc, 8.0, 48.0, 0.5}; }
  static LesionSpec mass() { return {LesionKind::mass, 40.0, 9.6, 3.0}; }
  static LesionSpec defaults(LesionKind k) { return k == LesionKind::microcalc ? microcalc() : mass(); }

  void validate(const StackGeometry& g) const {
    if (!(amplitude >= 0)) throw InputError("LesionSpec: amplitude must be >= 0");
    if (!(diameter_px > 0) || diameter_px > static_cast<double>(std::min(g.width, g.height))) {
      throw InputError("LesionSpec: diameter must be in (0, image size]");
    }
    if (!(sigma_z > 0)) throw InputError("LesionSpec: sigma_z must be > 0");
  }
};

/// Relative weight of each slice, 1 at the center slice.
inline std::vector<double> depth_profile(const LesionSpec& spec, const StackGeometry& g) {
  std::vector<double> p(g.n_slices);
  const double c = static_cast<double>(g.center_slice());
  for (std::size_t z = 0; z < p.size(); ++z) {
    const double t = (static_cast<double>(z) - c) / spec.sigma_z;
    p[z] = std::exp(-0.5 * t * t);
  }
  return p;
}

/// Slices whose depth weight is at least 1% of the peak.
inline std::vector<int> affected_slices(const LesionSpec& spec, const StackGeometry& g) {
  const std::vector<double> p = depth_profile(spec, g);
  std::vector<int> out;
  for (std::size_t z = 0; z < p.size(); ++z) {
    if (p[z] >= 0.01) out.push_back(static_cast<int>(z));
  }
  return out;
}

/// Disc of the lesion diameter convolved with a Gaussian of std diameter/8,
/// centered at (W/2, H/2) and scaled to 1 at the center. Row-major W x H.
inline std::vector<double> in_plane_profile(const LesionSpec& spec, const StackGeometry& g) {
  const auto w = static_cast<long>(g.width);
  const auto h = static_cast<long>(g.height);
  const double cx = static_cast<double>(g.center_x());
  const double cy = static_cast<double>(g.center_y());
  const double radius = spec.diameter_px / 2.0;
  std::vector<double> disc(g.width * g.height);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      disc[y * w + x] = std::hypot(x - cx, y - cy) <= radius ? 1.0 : 0.0;
    }
  }

  const double sigma = spec.diameter_px / 8.0;
  const long r = static_cast<long>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * r + 1);
  double ksum = 0.0;
  for (long i = -r; i <= r; ++i) {
    kernel[i + r] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    ksum += kernel[i + r];
  }
  for (double& v : kernel) v /= ksum;

  // Separable convolution with zero padding outside the image.
  std::vector<double> tmp(disc.size(), 0.0);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long i = -r; i <= r; ++i) {
        const long xx = x + i;
        if (xx >= 0 && xx < w) acc += kernel[i + r] * disc[y * w + xx];
      }
      tmp[y * w + x] = acc;
    }
  }
  std::vector<double> out(disc.size(), 0.0);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long i = -r; i <= r; ++i) {
        const long yy = y + i;
        if (yy >= 0 && yy < h) acc += kernel[i + r] * tmp[yy * w + x];
      }
      out[y * w + x] = acc;
    }
  }
  const double peak = out[static_cast<std::size_t>(cy) * g.width + static_cast<std::size_t>(cx)];
  for (double& v : out) v /= peak;
  return out;
}

/// Additive lesion signal in code units, before rounding and clamping.
inline Volume<double> lesion_increment(const LesionSpec& spec, const StackGeometry& g) {
  spec.validate(g);
  const std::vector<double> plane = in_plane_profile(spec, g);
  const std::vector<double> depth = depth_profile(spec, g);
  Volume<double> inc(g.width, g.height, g.n_slices);
  for (std::size_t z = 0; z < g.n_slices; ++z) {
    auto s = inc.slice(z);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = spec.amplitude * depth[z] * plane[i];
  }
  return inc;
}

/// Lesion version of a healthy stack. The increment is rounded to whole codes
/// before being added, so the difference to the source is nonnegative and
/// peaks at the center voxel. Throws ClippingError if clamping at the top of
/// the code range removes more than 1% of the lesion energy.
inline ImageStack insert_lesion(const ImageStack& healthy, const LesionSpec& spec,
                                std::string lesion_id = {}) {
  if (healthy.label != Label::healthy) throw InputError("insert_lesion: source stack is not healthy");
  const StackGeometry& g = healthy.geometry;
  const Volume<double> inc = lesion_increment(spec, g);
  const double max_code = g.max_code();
  ImageStack out = healthy;
  double energy = 0.0;
  double clipped = 0.0;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    const double add = std::round(inc.values()[i]);
    const double target = healthy.codes.values()[i] + add;
    energy += add;
    if (target > max_code) clipped += target - max_code;
    out.codes.values()[i] = static_cast<std::uint16_t>(std::min(target, max_code));
  }
  if (energy > 0 && clipped > 0.01 * energy) {
    throw ClippingError("insert_lesion: clamping removed " + std::to_string(100.0 * clipped / energy) +
                        "% of the lesion energy in stack '" + healthy.stack_id + "'");
  }
  out.label = Label::lesion;
  out.lesion_slices = affected_slices(spec, g);
  out.source_id = healthy.stack_id;
  out.stack_id = lesion_id.empty() ? healthy.stack_id + "-lesion" : std::move(lesion_id);
  return out;
}

struct GeneratorConfig {
  StackGeometry geometry = StackGeometry::dataset_b();
  Texture texture{};
  LesionSpec lesion = LesionSpec::microcalc();
  std::size_t n_pairs = 200;
  std::uint64_t seed = 1;
};

struct Dataset {
  std::vector<ImageStack> stacks;

  /// (healthy index, lesion index) for every lesion stack, in stack order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const {
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < stacks.size(); ++i) {
      if (!by_id.emplace(stacks[i].stack_id, i).second) {
        throw InputError("dataset: duplicate stack id '" + stacks[i].stack_id + "'");
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < stacks.size(); ++i) {
      if (stacks[i].label != Label::lesion) continue;
      const auto it = by_id.find(stacks[i].source_id);
      if (it == by_id.end() || stacks[it->second].label != Label::healthy) {
        throw InputError("dataset: lesion stack '" + stacks[i].stack_id + "' has no healthy source");
      }
      out.emplace_back(it->second, i);
    }
    return out;
  }
};

/// n_pairs healthy backgrounds and their lesion versions. Stack p's seed is
/// derive_seed(seed, p), so output does not depend on thread scheduling.
inline Dataset generate_dataset(const GeneratorConfig& cfg, unsigned threads = 0) {
  cfg.geometry.validate();
  cfg.lesion.validate(cfg.geometry);
  Dataset ds;
  ds.stacks.resize(2 * cfg.n_pairs);
  parallel_for(cfg.n_pairs, threads, [&](std::size_t p) {
    char id[32];
    std::snprintf(id, sizeof id, "%05zu", p);
    ImageStack h = generate_background(cfg.geometry, cfg.texture, derive_seed(cfg.seed, p),
                                       std::string("h") + id);
    ds.stacks[2 * p + 1] = insert_lesion(h, cfg.lesion, std::string("l") + id);
    ds.stacks[2 * p] = std::move(h);
  });
  return ds;
}

}  // namespace stcho

#endif  // STCHO_STACKS_HPP
