#ifndef STCHO_PERCEPT_HPP
#define STCHO_PERCEPT_HPP

// Perceived stack: luminance stack -> contrast -> margin taper -> 3D Fourier
// filtering by S(u, w) / L -> JND units -> optional foveal weighting.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stcho/csf.hpp"
#include "stcho/error.hpp"
#include "stcho/fft.hpp"
#include "stcho/volume.hpp"

namespace stcho {

struct FrequencyTriple {
  double u1 = 0.0;        // cyc/deg
  double u2 = 0.0;        // cyc/deg
  double w = 0.0;         // cyc/s
  double u_radial = 0.0;  // cyc/deg

  static FrequencyTriple make(double u1, double u2, double w) {
    return {u1, u2, w, std::sqrt(u1 * u1 + u2 * u2)};
  }
};

enum class FovealMode { none, hard, soft };

inline FovealMode parse_foveal_mode(std::string_view s) {
  if (s == "none") return FovealMode::none;
  if (s == "hard") return FovealMode::hard;
  if (s == "soft") return FovealMode::soft;
  throw InputError("unknown foveal mode '" + std::string(s) + "'");
}

inline std::string to_string(FovealMode m) {
  switch (m) {
    case FovealMode::none: return "none";
    case FovealMode::hard: return "hard";
    case FovealMode::soft: return "soft";
  }
  return "none";
}

/// Relative acuity versus eccentricity. The soft weight is a degree-6
/// polynomial in q = -1 / (alpha + 0.1), held at `floor` beyond
/// `threshold_deg`.
struct FovealParams {
  double threshold_deg = 63.5780;
  double floor = 0.02;
  std::array<double, 7> b = {0.04526296245190, 4.48579690404659, 21.9046292071393,
                             55.8322547230034, 58.6385398078192, 19.7119376682204,
                             1.43849397325222};
  double hard_cutoff_deg = 7.0;
};

/// -sum b_i q^i, without the floor branch.
inline double foveal_polynomial(double alpha, const FovealParams& fp) {
  const double q = -1.0 / (alpha + 0.1);
  double acc = 0.0;
  for (std::size_t i = fp.b.size(); i-- > 0;) acc = acc * q + fp.b[i];
  return -acc;
}

inline double foveal_weight(double alpha, FovealMode mode, const FovealParams& fp = {}) {
  if (!(alpha >= 0)) throw InputError("foveal_weight: eccentricity must be >= 0");
  switch (mode) {
    case FovealMode::none: return 1.0;
    case FovealMode::hard: return alpha >= fp.hard_cutoff_deg ? 0.0 : 1.0;
    case FovealMode::soft: return alpha > fp.threshold_deg ? fp.floor : foveal_polynomial(alpha, fp);
  }
  return 1.0;
}

/// Angle from the viewing axis under the flat-field small-angle approximation.
inline double pixel_eccentricity(double px, double py, double cx, double cy, double ssr) {
  if (!(ssr > 0)) throw InputError("pixel_eccentricity: ssr must be > 0");
  return std::hypot(px - cx, py - cy) / ssr;
}

/// Signed frequency of FFT bin k out of n at sampling rate fs.
inline double frequency_of_index(std::size_t k, std::size_t n, double fs) {
  const double r = static_cast<double>(k) / static_cast<double>(n);
  return 2 * k < n ? r * fs : (r - 1.0) * fs;
}

/// Lowest spatial frequency at which the model is valid, (2 X0)^-1.
inline double min_valid_frequency(const ViewingConditions& vc) { return 1.0 / (2.0 * vc.x0); }

/// Perceived amplitude per unit luminance amplitude, S(u_eff, |w|) / L.
/// Sub-minimum radial frequencies (including DC) are evaluated at u_min.
inline double transfer_gain(const FrequencyTriple& ft, const CsfEvaluator& csf) {
  const ViewingConditions& vc = csf.viewing();
  const double u = std::sqrt(ft.u1 * ft.u1 + ft.u2 * ft.u2);
  const double u_eff = std::max(u, min_valid_frequency(vc));
  return csf(u_eff, std::abs(ft.w)) / vc.luminance_l;
}

inline double transfer_gain(const FrequencyTriple& ft, const ViewingConditions& vc,
                            const CsfConstants& c = {}) {
  return transfer_gain(ft, CsfEvaluator(vc, c));
}

inline double mean_luminance(const Volume<double>& lum) {
  if (lum.empty()) throw InputError("mean_luminance: empty stack");
  double sum = 0.0;
  for (double v : lum.values()) sum += v;
  return sum / static_cast<double>(lum.size());
}

inline constexpr std::size_t kTaperBand = 5;

/// Weight of in-plane position i in a dimension of n samples: a linear ramp
/// from 0 at the border to 1 at `kTaperBand` pixels inside.
inline double taper_weight(std::size_t i, std::size_t n) {
  const std::size_t dist = std::min(i, n - 1 - i);
  return std::min(1.0, static_cast<double>(dist) / static_cast<double>(kTaperBand));
}

/// Multiplies every slice by the separable margin window. No tapering in z.
inline Volume<double> taper_margins(Volume<double> v) {
  if (v.width() < 2 * kTaperBand + 1 || v.height() < 2 * kTaperBand + 1) {
    throw InputError("taper_margins: slices must be at least 11 x 11");
  }
  std::vector<double> wx(v.width());
  std::vector<double> wy(v.height());
  for (std::size_t x = 0; x < wx.size(); ++x) wx[x] = taper_weight(x, v.width());
  for (std::size_t y = 0; y < wy.size(); ++y) wy[y] = taper_weight(y, v.height());
  for (std::size_t z = 0; z < v.depth(); ++z) {
    for (std::size_t y = 0; y < v.height(); ++y) {
      for (std::size_t x = 0; x < v.width(); ++x) v(x, y, z) *= wx[x] * wy[y];
    }
  }
  return v;
}

struct PerceptOptions {
  bool taper = true;
  FovealMode foveal = FovealMode::none;
  FovealParams foveal_params{};
  TemporalResponse temporal = TemporalResponse::barten;
  /// Relative bound on max|imag| / RMS(real) after the inverse transform.
  double imag_tolerance = 1e-9;
};

struct PerceivedStack {
  Volume<double> data;  // JND units
  ViewingConditions vc;
  FovealMode foveal_mode = FovealMode::none;
};

namespace detail {

// Folded bin index: bins k and n - k share |frequency|.
inline std::size_t fold(std::size_t k, std::size_t n) { return std::min(k, n - k); }

inline void check_geometry(const Volume<double>& lum, const ViewingConditions& vc) {
  const double expected = static_cast<double>(lum.width()) / vc.ssr;
  if (std::abs(vc.x0 - expected) > 1e-9 * expected) {
    throw InputError("apply_stcsf: x0 = " + std::to_string(vc.x0) +
                     " deg does not match width / ssr = " + std::to_string(expected));
  }
}

}  // namespace detail

/// Gain of every bin of a W x H x K transform, laid out like the volume.
/// Gains are tabulated on folded indices, so bins of opposite frequency
/// receive bit-identical values.
inline Volume<double> gain_volume(std::size_t width, std::size_t height, std::size_t depth,
                                  const CsfEvaluator& csf) {
  const ViewingConditions& vc = csf.viewing();
  const std::size_t fw = width / 2 + 1;
  const std::size_t fh = height / 2 + 1;
  const std::size_t fd = depth / 2 + 1;
  std::vector<double> table(fw * fh * fd);
  for (std::size_t kz = 0; kz < fd; ++kz) {
    const double w = frequency_of_index(kz, depth, vc.slice_rate);
    for (std::size_t ky = 0; ky < fh; ++ky) {
      const double u2 = frequency_of_index(ky, height, vc.ssr);
      for (std::size_t kx = 0; kx < fw; ++kx) {
        const double u1 = frequency_of_index(kx, width, vc.ssr);
        table[(kz * fh + ky) * fw + kx] = transfer_gain(FrequencyTriple::make(u1, u2, w), csf);
      }
    }
  }
  Volume<double> g(width, height, depth);
  for (std::size_t z = 0; z < depth; ++z) {
    const std::size_t kz = detail::fold(z, depth);
    for (std::size_t y = 0; y < height; ++y) {
      const std::size_t ky = detail::fold(y, height);
      for (std::size_t x = 0; x < width; ++x) {
        g(x, y, z) = table[(kz * fh + ky) * fw + detail::fold(x, width)];
      }
    }
  }
  return g;
}

/// Forward transform, per-bin multiplication by `gain`, inverse transform,
/// division by the element count. Returns the real part after checking the
/// imaginary residue.
inline Volume<double> filter_volume(const Volume<double>& input, const Volume<double>& gain,
                                    double imag_tolerance = 1e-9) {
  if (!input.same_shape(gain)) throw InputError("filter_volume: gain shape mismatch");
  const Fft3d& fft = Fft3d::cached(input.width(), input.height(), input.depth());
  std::vector<std::complex<double>> buf(input.values().begin(), input.values().end());
  fft.forward(buf);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= gain.values()[i];
  fft.inverse(buf);

  const double scale = 1.0 / static_cast<double>(buf.size());
  Volume<double> out(input.width(), input.height(), input.depth());
  double sum_sq = 0.0;
  double max_imag = 0.0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const double re = buf[i].real() * scale;
    out.values()[i] = re;
    sum_sq += re * re;
    max_imag = std::max(max_imag, std::abs(buf[i].imag() * scale));
  }
  const double rms = std::sqrt(sum_sq / static_cast<double>(buf.size()));
  if (max_imag > imag_tolerance * rms) {
    throw NumericalError("filter_volume: imaginary residue " + std::to_string(max_imag) +
                         " exceeds tolerance relative to RMS " + std::to_string(rms));
  }
  return out;
}

/// Pixel-wise foveal weighting about the image center (W/2, H/2), identical
/// on every slice.
inline void apply_foveal_weighting(Volume<double>& v, double ssr, FovealMode mode,
                                   const FovealParams& fp = {}) {
  if (mode == FovealMode::none) return;
  const double cx = static_cast<double>(v.width() / 2);
  const double cy = static_cast<double>(v.height() / 2);
  std::vector<double> weight(v.slice_size());
  for (std::size_t y = 0; y < v.height(); ++y) {
    for (std::size_t x = 0; x < v.width(); ++x) {
      const double alpha = pixel_eccentricity(static_cast<double>(x), static_cast<double>(y), cx, cy, ssr);
      weight[y * v.width() + x] = foveal_weight(alpha, mode, fp);
    }
  }
  for (std::size_t z = 0; z < v.depth(); ++z) {
    auto s = v.slice(z);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= weight[i];
  }
}

/// Runs the full perceived-stack pipeline on a luminance stack (cd/m^2).
/// `vc.luminance_l` is replaced by the stack's own mean luminance; the
/// returned stack carries the conditions actually used.
inline PerceivedStack apply_stcsf(const Volume<double>& lum, ViewingConditions vc,
                                  const CsfConstants& c = {}, const PerceptOptions& opt = {}) {
  vc.luminance_l = mean_luminance(lum);
  vc.validate();
  detail::check_geometry(lum, vc);

  Volume<double> contrast = lum;
  for (double& v : contrast.values()) v -= vc.luminance_l;
  if (opt.taper) contrast = taper_margins(std::move(contrast));

  const CsfEvaluator csf(vc, c, opt.temporal);
  const Volume<double> gain = gain_volume(lum.width(), lum.height(), lum.depth(), csf);

  PerceivedStack out;
  out.data = filter_volume(contrast, gain, opt.imag_tolerance);
  out.vc = vc;
  out.foveal_mode = opt.foveal;
  apply_foveal_weighting(out.data, vc.ssr, opt.foveal, opt.foveal_params);
  return out;
}

}  // namespace stcho

#endif  // STCHO_PERCEPT_HPP
