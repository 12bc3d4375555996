#ifndef STCHO_CSF_HPP
#define STCHO_CSF_HPP

// Barten's spatio-temporal contrast sensitivity model S(u, w).
//
// Spatial frequency u is in cycles/degree, temporal frequency w in
// cycles/second. The neural line-spread constant sigma0 is in arcmin and the
// chromatic aberration constant in arcmin/mm; the 1/60 factor in the
// line-spread std converts the combined value to degrees.

#include <cmath>
#include <numbers>
#include <string>

#include "stcho/error.hpp"

namespace stcho {

struct CsfConstants {
  double k = 3.0;            // detection SNR threshold
  double eta = 0.03;         // quantum efficiency
  double phi0 = 3e-8;        // neural noise spectral density, s deg^2
  double x_max = 12.0;       // maximum integration angle, deg
  double n_max = 15.0;       // maximum number of integrated cycles
  double t_int = 0.1;        // integration time, s
  double p = 1.285e6;        // photon conversion factor
  double sigma0 = 0.5;       // arcmin
  double c_ab = 0.08;        // arcmin/mm
  double u0_lat = 7.0;       // lateral inhibition corner, cyc/deg
  int n1 = 7;
  int n2 = 4;
  double tau10 = 32e-3;      // s
  double tau20 = 18e-3;      // s

  void validate() const {
    const bool ok = k > 0 && eta > 0 && phi0 > 0 && x_max > 0 && n_max > 0 && t_int > 0 &&
                    p > 0 && sigma0 > 0 && c_ab > 0 && u0_lat > 0 && n1 > 0 && n2 > 0 &&
                    tau10 > 0 && tau20 > 0;
    if (!ok) throw InputError("CsfConstants: all constants must be strictly positive");
  }

  friend bool operator==(const CsfConstants&, const CsfConstants&) = default;
};

struct ViewingConditions {
  double luminance_l = 0.0;  // space-time average luminance, cd/m^2
  double x0 = 0.0;           // apparent image size, deg
  double ssr = 0.0;          // spatial sampling rate, pixel/deg
  double slice_rate = 0.0;   // browsing speed, slice/s

  void validate() const {
    if (!(luminance_l > 0) || !(x0 > 0) || !(ssr > 0) || !(slice_rate > 0)) {
      throw InputError("ViewingConditions: luminance, x0, ssr and slice_rate must be > 0");
    }
  }

  friend bool operator==(const ViewingConditions&, const ViewingConditions&) = default;
};

struct TimeConstants {
  double tau1 = 0.0;
  double tau2 = 0.0;
};

/// Quantities of the model that depend on the viewing conditions only.
struct DerivedOptics {
  double pupil_d = 0.0;    // mm
  double retinal_e = 0.0;  // Troland
  double sigma = 0.0;      // deg
  double field_d = 0.0;    // deg
  double tau1 = 0.0;       // s
  double tau2 = 0.0;       // s
};

/// Pupil diameter in mm, d = 5 - 3 tanh(0.4 ln(L X0^2 / 40^2)).
inline double pupil_diameter(const ViewingConditions& vc) {
  const bool degenerate = !(vc.luminance_l > 0) || !(vc.x0 > 0) || !std::isfinite(vc.luminance_l) ||
                          !std::isfinite(vc.x0);
  if (degenerate) throw DomainError("pupil_diameter: luminance and x0 must be finite and > 0");
  const double d = 5.0 - 3.0 * std::tanh(0.4 * std::log(vc.luminance_l * vc.x0 * vc.x0 / (40.0 * 40.0)));
  if (!std::isfinite(d)) throw DomainError("pupil_diameter: non-finite result");
  return d;
}

/// Retinal illuminance in Troland including the Stiles-Crawford correction.
inline double retinal_illuminance(const ViewingConditions& vc, double d) {
  if (!(d > 0)) throw InputError("retinal_illuminance: pupil diameter must be > 0");
  const double a = d / 9.7;
  const double b = d / 12.4;
  return std::numbers::pi * d * d * vc.luminance_l / 4.0 * (1.0 - a * a + b * b * b * b);
}

/// Standard deviation of the eye's line-spread function, in degrees.
inline double line_spread_sigma(double d, const CsfConstants& c) {
  const double ab = c.c_ab * d;
  return std::sqrt(c.sigma0 * c.sigma0 + ab * ab) / 60.0;
}

inline double optical_mtf(double u, double d, const CsfConstants& c) {
  const double s = std::numbers::pi * line_spread_sigma(d, c) * u;
  return std::exp(-2.0 * s * s);
}

inline double lateral_inhibition(double u, const CsfConstants& c) {
  const double r = u / c.u0_lat;
  return 1.0 - std::sqrt(1.0 - std::exp(-r * r));
}

/// Luminance-adapted time constants of the two temporal filters. `d_field` is
/// the object diameter D = 2 X0 / sqrt(pi) in degrees.
inline TimeConstants temporal_time_constants(double e, double d_field, const CsfConstants& c) {
  if (!(e >= 0) || !(d_field > 0)) {
    throw InputError("temporal_time_constants: need e >= 0 and d_field > 0");
  }
  TimeConstants t;
  t.tau1 = c.tau10 / (1.0 + 0.55 * std::log(1.0 + std::pow(1.0 + d_field, 0.6) * e / 3.5));
  t.tau2 = c.tau20 / (1.0 + 0.37 * std::log(1.0 + std::pow(1.0 + d_field / 3.2, 5.0) * e / 120.0));
  return t;
}

/// H(w) = ((1 + (2 pi tau w)^2)^-n)^(1/2).
inline double temporal_filter(double w, double tau, int n) {
  const double x = 2.0 * std::numbers::pi * tau * w;
  return std::sqrt(std::pow(1.0 + x * x, -n));
}

inline DerivedOptics derive_optics(const ViewingConditions& vc, const CsfConstants& c) {
  vc.validate();
  DerivedOptics o;
  o.pupil_d = pupil_diameter(vc);
  o.retinal_e = retinal_illuminance(vc, o.pupil_d);
  o.sigma = line_spread_sigma(o.pupil_d, c);
  o.field_d = 2.0 * vc.x0 / std::sqrt(std::numbers::pi);
  const TimeConstants t = temporal_time_constants(o.retinal_e, o.field_d, c);
  o.tau1 = t.tau1;
  o.tau2 = t.tau2;
  return o;
}

/// Which temporal response enters the model. `unity` forces H1 = H2 = 1 and
/// reduces S(u, w) to the spatial-only CSF.
enum class TemporalResponse { barten, unity };

/// S(u, w) for fixed viewing conditions. Construction computes the
/// viewing-dependent terms once; evaluation is a pure function of (u, w).
class CsfEvaluator {
public:
  CsfEvaluator(const ViewingConditions& vc, const CsfConstants& c,
               TemporalResponse response = TemporalResponse::barten)
      : vc_(vc), c_(c), optics_(derive_optics(vc, c)), response_(response) {
    c_.validate();
    photon_noise_ = 1.0 / (c_.eta * c_.p * optics_.retinal_e);
    field_term_ = 1.0 / (vc_.x0 * vc_.x0) + 1.0 / (c_.x_max * c_.x_max);
  }

  double operator()(double u, double w) const {
    double h1 = 1.0;
    double h2 = 1.0;
    if (response_ == TemporalResponse::barten) {
      h1 = temporal_filter(w, optics_.tau1, c_.n1);
      h2 = temporal_filter(w, optics_.tau2, c_.n2);
    }
    const double mopt = std::exp(-2.0 * square(std::numbers::pi * optics_.sigma * u));
    const double neural = h1 * (1.0 - h2 * lateral_inhibition(u, c_));
    const double noise = photon_noise_ + c_.phi0 / (neural * neural);
    const double integration = field_term_ + u * u / (c_.n_max * c_.n_max);
    const double s = mopt / (c_.k * std::sqrt(2.0 / c_.t_int * integration * noise));
    if (!std::isfinite(s)) throw DomainError("stcsf: non-finite sensitivity");
    return s;
  }

  const DerivedOptics& optics() const noexcept { return optics_; }
  const ViewingConditions& viewing() const noexcept { return vc_; }
  TemporalResponse response() const noexcept { return response_; }

private:
  static double square(double x) { return x * x; }

  ViewingConditions vc_;
  CsfConstants c_;
  DerivedOptics optics_;
  TemporalResponse response_;
  double photon_noise_ = 0.0;
  double field_term_ = 0.0;
};

inline double stcsf(double u, double w, const ViewingConditions& vc, const CsfConstants& c = {},
                    TemporalResponse response = TemporalResponse::barten) {
  if (!(u >= 0) || !(w >= 0)) throw InputError("stcsf: frequencies must be >= 0");
  return CsfEvaluator(vc, c, response)(u, w);
}

inline double spatial_csf(double u, const ViewingConditions& vc, const CsfConstants& c = {}) {
  return stcsf(u, 0.0, vc, c, TemporalResponse::unity);
}

}  // namespace stcho

#endif  // STCHO_CSF_HPP
