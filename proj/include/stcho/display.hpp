#ifndef STCHO_DISPLAY_HPP
#define STCHO_DISPLAY_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stcho/error.hpp"

namespace stcho {

enum class LuminanceMapping { linear_luminance, log_luminance };

inline LuminanceMapping parse_luminance_mapping(std::string_view s) {
  if (s == "linear" || s == "linear_luminance") return LuminanceMapping::linear_luminance;
  if (s == "log" || s == "log_luminance") return LuminanceMapping::log_luminance;
  throw InputError("unknown display mapping '" + std::string(s) + "'");
}

inline std::string to_string(LuminanceMapping m) {
  return m == LuminanceMapping::linear_luminance ? "linear" : "log";
}

/// Stored pixel code to emitted luminance. Defaults model a 1.05 - 1000 cd/m^2
/// mammography display driven with 10-bit codes.
struct DisplayModel {
  double l_min = 1.05;
  double l_max = 1000.0;
  int bit_depth = 10;
  LuminanceMapping mapping = LuminanceMapping::linear_luminance;

  void validate() const {
    if (!(l_min > 0) || !(l_max > l_min)) throw InputError("DisplayModel: need 0 < l_min < l_max");
    if (bit_depth < 1 || bit_depth > 16) throw InputError("DisplayModel: bit_depth must be in [1, 16]");
  }

  std::uint32_t max_code() const { return (1u << bit_depth) - 1u; }

  double code_to_luminance(std::int64_t code) const {
    if (code < 0 || code > static_cast<std::int64_t>(max_code())) {
      throw InputError("code_to_luminance: code " + std::to_string(code) + " outside [0, " +
                       std::to_string(max_code()) + "]");
    }
    if (code == 0) return l_min;
    if (code == static_cast<std::int64_t>(max_code())) return l_max;
    const double t = static_cast<double>(code) / static_cast<double>(max_code());
    if (mapping == LuminanceMapping::linear_luminance) return std::lerp(l_min, l_max, t);
    return l_min * std::pow(l_max / l_min, t);
  }

  /// Luminance for every code, indexed by code.
  std::vector<double> lookup_table() const {
    validate();
    std::vector<double> lut(static_cast<std::size_t>(max_code()) + 1);
    for (std::size_t c = 0; c < lut.size(); ++c) lut[c] = code_to_luminance(static_cast<std::int64_t>(c));
    return lut;
  }

  friend bool operator==(const DisplayModel&, const DisplayModel&) = default;
};

inline double code_to_luminance(std::int64_t code, const DisplayModel& dm) {
  dm.validate();
  return dm.code_to_luminance(code);
}

/// Apparent image size in degrees for an image `width_px` wide viewed at
/// `ssr` pixels per degree.
inline double viewing_geometry(double width_px, double ssr) {
  if (!(width_px > 0) || !(ssr > 0)) throw InputError("viewing_geometry: width and ssr must be > 0");
  return width_px / ssr;
}

}  // namespace stcho

#endif  // STCHO_DISPLAY_HPP
