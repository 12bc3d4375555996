#ifndef STCHO_LABEL_HPP
#define STCHO_LABEL_HPP

#include <string>
#include <string_view>

#include "stcho/error.hpp"

namespace stcho {

enum class Label { healthy, lesion };

inline std::string to_string(Label l) { return l == Label::healthy ? "healthy" : "lesion"; }

inline Label parse_label(std::string_view s) {
  if (s == "healthy") return Label::healthy;
  if (s == "lesion") return Label::lesion;
  throw InputError("unknown label '" + std::string(s) + "'");
}

}  // namespace stcho

#endif  // STCHO_LABEL_HPP
