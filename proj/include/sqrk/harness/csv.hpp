#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "sqrk/errors.hpp"

namespace sqrk::harness {

/// Shortest round-trip text for a double; NaN becomes an empty field.
inline std::string csv_number(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* csv_bool(bool b) { return b ? "1" : "0"; }

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

/// Compact label for filenames: "0.5" -> "0.5", "1e-05" -> "1e-05".
inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace sqrk::harness
