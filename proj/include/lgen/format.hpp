#pragma once

#include <cstdio>
#include <string>

namespace lgen {

// Shortest stable text form used in every table and trace.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace lgen
