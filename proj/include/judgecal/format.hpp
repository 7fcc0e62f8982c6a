#pragma once

#include <cstdio>
#include <string>
#include <string_view>

namespace judgecal::fmt {

inline std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s(buf);
  // "-0.00" and friends print as "0.00".
  if (!s.empty() && s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos)
    s.erase(0, 1);
  return s;
}

/// Number of UTF-8 code points, used as display width for table alignment.
inline std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

inline std::string pad_right(std::string_view s, std::size_t width) {
  std::string out(s);
  for (auto w = display_width(s); w < width; ++w) out.push_back(' ');
  return out;
}

inline std::string pad_left(std::string_view s, std::size_t width) {
  std::string out;
  for (auto w = display_width(s); w < width; ++w) out.push_back(' ');
  out.append(s);
  return out;
}

/// Quotes a CSV field when it contains a separator, quote or newline.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace judgecal::fmt
