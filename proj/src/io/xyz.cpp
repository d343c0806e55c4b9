#include "dcfg/io/xyz.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace dcfg::io {

problems::PointCloud parse_xyz(std::string_view text) {
  problems::PointCloud cloud;
  int line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_number;

    double values[3];
    int count = 0;
    std::size_t i = 0;
    bool comment = false;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      if (line[i] == '#') {
        comment = true;
        break;
      }
      std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      const std::string_view tok = line.substr(start, i - start);
      if (count >= 3) throw MalformedRecord(line_number, "more than three values on a line");
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw MalformedRecord(line_number, "expected a number, got '" + std::string(tok) + "'");
      }
      values[count++] = v;
    }
    if (count == 0) continue;  // blank or comment-only line
    if (count != 3) {
      throw MalformedRecord(line_number, comment ? "comment interrupts a point record"
                                                 : "a point needs three values");
    }
    cloud.points.emplace_back(values[0], values[1], values[2]);
  }
  return cloud;
}

std::string write_xyz(const problems::PointCloud& cloud) {
  std::string out;
  char buf[96];
  for (const auto& p : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out += buf;
  }
  return out;
}

}  // namespace dcfg::io
