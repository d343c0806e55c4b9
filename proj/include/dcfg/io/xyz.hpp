#pragma once

#include <string>
#include <string_view>

#include "dcfg/problems/registration.hpp"

namespace dcfg::io {

/// One point per line, three whitespace-separated reals; blank lines and '#'
/// comments are ignored. Errors carry the line number.
problems::PointCloud parse_xyz(std::string_view text);

std::string write_xyz(const problems::PointCloud& cloud);

}  // namespace dcfg::io
