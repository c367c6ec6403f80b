#pragma once

#include <string>

#include "activeid/tools/experiment.hpp"

namespace activeid::tools {

// Median error per policy against the epoch index on a log-y axis, with the
// p10-p90 band shaded. Output depends only on the report rows. Throws ConfigError
// for a report without plottable rows.
std::string render_svg(const Report& report, const std::string& title = "spectral error");
void        emit_plot(const Report& report, const std::string& path, const std::string& title = "spectral error");

}  // namespace activeid::tools
