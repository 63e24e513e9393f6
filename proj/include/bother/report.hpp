#pragma once

#include <string>

#include "bother/importance.hpp"

namespace bother::report {

// Self-contained SVG bar charts, one <rect class="bar"> per category in
// report order, with +-1 std error bars.
std::string rank_chart_svg(const importance::RankReport& report, const std::string& title);
std::string weight_chart_svg(const importance::RankReport& report, const std::string& title);

// Plain-text table for terminal output.
std::string rank_table(const importance::RankReport& report);

}  // namespace bother::report
