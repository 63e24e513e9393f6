#include "bother/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace bother::report {

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Bar {
  std::string label;
  double value;
  double err;
};

std::string bar_chart(const std::vector<Bar>& bars, const std::string& title,
                      const std::string& y_label) {
  constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 110;
  constexpr double kPlotH = 300, kSlot = 28;
  const double plot_w = std::max(1.0, kSlot * static_cast<double>(bars.size()));
  const double width = kLeft + plot_w + kRight;
  const double height = kTop + kPlotH + kBottom;

  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min(lo, b.value - b.err);
    hi = std::max(hi, b.value + b.err);
  }
  if (hi == lo) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  hi += pad;
  if (lo < 0.0) lo -= pad;
  auto ypos = [&](double v) { return kTop + kPlotH * (hi - v) / (hi - lo); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
    << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << ' '
    << num(height) << "\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << num(width / 2) << "\" y=\"22\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  s << "<text x=\"16\" y=\"" << num(kTop + kPlotH / 2) << "\" transform=\"rotate(-90 16 "
    << num(kTop + kPlotH / 2) << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"12\">" << xml_escape(y_label) << "</text>\n";

  const double zero = ypos(0.0);
  s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(zero) << "\" x2=\""
    << num(kLeft + plot_w) << "\" y2=\"" << num(zero) << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
    << "\" y2=\"" << num(kTop + kPlotH) << "\" stroke=\"black\"/>\n";
  for (double tick : {lo, (lo + hi) / 2, hi}) {
    s << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(ypos(tick) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(tick)
      << "</text>\n";
  }

  for (std::size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    const double cx = kLeft + kSlot * (static_cast<double>(i) + 0.5);
    const double top = ypos(std::max(b.value, 0.0));
    const double bottom = ypos(std::min(b.value, 0.0));
    s << "<rect class=\"bar\" x=\"" << num(cx - kSlot * 0.35) << "\" y=\"" << num(top)
      << "\" width=\"" << num(kSlot * 0.7) << "\" height=\"" << num(bottom - top)
      << "\" fill=\"#4c78a8\"><title>" << xml_escape(b.label) << ": " << num(b.value)
      << " &#177; " << num(b.err) << "</title></rect>\n";
    const double e_hi = ypos(b.value + b.err), e_lo = ypos(b.value - b.err);
    s << "<g class=\"errorbar\" stroke=\"black\">"
      << "<line x1=\"" << num(cx) << "\" y1=\"" << num(e_hi) << "\" x2=\"" << num(cx)
      << "\" y2=\"" << num(e_lo) << "\"/>"
      << "<line x1=\"" << num(cx - 5) << "\" y1=\"" << num(e_hi) << "\" x2=\"" << num(cx + 5)
      << "\" y2=\"" << num(e_hi) << "\"/>"
      << "<line x1=\"" << num(cx - 5) << "\" y1=\"" << num(e_lo) << "\" x2=\"" << num(cx + 5)
      << "\" y2=\"" << num(e_lo) << "\"/></g>\n";
    const double ly = kTop + kPlotH + 10;
    s << "<text x=\"" << num(cx) << "\" y=\"" << num(ly) << "\" transform=\"rotate(60 "
      << num(cx) << ' ' << num(ly) << ")\" font-family=\"sans-serif\" font-size=\"10\">"
      << xml_escape(b.label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

std::string rank_chart_svg(const importance::RankReport& report, const std::string& title) {
  std::vector<Bar> bars;
  for (const auto& e : report.entries) bars.push_back({e.category, e.mean_rank, e.rank_std});
  return bar_chart(bars, title, "importance rank (1 = most bothersome)");
}

std::string weight_chart_svg(const importance::RankReport& report, const std::string& title) {
  std::vector<Bar> bars;
  for (const auto& e : report.entries) bars.push_back({e.category, e.mean_weight, e.weight_std});
  return bar_chart(bars, title, "regression weight (z units)");
}

std::string rank_table(const importance::RankReport& report) {
  std::ostringstream s;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %9s %8s %11s %10s %9s\n", "category", "mean_rank",
                "rank_sd", "mean_weight", "weight_sd", "support");
  s << line;
  for (const auto& e : report.entries) {
    std::snprintf(line, sizeof line, "%-24s %9.3f %8.3f %11.4f %10.4f %9ld\n",
                  e.category.c_str(), e.mean_rank, e.rank_std, e.mean_weight, e.weight_std,
                  e.support);
    s << line;
  }
  return s.str();
}

}  // namespace bother::report
