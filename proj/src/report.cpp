#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "era/errors.hpp"
#include "era/sweep.hpp"

namespace era {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (nfe, value), sorted by nfe
};

}  // namespace

std::string render_plot(const std::vector<ResultRow>& rows, const std::string& metric) {
  std::set<std::string> methods_with_many_k;
  {
    std::map<std::string, std::set<int>> ks;
    for (const auto& r : rows) {
      if (r.metric == metric && r.nfe > 0) ks[r.method].insert(r.k);
    }
    for (const auto& [m, set] : ks) {
      if (set.size() > 1) methods_with_many_k.insert(m);
    }
  }

  std::vector<Series> series;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    if (r.metric != metric || r.nfe <= 0 || !std::isfinite(r.value)) continue;
    std::string label = r.method;
    if (methods_with_many_k.count(r.method)) label += " k=" + std::to_string(r.k);
    auto [it, inserted] = index.try_emplace(label, series.size());
    if (inserted) series.push_back({label, {}});
    series[it->second].points.emplace_back(static_cast<double>(r.nfe), r.value);
  }
  if (series.empty()) throw ContractError("no rows carry metric '" + metric + "'");
  for (auto& s : series) std::sort(s.points.begin(), s.points.end());

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, std::log10(x));
      x_max = std::max(x_max, std::log10(x));
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  const bool log_y = y_min > 0.0 && y_max / y_min > 100.0;
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  double lo_y = ty(y_min), hi_y = ty(y_max);
  if (x_max - x_min < 1e-12) { x_min -= 0.5; x_max += 0.5; }
  if (hi_y - lo_y < 1e-12) { lo_y -= 0.5; hi_y += 0.5; }
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double nfe) { return kLeft + (std::log10(nfe) - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (1.0 - (ty(y) - lo_y) / (hi_y - lo_y)) * plot_h; };

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"14\">" << escape(metric)
      << (log_y ? " (log scale)" : "") << " vs NFE</text>\n";
  svg << "<g stroke=\"#444\" fill=\"none\">"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
      << "\" y2=\"" << kTop + plot_h << "\"/>"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + plot_h << "\"/></g>\n";

  std::set<double> ticks;
  for (const auto& s : series) {
    for (const auto& p : s.points) ticks.insert(p.first);
  }
  for (double nfe : ticks) {
    svg << "<text x=\"" << px(nfe) << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << static_cast<long>(nfe) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">NFE</text>\n";
  for (int j = 0; j <= 4; ++j) {
    const double v = lo_y + (hi_y - lo_y) * j / 4.0;
    const double label = log_y ? std::pow(10.0, v) : v;
    const double y = kTop + (1.0 - j / 4.0) * plot_h;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
        << std::setprecision(3) << std::defaultfloat << label << std::fixed << std::setprecision(2)
        << "</text>\n";
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].points.size(); ++i) {
      const auto& [x, y] = series[s].points[i];
      svg << (i ? " " : "") << px(x) << ',' << py(y);
    }
    svg << "\"/>\n";
    for (const auto& [x, y] : series[s].points) {
      svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3.5\" fill=\"" << color
          << "\"/>\n";
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << kWidth - kRight + 15 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << kWidth - kRight + 35 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>"
        << "<text x=\"" << kWidth - kRight + 40 << "\" y=\"" << ly << "\">"
        << escape(series[s].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const std::vector<ResultRow>& rows, const std::string& metric,
               const std::string& path) {
  const std::string svg = render_plot(rows, metric);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << svg;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace era
