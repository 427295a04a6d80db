#include "modcodec/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace modcodec {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 30;
constexpr int kMarginBottom = 55;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void write_rd_plot_svg(const std::string& path,
                       const std::vector<PlotCurve>& curves,
                       QualityMetric quality) {
  if (curves.empty()) throw ConfigError("plot: no curves");

  struct Pt {
    double x, y;
  };
  std::vector<std::vector<Pt>> series;
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  for (const PlotCurve& c : curves) {
    std::vector<Pt> pts;
    for (const RdPoint& p : c.curve.points) {
      const double q = quality == QualityMetric::psnr ? p.psnr
                                                      : msssim_db(p.msssim);
      if (!std::isfinite(q) || !std::isfinite(p.bpp)) continue;
      pts.push_back({p.bpp, q});
    }
    std::sort(pts.begin(), pts.end(),
              [](const Pt& a, const Pt& b) { return a.x < b.x; });
    for (const Pt& p : pts) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    series.push_back(std::move(pts));
  }
  if (!std::isfinite(min_x)) throw DataError("plot: no finite points");
  if (max_x - min_x < 1e-12) {
    min_x -= 0.5;
    max_x += 0.5;
  }
  if (max_y - min_y < 1e-12) {
    min_y -= 0.5;
    max_y += 0.5;
  }

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) {
    return kMarginLeft + (x - min_x) / (max_x - min_x) * plot_w;
  };
  auto sy = [&](double y) {
    return kMarginTop + (max_y - y) / (max_y - min_y) * plot_h;
  };

  std::ofstream out(path);
  if (!out) throw DataError("cannot write plot: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // axes
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h
      << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = min_x + (max_x - min_x) * i / 5.0;
    const double fy = min_y + (max_y - min_y) * i / 5.0;
    out << "<text x=\"" << sx(fx) << "\" y=\"" << kMarginTop + plot_h + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(fx)
        << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << sy(fy) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
    out << "<line x1=\"" << sx(fx) << "\" y1=\"" << kMarginTop + plot_h
        << "\" x2=\"" << sx(fx) << "\" y2=\"" << kMarginTop + plot_h + 4
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMarginLeft - 4 << "\" y1=\"" << sy(fy) << "\" x2=\""
        << kMarginLeft << "\" y2=\"" << sy(fy) << "\" stroke=\"black\"/>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" font-size=\"13\" text-anchor=\"middle\">bpp</text>\n";
  const char* ylabel =
      quality == QualityMetric::psnr ? "PSNR (dB)" : "MS-SSIM (dB)";
  out << "<text x=\"16\" y=\"" << kMarginTop + plot_h / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kMarginTop + plot_h / 2 << ")\">" << ylabel << "</text>\n";

  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const Pt& p : series[i]) out << sx(p.x) << "," << sy(p.y) << " ";
    out << "\"/>\n";
    for (const Pt& p : series[i]) {
      out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y)
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    out << "<text x=\"" << kMarginLeft + plot_w - 6 << "\" y=\""
        << kMarginTop + 16 + 16 * static_cast<double>(i)
        << "\" font-size=\"12\" text-anchor=\"end\" fill=\"" << color << "\">"
        << curves[i].label << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw DataError("failed writing plot: " + path);
}

}  // namespace modcodec
