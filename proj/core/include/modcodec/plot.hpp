#pragma once

#include <string>
#include <vector>

#include "modcodec/metrics.hpp"

namespace modcodec {

struct PlotCurve {
  std::string label;
  RdCurve curve;
};

// Static SVG: labeled axes (bpp against PSNR dB or MS-SSIM dB), one polyline
// per curve, a small legend. Non-finite quality points are dropped.
void write_rd_plot_svg(const std::string& path,
                       const std::vector<PlotCurve>& curves,
                       QualityMetric quality = QualityMetric::psnr);

}  // namespace modcodec
