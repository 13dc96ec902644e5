#include "mcimplicit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mcimplicit {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 70, kRight = 40, kTop = 48, kBottom = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

double transform(double v, bool log_scale) {
  return log_scale ? std::log10(v) : v;
}

std::string tick_label(double v, bool log_scale) {
  std::ostringstream os;
  if (log_scale) {
    os << "1e" << static_cast<int>(std::lround(v));
  } else {
    os.precision(3);
    os << v;
  }
  return os.str();
}

}  // namespace

std::string SvgLineChart::render() const {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const SvgSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double xv = s.x[i], yv = s.y[i];
      if (log_x && !(xv > 0)) continue;
      if (log_y && !(yv > 0)) continue;
      xmin = std::min(xmin, transform(xv, log_x));
      xmax = std::max(xmax, transform(xv, log_x));
      ymin = std::min(ymin, transform(yv, log_y));
      ymax = std::max(ymax, transform(yv, log_y));
    }
  }
  if (!(xmin <= xmax)) { xmin = 0; xmax = 1; }
  if (!(ymin <= ymax)) { ymin = 0; ymax = 1; }
  if (xmax == xmin) { xmax += 0.5; xmin -= 0.5; }
  if (ymax == ymin) { ymax += 0.5; ymin -= 0.5; }

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
     << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  // Axes with 5 ticks per side.
  os << "<g stroke=\"#333\" stroke-width=\"1\">"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
     << kLeft + plot_w << "\" y2=\"" << kTop + plot_h << "\"/>"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
     << "\" y2=\"" << kTop + plot_h << "\"/></g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << px(fx) << "\" y=\"" << kTop + plot_h + 18
       << "\" text-anchor=\"middle\">" << tick_label(fx, log_x) << "</text>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(fy) + 4
       << "\" text-anchor=\"end\">" << tick_label(fy, log_y) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << kTop + plot_h / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
     << kTop + plot_h / 2 << ")\">" << y_label << "</text>\n</g>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const SvgSeries& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((log_x && !(s.x[i] > 0)) || (log_y && !(s.y[i] > 0))) continue;
      pts << px(transform(s.x[i], log_x)) << "," << py(transform(s.y[i], log_y))
          << " ";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
    const double ly = kTop + 16 + 18 * static_cast<double>(si);
    os << "<line x1=\"" << kLeft + plot_w - 150 << "\" y1=\"" << ly << "\" x2=\""
       << kLeft + plot_w - 126 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << kLeft + plot_w - 120 << "\" y=\"" << ly + 4
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.name
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void SvgLineChart::write_file(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << render();
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace mcimplicit
