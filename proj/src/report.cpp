#include "foilmetric/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "foilmetric/error.hpp"
#include "foilmetric/image_io.hpp"

namespace foilmetric::report {

std::vector<OutlinePixel> extract_outlines(const LabelMask& mask) {
  std::vector<OutlinePixel> out;
  const int w = mask.width();
  const int h = mask.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto k = mask.at(x, y);
      if (k == 0) continue;
      const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 ||
                        mask.at(x - 1, y) != k || mask.at(x + 1, y) != k ||
                        mask.at(x, y - 1) != k || mask.at(x, y + 1) != k;
      if (edge) out.push_back({x, y, k});
    }
  }
  return out;
}

RgbImage render_overlay(const GrayImage& img, const std::vector<OutlinePixel>& outlines,
                        const std::vector<features::Centroid>& markers,
                        const OverlayLines& lines) {
  const int w = img.width();
  const int h = img.height();
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(img.at(x, y), 0.0, 1.0) * 255.0));
      out.set(x, y, {g, g, g});
    }
  }
  constexpr std::array<std::uint8_t, 3> kBlack{0, 0, 0};
  constexpr std::array<std::uint8_t, 3> kRed{255, 0, 0};

  const bool vertical = lines.orientation == stats::Orientation::Vertical;
  for (int pos : lines.positions) {
    if (pos < 0 || pos >= (vertical ? w : h)) throw SizeError("transect line outside image");
    if (vertical) {
      for (int y = 0; y < h; ++y) out.set(pos, y, kBlack);
    } else {
      for (int x = 0; x < w; ++x) out.set(x, pos, kBlack);
    }
  }
  for (const auto& p : outlines) {
    if (!img.contains(p.x, p.y)) throw SizeError("outline pixel outside image");
    out.set(p.x, p.y, kRed);
  }
  for (const auto& c : markers) {
    const int cx = static_cast<int>(std::lround(c.x));
    const int cy = static_cast<int>(std::lround(c.y));
    for (int dy = -3; dy <= 3; ++dy) {
      for (int dx = -3; dx <= 3; ++dx) {
        if (dx * dx + dy * dy > 9 || !img.contains(cx + dx, cy + dy)) continue;
        out.set(cx + dx, cy + dy, kBlack);
      }
    }
  }
  return out;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
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

}  // namespace

std::string plot_svg(const stats::Histogram& hist, const stats::KdeCurve* kde,
                     const std::string& title, const std::string& x_label) {
  if (hist.counts.empty() || hist.edges.size() != hist.counts.size() + 1 || hist.n == 0) {
    throw ValidationError("plot: malformed histogram");
  }
  constexpr double kW = 480.0, kH = 320.0;
  constexpr double kLeft = 60.0, kRight = 20.0, kTop = 36.0, kBottom = 48.0;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;

  double x0 = hist.edges.front();
  double x1 = hist.edges.back();
  std::vector<double> heights(hist.counts.size());
  double y_max = 0.0;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double width = hist.edges[i + 1] - hist.edges[i];
    heights[i] = width > 0.0 ? static_cast<double>(hist.counts[i]) /
                                   (static_cast<double>(hist.n) * width)
                             : 0.0;
    y_max = std::max(y_max, heights[i]);
  }
  if (kde && !kde->grid.empty()) {
    x0 = std::min(x0, kde->grid.front());
    x1 = std::max(x1, kde->grid.back());
    for (double d : kde->density) y_max = std::max(y_max, d);
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y_max > 0.0)) y_max = 1.0;
  y_max *= 1.05;

  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kTop + ph - y / y_max * ph; };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\" "
       "viewBox=\"0 0 480 320\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"480\" height=\"320\" fill=\"white\"/>\n";
  s += "<text x=\"240\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\">" + escape_xml(title) + "</text>\n";

  s += "<g fill=\"#b0b0b0\" stroke=\"#606060\" stroke-width=\"0.5\">\n";
  for (std::size_t i = 0; i < heights.size(); ++i) {
    const double bx = sx(hist.edges[i]);
    const double bw = sx(hist.edges[i + 1]) - bx;
    const double top = sy(heights[i]);
    s += "<rect x=\"" + num(bx) + "\" y=\"" + num(top) + "\" width=\"" + num(bw) +
         "\" height=\"" + num(sy(0.0) - top) + "\"/>\n";
  }
  s += "</g>\n";

  if (kde && !kde->grid.empty()) {
    s += "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < kde->grid.size(); ++i) {
      if (i) s += ' ';
      s += num(sx(kde->grid[i])) + "," + num(sy(kde->density[i]));
    }
    s += "\"/>\n";
  }

  // Axes and ticks.
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(kLeft + pw) +
       "\" y2=\"" + num(kTop + ph) + "\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
       "\" y2=\"" + num(kTop + ph) + "\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i < kTicks; ++i) {
    const double xv = x0 + (x1 - x0) * i / (kTicks - 1);
    const double yv = y_max * i / (kTicks - 1);
    s += "<line x1=\"" + num(sx(xv)) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(sx(xv)) +
         "\" y2=\"" + num(kTop + ph + 5) + "\"/>\n";
    s += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(sy(yv)) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(sy(yv)) + "\"/>\n";
  }
  s += "</g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"10\">\n";
  for (int i = 0; i < kTicks; ++i) {
    const double xv = x0 + (x1 - x0) * i / (kTicks - 1);
    const double yv = y_max * i / (kTicks - 1);
    s += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(kTop + ph + 17) +
         "\" text-anchor=\"middle\">" + tick(xv) + "</text>\n";
    s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(sy(yv) + 3) +
         "\" text-anchor=\"end\">" + tick(yv) + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kH - 8) +
       "\" text-anchor=\"middle\">" + escape_xml(x_label) + "</text>\n";
  s += "<text x=\"14\" y=\"" + num(kTop + ph / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " + num(kTop + ph / 2) +
       ")\">density</text>\n";
  s += "</g>\n</svg>\n";
  return s;
}

void emit_plot(const stats::Histogram& hist, const stats::KdeCurve* kde, const std::string& title,
               const std::string& x_label, const std::filesystem::path& path) {
  write_text_file(path, plot_svg(hist, kde, title, x_label));
}

}  // namespace foilmetric::report
