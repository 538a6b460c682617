#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "phases/io.hpp"

namespace phases::io {

namespace {

struct Rgb {
  double r, g, b;
};

constexpr std::array<Rgb, 5> kRamp{{{0x44, 0x01, 0x54},
                                    {0x3b, 0x52, 0x8b},
                                    {0x21, 0x91, 0x8c},
                                    {0x5e, 0xc9, 0x62},
                                    {0xfd, 0xe7, 0x25}}};

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(c.r)),
                static_cast<int>(std::lround(c.g)), static_cast<int>(std::lround(c.b)));
  return buf;
}

std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(kRamp.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), kRamp.size() - 2);
  const double f = t - static_cast<double>(i);
  const Rgb& a = kRamp[i];
  const Rgb& b = kRamp[i + 1];
  return hex({a.r + f * (b.r - a.r), a.g + f * (b.g - a.g), a.b + f * (b.b - a.b)});
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string px(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string phase_map_csv(const PhaseMap& map) {
  const std::size_t p = static_cast<std::size_t>(map.param_podality);
  const std::size_t nparams = p + p * (p + 1) / 2;
  std::string out = "ix,iy,x,y,feasible,entropy,podality,symmetric_bipodal,constant,transition,d_x,d_y,derivative_norm";
  for (std::size_t i = 0; i < nparams; ++i) out += ",p" + std::to_string(i);
  out += ",error\n";
  for (const auto& c : map.cells) {
    out += std::to_string(c.ix) + "," + std::to_string(c.iy) + "," + format_real(c.x) + "," + format_real(c.y) + ",";
    out += c.feasible ? "1" : "0";
    if (c.feasible && c.result) {
      const auto& r = *c.result;
      out += "," + format_real(r.entropy) + "," + std::to_string(r.podality) + "," +
             (r.flags.symmetric_bipodal ? "1" : "0") + "," + (r.flags.constant ? "1" : "0") + "," +
             (c.transition ? "1" : "0") + "," + format_real(c.d_x) + "," + format_real(c.d_y) + "," +
             format_real(c.derivative_norm);
      for (std::size_t i = 0; i < nparams; ++i) out += "," + (i < c.params.size() ? format_real(c.params[i]) : "");
    } else {
      out += ",,,,,0,,,";
      for (std::size_t i = 0; i < nparams; ++i) out += ",";
    }
    out += "," + (c.error.empty() ? std::string() : quote(c.error)) + "\n";
  }
  return out;
}

std::string phase_map_svg(const PhaseMap& map, HeatmapColor color) {
  const int nx = map.grid.nx, ny = map.grid.ny;
  const double plot = 480.0;
  const double cw = plot / nx, ch = plot / ny;
  const double left = 70.0, top = 40.0, legend_w = 18.0;
  const double width = left + plot + 100.0, height = top + plot + 60.0;

  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& c : map.cells) {
    if (!c.feasible || !c.result) continue;
    const double v = color == HeatmapColor::Entropy ? c.result->entropy : c.result->podality;
    lo = any ? std::min(lo, v) : v;
    hi = any ? std::max(hi, v) : v;
    any = true;
  }
  if (color == HeatmapColor::Podality) lo = std::min(lo, 1.0);
  const double span = hi > lo ? hi - lo : 1.0;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(width) + "\" height=\"" + px(height) +
       "\" viewBox=\"0 0 " + px(width) + " " + px(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  const std::string what = color == HeatmapColor::Entropy ? "entropy" : "podality";
  s += "<text x=\"" + px(left) + "\" y=\"24\">" + escape_xml(map.model) + " (" + what + ")</text>\n";

  s += "<g shape-rendering=\"crispEdges\">\n";
  for (const auto& c : map.cells) {
    const double x = left + c.ix * cw;
    const double y = top + (ny - 1 - c.iy) * ch;
    std::string fill = "#d9d9d9";
    if (c.feasible && c.result) {
      const double v = color == HeatmapColor::Entropy ? c.result->entropy : c.result->podality;
      fill = ramp((v - lo) / span);
    }
    s += "<rect x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" + px(cw) + "\" height=\"" + px(ch) +
         "\" fill=\"" + fill + "\"/>\n";
  }
  s += "</g>\n";
  for (const auto& c : map.cells) {
    if (!c.transition) continue;
    const double x = left + c.ix * cw;
    const double y = top + (ny - 1 - c.iy) * ch;
    s += "<rect x=\"" + px(x + 0.75) + "\" y=\"" + px(y + 0.75) + "\" width=\"" + px(cw - 1.5) + "\" height=\"" +
         px(ch - 1.5) + "\" fill=\"none\" stroke=\"#e31a1c\" stroke-width=\"1.5\"/>\n";
  }

  s += "<rect x=\"" + px(left) + "\" y=\"" + px(top) + "\" width=\"" + px(plot) + "\" height=\"" + px(plot) +
       "\" fill=\"none\" stroke=\"#000000\"/>\n";
  const std::string ylabel = map.grid.y_relative_to_er ? "offset from ER curve" : "second density";
  s += "<text x=\"" + px(left) + "\" y=\"" + px(top + plot + 16) + "\">" + num(map.grid.x_min) + "</text>\n";
  s += "<text x=\"" + px(left + plot) + "\" y=\"" + px(top + plot + 16) + "\" text-anchor=\"end\">" +
       num(map.grid.x_max) + "</text>\n";
  s += "<text x=\"" + px(left + plot / 2) + "\" y=\"" + px(top + plot + 36) +
       "\" text-anchor=\"middle\">first density</text>\n";
  s += "<text x=\"" + px(left - 6) + "\" y=\"" + px(top + plot) + "\" text-anchor=\"end\">" + num(map.grid.y_min) +
       "</text>\n";
  s += "<text x=\"" + px(left - 6) + "\" y=\"" + px(top + 10) + "\" text-anchor=\"end\">" + num(map.grid.y_max) +
       "</text>\n";
  s += "<text transform=\"translate(" + px(left - 40) + "," + px(top + plot / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + ylabel + "</text>\n";

  // legend
  const double lx = left + plot + 24;
  const int steps = 64;
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    const double y = top + plot - (i + 1) * plot / steps;
    s += "<rect x=\"" + px(lx) + "\" y=\"" + px(y) + "\" width=\"" + px(legend_w) + "\" height=\"" +
         px(plot / steps + 0.5) + "\" fill=\"" + ramp(t) + "\"/>\n";
  }
  s += "<text x=\"" + px(lx + legend_w + 4) + "\" y=\"" + px(top + plot) + "\">" + num(lo) + "</text>\n";
  s += "<text x=\"" + px(lx + legend_w + 4) + "\" y=\"" + px(top + 10) + "\">" + num(any ? hi : lo) + "</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace phases::io
