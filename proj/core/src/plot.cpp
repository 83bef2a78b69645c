#include "camctl/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

namespace camctl {

namespace {

// 5x7 glyphs, one byte per row, high bit = leftmost column.
struct Glyph {
  char c;
  std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'0', {0x70, 0x88, 0x98, 0xA8, 0xC8, 0x88, 0x70}}, {'1', {0x20, 0x60, 0x20, 0x20, 0x20, 0x20, 0x70}},
    {'2', {0x70, 0x88, 0x08, 0x10, 0x20, 0x40, 0xF8}}, {'3', {0xF8, 0x10, 0x20, 0x10, 0x08, 0x88, 0x70}},
    {'4', {0x10, 0x30, 0x50, 0x90, 0xF8, 0x10, 0x10}}, {'5', {0xF8, 0x80, 0xF0, 0x08, 0x08, 0x88, 0x70}},
    {'6', {0x30, 0x40, 0x80, 0xF0, 0x88, 0x88, 0x70}}, {'7', {0xF8, 0x08, 0x10, 0x20, 0x40, 0x40, 0x40}},
    {'8', {0x70, 0x88, 0x88, 0x70, 0x88, 0x88, 0x70}}, {'9', {0x70, 0x88, 0x88, 0x78, 0x08, 0x10, 0x60}},
    {'A', {0x70, 0x88, 0x88, 0xF8, 0x88, 0x88, 0x88}}, {'B', {0xF0, 0x88, 0x88, 0xF0, 0x88, 0x88, 0xF0}},
    {'C', {0x70, 0x88, 0x80, 0x80, 0x80, 0x88, 0x70}}, {'D', {0xE0, 0x90, 0x88, 0x88, 0x88, 0x90, 0xE0}},
    {'E', {0xF8, 0x80, 0x80, 0xF0, 0x80, 0x80, 0xF8}}, {'F', {0xF8, 0x80, 0x80, 0xF0, 0x80, 0x80, 0x80}},
    {'G', {0x70, 0x88, 0x80, 0xB8, 0x88, 0x88, 0x78}}, {'H', {0x88, 0x88, 0x88, 0xF8, 0x88, 0x88, 0x88}},
    {'I', {0x70, 0x20, 0x20, 0x20, 0x20, 0x20, 0x70}}, {'J', {0x38, 0x10, 0x10, 0x10, 0x10, 0x90, 0x60}},
    {'K', {0x88, 0x90, 0xA0, 0xC0, 0xA0, 0x90, 0x88}}, {'L', {0x80, 0x80, 0x80, 0x80, 0x80, 0x80, 0xF8}},
    {'M', {0x88, 0xD8, 0xA8, 0xA8, 0x88, 0x88, 0x88}}, {'N', {0x88, 0x88, 0xC8, 0xA8, 0x98, 0x88, 0x88}},
    {'O', {0x70, 0x88, 0x88, 0x88, 0x88, 0x88, 0x70}}, {'P', {0xF0, 0x88, 0x88, 0xF0, 0x80, 0x80, 0x80}},
    {'Q', {0x70, 0x88, 0x88, 0x88, 0xA8, 0x90, 0x68}}, {'R', {0xF0, 0x88, 0x88, 0xF0, 0xA0, 0x90, 0x88}},
    {'S', {0x78, 0x80, 0x80, 0x70, 0x08, 0x08, 0xF0}}, {'T', {0xF8, 0x20, 0x20, 0x20, 0x20, 0x20, 0x20}},
    {'U', {0x88, 0x88, 0x88, 0x88, 0x88, 0x88, 0x70}}, {'V', {0x88, 0x88, 0x88, 0x88, 0x88, 0x50, 0x20}},
    {'W', {0x88, 0x88, 0x88, 0xA8, 0xA8, 0xA8, 0x50}}, {'X', {0x88, 0x88, 0x50, 0x20, 0x50, 0x88, 0x88}},
    {'Y', {0x88, 0x88, 0x88, 0x50, 0x20, 0x20, 0x20}}, {'Z', {0xF8, 0x08, 0x10, 0x20, 0x40, 0x80, 0xF8}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x60, 0x60}}, {'-', {0x00, 0x00, 0x00, 0xF8, 0x00, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF8}}, {':', {0x00, 0x60, 0x60, 0x00, 0x60, 0x60, 0x00}},
    {'/', {0x08, 0x08, 0x10, 0x20, 0x40, 0x80, 0x80}}, {'(', {0x10, 0x20, 0x40, 0x40, 0x40, 0x20, 0x10}},
    {')', {0x40, 0x20, 0x10, 0x10, 0x10, 0x20, 0x40}}, {'+', {0x00, 0x20, 0x20, 0xF8, 0x20, 0x20, 0x00}},
    {'#', {0x50, 0x50, 0xF8, 0x50, 0xF8, 0x50, 0x50}}, {'e', {0x00, 0x00, 0x70, 0x88, 0xF8, 0x80, 0x70}},
};

const Glyph* find_glyph(char c) {
  for (const auto& g : kFont) {
    if (g.c == c) return &g;
  }
  return nullptr;
}

class Canvas {
 public:
  Canvas(int w, int h) : img_(w, h, Rgb{255, 255, 255}) {}

  void set(int x, int y, Rgb c) {
    if (x >= 0 && y >= 0 && x < img_.width() && y < img_.height()) img_(x, y) = c;
  }
  void fill(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::max(0, y0); y <= std::min(img_.height() - 1, y1); ++y) {
      for (int x = std::max(0, x0); x <= std::min(img_.width() - 1, x1); ++x) img_(x, y) = c;
    }
  }
  void line(double x0, double y0, double x1, double y1, Rgb c) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      set(static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
    }
  }
  void text(int x, int y, const std::string& s, Rgb c) {
    for (char ch : s) {
      const Glyph* g = find_glyph(ch);
      if (!g) g = find_glyph(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
      if (g) {
        for (int r = 0; r < 7; ++r) {
          for (int k = 0; k < 5; ++k) {
            if (g->rows[r] & (0x80 >> k)) set(x + k, y + r, c);
          }
        }
      }
      x += 6;
    }
  }
  ImageRgb take() { return std::move(img_); }

 private:
  ImageRgb img_;
};

std::string tick_label(double v) {
  char buf[32];
  const double a = std::abs(v);
  if (a != 0.0 && (a < 1e-2 || a >= 1e5)) {
    std::snprintf(buf, sizeof buf, "%.0e", v);
  } else if (a < 10.0 && v != std::floor(v)) {
    std::snprintf(buf, sizeof buf, "%.2g", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  }
  return buf;
}

}  // namespace

Rgb palette(std::size_t i) {
  static constexpr Rgb kColors[] = {{214, 39, 40}, {31, 119, 180}, {44, 160, 44}, {255, 127, 14},
                                    {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {23, 190, 207}};
  return kColors[i % (sizeof kColors / sizeof kColors[0])];
}

ImageRgb render_panels(const std::vector<Panel>& panels, int width, int panel_height) {
  if (panels.empty()) throw InvalidArgument("nothing to plot");
  Canvas canvas(width, panel_height * static_cast<int>(panels.size()));
  const Rgb black{0, 0, 0};
  const Rgb grid{225, 225, 225};
  const int left = 70, right = 150, top = 24, bottom = 28;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    const int oy = static_cast<int>(p) * panel_height;
    const int x0 = left, x1 = width - right, y0 = oy + top, y1 = oy + panel_height - bottom;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    auto ty = [&](double v) { return panel.log_y ? std::log10(std::max(v, 1e-12)) : v; };
    for (const auto& s : panel.series) {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, ty(s.y[i]));
        ymax = std::max(ymax, ty(s.y[i]));
      }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    auto px = [&](double x) { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); };
    auto py = [&](double y) { return y1 - (ty(y) - ymin) / (ymax - ymin) * (y1 - y0); };

    for (const auto& [a, b] : panel.shaded_x) {
      canvas.fill(static_cast<int>(px(std::max(a, xmin))), y0, static_cast<int>(px(std::min(b, xmax))), y1,
                  Rgb{255, 243, 205});
    }
    for (int k = 0; k <= 4; ++k) {
      const double yv = ymin + (ymax - ymin) * k / 4.0;
      const int yy = static_cast<int>(std::lround(y1 - (yv - ymin) / (ymax - ymin) * (y1 - y0)));
      canvas.line(x0, yy, x1, yy, grid);
      canvas.text(4, yy - 3, tick_label(panel.log_y ? std::pow(10.0, yv) : yv), black);
      const double xv = xmin + (xmax - xmin) * k / 4.0;
      const int xx = static_cast<int>(std::lround(px(xv)));
      canvas.line(xx, y1, xx, y1 + 4, black);
      canvas.text(xx - 6, y1 + 8, tick_label(xv), black);
    }
    canvas.line(x0, y0, x0, y1, black);
    canvas.line(x0, y1, x1, y1, black);
    canvas.text(x0, oy + 8, panel.title, black);

    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const Series& series = panel.series[s];
      bool have_prev = false;
      double lx = 0, ly = 0;
      for (std::size_t i = 0; i < series.x.size() && i < series.y.size(); ++i) {
        if (!std::isfinite(series.y[i])) {
          have_prev = false;
          continue;
        }
        const double cx = px(series.x[i]);
        const double cy = py(series.y[i]);
        if (have_prev) canvas.line(lx, ly, cx, cy, series.color);
        lx = cx;
        ly = cy;
        have_prev = true;
      }
      const int ly0 = y0 + 4 + static_cast<int>(s) * 12;
      canvas.fill(x1 + 10, ly0 + 2, x1 + 24, ly0 + 4, series.color);
      canvas.text(x1 + 28, ly0, series.label, black);
    }
  }
  return canvas.take();
}

ImageRgb plot_traces(const std::vector<EpisodeTrace>& traces) {
  if (traces.empty()) throw InvalidArgument("no traces to plot");
  Panel nfm{"NFM (inlier matches)", {}, false, {}};
  Panel gain{"GAIN (DB)", {}, false, {}};
  Panel exposure{"EXPOSURE (MS)", {}, true, {}};
  const auto& rows0 = traces.front().rows;
  for (std::size_t t = 0; t < rows0.size();) {
    if (rows0[t].segment != SegmentTag::dynamic_lighting) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end + 1 < rows0.size() && rows0[end + 1].segment == SegmentTag::dynamic_lighting) ++end;
    for (Panel* p : {&nfm, &gain, &exposure}) {
      p->shaded_x.emplace_back(static_cast<double>(t), static_cast<double>(end));
    }
    t = end + 1;
  }
  for (std::size_t i = 0; i < traces.size(); ++i) {
    Series n{traces[i].controller, {}, {}, palette(i)};
    Series g = n, e = n;
    for (const auto& r : traces[i].rows) {
      const auto x = static_cast<double>(r.time_index);
      n.x.push_back(x);
      n.y.push_back(r.nfm == kUndefinedNfm ? std::numeric_limits<double>::quiet_NaN() : r.nfm);
      g.x.push_back(x);
      g.y.push_back(r.params.gain_db());
      e.x.push_back(x);
      e.y.push_back(r.params.exposure_s() * 1e3);
    }
    nfm.series.push_back(std::move(n));
    gain.series.push_back(std::move(g));
    exposure.series.push_back(std::move(e));
  }
  return render_panels({nfm, gain, exposure});
}

ImageRgb plot_curve(const std::vector<EpochLog>& curve) {
  Panel loss{"LOSS", {}, true, {}};
  Series tr{"train", {}, {}, palette(0)};
  Series ho{"holdout", {}, {}, palette(1)};
  for (const auto& e : curve) {
    tr.x.push_back(e.epoch);
    tr.y.push_back(e.train_loss);
    ho.x.push_back(e.epoch);
    ho.y.push_back(e.holdout_loss);
  }
  loss.series = {tr, ho};
  return render_panels({loss});
}

}  // namespace camctl
