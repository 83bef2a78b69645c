#include "camctl/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace camctl {

namespace {

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

// Weights of source cells [floor(a), ceil(b)) overlapping the interval [a, b).
struct Span1D {
  int first = 0;
  std::vector<float> weights;
};

std::vector<Span1D> area_spans(int src, int dst) {
  std::vector<Span1D> spans(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double a = i * scale;
    const double b = (i + 1) * scale;
    const int first = static_cast<int>(std::floor(a));
    const int last = std::min(src, static_cast<int>(std::ceil(b)));
    Span1D s;
    s.first = first;
    for (int j = first; j < last; ++j) {
      const double overlap = std::min<double>(b, j + 1) - std::max<double>(a, j);
      s.weights.push_back(static_cast<float>(std::max(0.0, overlap) / scale));
    }
    spans[i] = std::move(s);
  }
  return spans;
}

}  // namespace

ImageF gaussian_blur(const ImageF& src, double sigma) {
  if (sigma <= 0.0 || src.empty()) return src;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = src.width();
  const int h = src.height();

  ImageF tmp(w, h);
  for (int y = 0; y < h; ++y) {
    const float* in = src.row(y);
    float* out = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) {
        const int xx = std::clamp(x + i, 0, w - 1);
        acc += k[i + r] * in[xx];
      }
      out[x] = acc;
    }
  }
  ImageF dst(w, h);
  for (int y = 0; y < h; ++y) {
    float* out = dst.row(y);
    for (int i = -r; i <= r; ++i) {
      const float* in = tmp.row(std::clamp(y + i, 0, h - 1));
      const float kv = k[i + r];
      for (int x = 0; x < w; ++x) out[x] += kv * in[x];
    }
  }
  return dst;
}

ImageF resize_area(const ImageF& src, int width, int height) {
  if (src.width() == width && src.height() == height) return src;
  const auto xs = area_spans(src.width(), width);
  const auto ys = area_spans(src.height(), height);

  ImageF dst(width, height);
  for (int oy = 0; oy < height; ++oy) {
    const auto& sy = ys[oy];
    for (int ox = 0; ox < width; ++ox) {
      const auto& sx = xs[ox];
      float acc = 0.0f;
      for (std::size_t j = 0; j < sy.weights.size(); ++j) {
        const float* in = src.row(sy.first + static_cast<int>(j));
        float racc = 0.0f;
        for (std::size_t i = 0; i < sx.weights.size(); ++i) {
          racc += sx.weights[i] * in[sx.first + static_cast<int>(i)];
        }
        acc += sy.weights[j] * racc;
      }
      dst(ox, oy) = acc;
    }
  }
  return dst;
}

ImageF to_unit_float(const ImageU16& src, int max_code) {
  ImageF dst(src.width(), src.height());
  const float inv = 1.0f / static_cast<float>(max_code);
  auto in = src.pixels();
  auto out = dst.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<float>(in[i]) * inv;
  return dst;
}

double mean_value(const ImageF& img) {
  if (img.empty()) return 0.0;
  const auto px = img.pixels();
  const double sum = std::accumulate(px.begin(), px.end(), 0.0);
  return sum / static_cast<double>(px.size());
}

}  // namespace camctl
