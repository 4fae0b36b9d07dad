#include "courtfusion/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "courtfusion/errors.hpp"

namespace courtfusion::features {

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
  if (width < 0 || height < 0) throw BadGeometry("negative image dimensions");
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0) throw BadGeometry("negative image dimensions");
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw LengthMismatch("image data length does not match width x height");
  for (double v : data_)
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("image intensity outside [0,1]");
}

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

GradientField gradients(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) throw ImageTooSmall("gradients need an image of at least 3x3 pixels");

  GradientField g;
  g.width = w;
  g.height = h;
  g.magnitude.resize(static_cast<std::size_t>(w) * h);
  g.orientation.resize(g.magnitude.size());

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx;
      if (x == 0)
        gx = 2.0 * (img.at(1, y) - img.at(0, y));
      else if (x == w - 1)
        gx = 2.0 * (img.at(w - 1, y) - img.at(w - 2, y));
      else
        gx = img.at(x + 1, y) - img.at(x - 1, y);

      double gy;
      if (y == 0)
        gy = 2.0 * (img.at(x, 1) - img.at(x, 0));
      else if (y == h - 1)
        gy = 2.0 * (img.at(x, h - 1) - img.at(x, h - 2));
      else
        gy = img.at(x, y + 1) - img.at(x, y - 1);

      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;

      const auto i = static_cast<std::size_t>(y) * w + x;
      g.magnitude[i] = std::hypot(gx, gy);
      g.orientation[i] = angle;
    }
  }
  return g;
}

std::size_t HogParams::descriptor_length() const {
  validate();
  return static_cast<std::size_t>(blocks_x()) * blocks_y() * block * block * bins;
}

void HogParams::validate() const {
  if (cell <= 0 || block <= 0 || bins <= 0 || window_w <= 0 || window_h <= 0)
    throw BadGeometry("HOG parameters must be positive");
  if (window_w % cell != 0 || window_h % cell != 0)
    throw BadGeometry("HOG window dimensions must be divisible by the cell size");
  if (cells_x() < block || cells_y() < block)
    throw BadGeometry("HOG window smaller than one block");
  if (!(clip > 0.0)) throw BadGeometry("HOG clip value must be positive");
}

HogDescriptor hog(const GrayImage& img, const PixelRect& window, const HogParams& params) {
  params.validate();
  if (window.x < 0 || window.y < 0 || window.x + window.w > img.width() ||
      window.y + window.h > img.height())
    throw WindowOutOfBounds("HOG window exceeds image bounds");
  return hog(gradients(img), window, params);
}

HogDescriptor hog(const GradientField& grad, const PixelRect& window, const HogParams& params) {
  params.validate();
  if (window.w != params.window_w || window.h != params.window_h) {
    if (window.w % params.cell != 0 || window.h % params.cell != 0)
      throw BadGeometry("window dimensions must be divisible by the cell size");
    throw BadGeometry("window size does not match the HOG parameters");
  }
  if (window.x < 0 || window.y < 0 || window.x + window.w > grad.width ||
      window.y + window.h > grad.height)
    throw WindowOutOfBounds("HOG window exceeds image bounds");

  const int cx_n = params.cells_x();
  const int cy_n = params.cells_y();
  const int bins = params.bins;
  const double bin_width = 180.0 / bins;

  std::vector<double> cells(static_cast<std::size_t>(cx_n) * cy_n * bins, 0.0);
  for (int cy = 0; cy < cy_n; ++cy) {
    for (int cx = 0; cx < cx_n; ++cx) {
      double* hist = &cells[(static_cast<std::size_t>(cy) * cx_n + cx) * bins];
      for (int py = 0; py < params.cell; ++py) {
        const int y = window.y + cy * params.cell + py;
        for (int px = 0; px < params.cell; ++px) {
          const int x = window.x + cx * params.cell + px;
          const auto i = static_cast<std::size_t>(y) * grad.width + x;
          const double mag = grad.magnitude[i];
          if (mag == 0.0) continue;
          const double pos = grad.orientation[i] / bin_width - 0.5;
          const double lower = std::floor(pos);
          const double frac = pos - lower;
          const int b0 = (static_cast<int>(lower) + bins) % bins;
          const int b1 = (b0 + 1) % bins;
          hist[b0] += mag * (1.0 - frac);
          hist[b1] += mag * frac;
        }
      }
    }
  }

  HogDescriptor out;
  out.params = params;
  out.values.reserve(params.descriptor_length());
  const std::size_t block_len = static_cast<std::size_t>(params.block) * params.block * bins;
  std::vector<double> v(block_len);
  for (int by = 0; by < params.blocks_y(); ++by) {
    for (int bx = 0; bx < params.blocks_x(); ++bx) {
      std::size_t k = 0;
      for (int cy = by; cy < by + params.block; ++cy)
        for (int cx = bx; cx < bx + params.block; ++cx)
          for (int b = 0; b < bins; ++b)
            v[k++] = cells[(static_cast<std::size_t>(cy) * cx_n + cx) * bins + b];

      // L2-Hys: normalize, clip, renormalize.
      double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
      if (norm > 0.0)
        for (auto& e : v) e = std::min(e / norm, params.clip);
      norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
      if (norm > 0.0)
        for (auto& e : v) e /= norm;
      out.values.insert(out.values.end(), v.begin(), v.end());
    }
  }
  return out;
}

double svm_score(const LinearSvmModel& model, std::span<const double> descriptor) {
  if (model.weights.size() != descriptor.size()) {
    std::ostringstream os;
    os << "SVM weights length " << model.weights.size() << " does not match descriptor length "
       << descriptor.size();
    throw LengthMismatch(os.str());
  }
  return std::inner_product(model.weights.begin(), model.weights.end(), descriptor.begin(), 0.0) +
         model.bias;
}

Detection Detection::from_box(const Box& box, double score) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw BadGeometry("detection box must have positive size");
  Detection d;
  d.box = box;
  d.score = score;
  d.foot_point = {box.x + box.w / 2.0, box.y + box.h};
  return d;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold < 1.0))
    throw InputError("NMS IoU threshold must lie in [0,1)");
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (auto& d : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return iou(k.box, d.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

std::vector<Detection> detect(const GrayImage& img, const LinearSvmModel& model, int stride,
                              double nms_iou) {
  if (stride < 1) throw InputError("detection stride must be >= 1");
  if (!(nms_iou >= 0.0 && nms_iou < 1.0)) throw InputError("NMS IoU threshold must lie in [0,1)");
  const HogParams& p = model.params;
  if (model.weights.size() != p.descriptor_length())
    throw LengthMismatch("SVM model does not match its HOG parameters");

  const GradientField grad = gradients(img);
  std::vector<Detection> raw;
  for (int y = 0; y + p.window_h <= img.height(); y += stride) {
    for (int x = 0; x + p.window_w <= img.width(); x += stride) {
      const HogDescriptor d = hog(grad, {x, y, p.window_w, p.window_h}, p);
      const double s = svm_score(model, d);
      if (s > model.threshold)
        raw.push_back(Detection::from_box(
            {static_cast<double>(x), static_cast<double>(y), static_cast<double>(p.window_w),
             static_cast<double>(p.window_h)},
            s));
    }
  }
  return nms(std::move(raw), nms_iou);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LengthMismatch("cosine similarity of vectors of unequal length");
  if (a.empty()) throw ZeroVector("cosine similarity of empty vectors");
  const double ab = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double aa = std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
  const double bb = std::inner_product(b.begin(), b.end(), b.begin(), 0.0);
  if (aa == 0.0 || bb == 0.0) throw ZeroVector("cosine similarity with a zero vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

GrayImage resample(const GrayImage& img, const Box& region, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw BadGeometry("resample target must be non-empty");
  if (!(region.w > 0.0) || !(region.h > 0.0)) throw BadGeometry("resample region must be non-empty");
  if (img.width() == 0 || img.height() == 0) throw ImageTooSmall("resample of an empty image");
  if (region.x < 0.0 || region.y < 0.0 || region.x + region.w > img.width() ||
      region.y + region.h > img.height())
    throw WindowOutOfBounds("resample region exceeds image bounds");

  GrayImage out(out_w, out_h);
  const double sx = region.w / out_w;
  const double sy = region.h / out_h;
  for (int j = 0; j < out_h; ++j) {
    const double fy = std::clamp(region.y + (j + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (int i = 0; i < out_w; ++i) {
      const double fx = std::clamp(region.x + (i + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - x0;
      const double top = img.at(x0, y0) * (1 - tx) + img.at(x1, y0) * tx;
      const double bot = img.at(x0, y1) * (1 - tx) + img.at(x1, y1) * tx;
      out.at(i, j) = top * (1 - ty) + bot * ty;
    }
  }
  return out;
}

std::vector<double> reid_feature(const GrayImage& img, const Box& box, const HogParams& params) {
  const GrayImage patch = resample(img, box, params.window_w, params.window_h);
  return hog(patch, {0, 0, params.window_w, params.window_h}, params).values;
}

}  // namespace courtfusion::features
