#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "courtfusion/geometry.hpp"

namespace courtfusion::features {

using geometry::Point2;

/// Row-major grayscale image with intensities in [0,1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const double> data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

double iou(const Box& a, const Box& b);

/// Per-pixel gradient magnitude and unsigned orientation in degrees [0,180).
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> magnitude;
  std::vector<double> orientation;
};

/// Central [-1,0,1] differences; border pixels use the one-sided difference
/// scaled by two (equivalent to linear extrapolation of the missing neighbour).
GradientField gradients(const GrayImage& img);

struct HogParams {
  int window_w = 64;
  int window_h = 128;
  int cell = 8;
  int block = 2;  // cells per block side
  int bins = 9;
  double clip = 0.2;

  int cells_x() const { return window_w / cell; }
  int cells_y() const { return window_h / cell; }
  int blocks_x() const { return cells_x() - block + 1; }
  int blocks_y() const { return cells_y() - block + 1; }
  std::size_t descriptor_length() const;
  void validate() const;

  friend bool operator==(const HogParams&, const HogParams&) = default;
};

struct HogDescriptor {
  std::vector<double> values;
  HogParams params;
};

/// Descriptor of `window` (size params.window_w x params.window_h) using the
/// gradient field of the whole image.
HogDescriptor hog(const GrayImage& img, const PixelRect& window, const HogParams& params = {});
HogDescriptor hog(const GradientField& grad, const PixelRect& window, const HogParams& params = {});

struct LinearSvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double threshold = 0.0;
  HogParams params;
};

double svm_score(const LinearSvmModel& model, std::span<const double> descriptor);
inline double svm_score(const LinearSvmModel& model, const HogDescriptor& d) {
  return svm_score(model, d.values);
}

struct Detection {
  Box box;
  double score = 0.0;
  Point2 foot_point;
  std::vector<double> appearance;  // optional ReID/correlation vector

  static Detection from_box(const Box& box, double score);
};

/// Greedy suppression in descending score order; ties keep input order.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

/// Single-scale sliding-window detection; windows scoring above
/// model.threshold survive NMS and are returned by descending score.
std::vector<Detection> detect(const GrayImage& img, const LinearSvmModel& model, int stride,
                              double nms_iou);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Bilinear resample of `region` into an out_w x out_h image.
GrayImage resample(const GrayImage& img, const Box& region, int out_w, int out_h);

/// ReID appearance vector: the detection box rescaled to the HOG window and described.
std::vector<double> reid_feature(const GrayImage& img, const Box& box, const HogParams& params = {});

}  // namespace courtfusion::features
