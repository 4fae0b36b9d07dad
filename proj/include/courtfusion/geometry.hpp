#pragma once

#include <array>
#include <span>
#include <string>

namespace courtfusion::geometry {

constexpr double kPointAtInfinityEps = 1e-12;
constexpr double kCollinearAreaEps = 1e-9;
constexpr double kSingularDetEps = 1e-12;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct HomogeneousPoint {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
};

double distance(Point2 a, Point2 b);

/// 3x3 projective map stored row-major. Constructed matrices are rescaled so
/// that m[2][2] == 1 whenever that entry is nonzero.
class Homography {
 public:
  Homography();  // identity
  explicit Homography(const std::array<double, 9>& m);

  static Homography identity() { return Homography(); }

  double operator()(int row, int col) const { return m_[row * 3 + col]; }
  const std::array<double, 9>& matrix() const { return m_; }
  double determinant() const;

 private:
  std::array<double, 9> m_;
};

/// Four ordered corners: near-left, near-right, far-right, far-left.
using Quad = std::array<Point2, 4>;

/// Exact four-point homography mapping src[i] onto dst[i].
Homography compute_homography(std::span<const Point2, 4> src,
                              std::span<const Point2, 4> dst);

HomogeneousPoint apply(const Homography& h, Point2 p);

Point2 dehomogenize(HomogeneousPoint hp, double eps = kPointAtInfinityEps);

/// apply() followed by dehomogenize().
Point2 transform(const Homography& h, Point2 p);

Homography invert(const Homography& h);

/// Matrix product a*b, i.e. apply b first, then a.
Homography compose(const Homography& a, const Homography& b);

struct CameraCalibration {
  Quad image_corners;
  Quad world_corners;
  Homography to_world;
  Homography from_world;

  Point2 image_to_world(Point2 p) const { return transform(to_world, p); }
  Point2 world_to_image(Point2 p) const { return transform(from_world, p); }

  /// Largest distance between a mapped image corner and its world corner.
  double max_reprojection_error() const;
};

CameraCalibration calibrate(const Quad& image_corners, const Quad& world_corners);

/// Axis-aligned court rectangle (0,0)-(width,length) in meters.
class CourtModel {
 public:
  static constexpr double kDefaultWidth = 6.10;
  static constexpr double kDefaultLength = 13.40;
  static constexpr double kDefaultMargin = 0.5;

  CourtModel() = default;
  CourtModel(double width, double length, double boundary_margin = kDefaultMargin);

  double width() const { return width_; }
  double length() const { return length_; }
  double boundary_margin() const { return margin_; }
  Quad corners() const;

  bool contains(Point2 p) const;
  bool contains_with_margin(Point2 p) const;

 private:
  double width_ = kDefaultWidth;
  double length_ = kDefaultLength;
  double margin_ = kDefaultMargin;
};

/// Unsigned area of the triangle abc.
double triangle_area(Point2 a, Point2 b, Point2 c);

std::string to_string(Point2 p);

}  // namespace courtfusion::geometry
