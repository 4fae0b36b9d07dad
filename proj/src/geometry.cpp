#include "courtfusion/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "courtfusion/errors.hpp"

namespace courtfusion::geometry {

namespace {

std::array<double, 9> normalized(std::array<double, 9> m) {
  if (m[8] != 0.0) {
    const double s = m[8];
    for (auto& v : m) v /= s;
    m[8] = 1.0;
  }
  return m;
}

std::array<double, 9> multiply(const std::array<double, 9>& a,
                               const std::array<double, 9>& b) {
  std::array<double, 9> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r[i * 3 + j] = a[i * 3] * b[j] + a[i * 3 + 1] * b[3 + j] + a[i * 3 + 2] * b[6 + j];
  return r;
}

void require_no_collinear_triple(std::span<const Point2, 4> pts, const char* which) {
  static constexpr int kTriples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (const auto& t : kTriples) {
    if (triangle_area(pts[t[0]], pts[t[1]], pts[t[2]]) <= kCollinearAreaEps) {
      std::ostringstream os;
      os << which << " points " << t[0] << "," << t[1] << "," << t[2] << " are collinear ("
         << to_string(pts[t[0]]) << ", " << to_string(pts[t[1]]) << ", "
         << to_string(pts[t[2]]) << ")";
      throw DegenerateConfiguration(os.str());
    }
  }
}

// Similarity transform moving the centroid to the origin with mean distance
// sqrt(2); keeps the 8x8 system well conditioned for pixel-scale inputs.
std::array<double, 9> conditioning(std::span<const Point2, 4> pts) {
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= 4;
  cy /= 4;
  double mean = 0;
  for (const auto& p : pts) mean += std::hypot(p.x - cx, p.y - cy);
  mean /= 4;
  const double s = std::sqrt(2.0) / mean;
  return {s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1};
}

Point2 apply_affine(const std::array<double, 9>& t, Point2 p) {
  return {t[0] * p.x + t[1] * p.y + t[2], t[3] * p.x + t[4] * p.y + t[5]};
}

// Solves a x = b in place with partial pivoting; false when a pivot vanishes.
bool solve8(std::array<std::array<double, 9>, 8>& aug, std::array<double, 8>& x) {
  constexpr int n = 8;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(aug[r][col]) > std::abs(aug[pivot][col])) pivot = r;
    if (std::abs(aug[pivot][col]) < 1e-12) return false;
    std::swap(aug[col], aug[pivot]);
    for (int r = col + 1; r < n; ++r) {
      const double f = aug[r][col] / aug[col][col];
      if (f == 0.0) continue;
      for (int c = col; c <= n; ++c) aug[r][c] -= f * aug[col][c];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double acc = aug[r][n];
    for (int c = r + 1; c < n; ++c) acc -= aug[r][c] * x[c];
    x[r] = acc / aug[r][r];
  }
  return true;
}

}  // namespace

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double triangle_area(Point2 a, Point2 b, Point2 c) {
  return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

std::string to_string(Point2 p) {
  std::ostringstream os;
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& m) : m_(normalized(m)) {}

double Homography::determinant() const {
  const auto& m = m_;
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography compute_homography(std::span<const Point2, 4> src,
                              std::span<const Point2, 4> dst) {
  require_no_collinear_triple(src, "source");
  require_no_collinear_triple(dst, "destination");

  const auto ts = conditioning(src);
  const auto td = conditioning(dst);

  // Unknowns h0..h7 with h8 = 1:
  //   u = (h0 x + h1 y + h2) / (h6 x + h7 y + 1)
  //   v = (h3 x + h4 y + h5) / (h6 x + h7 y + 1)
  std::array<std::array<double, 9>, 8> aug{};
  for (int i = 0; i < 4; ++i) {
    const Point2 s = apply_affine(ts, src[i]);
    const Point2 d = apply_affine(td, dst[i]);
    aug[2 * i] = {s.x, s.y, 1, 0, 0, 0, -d.x * s.x, -d.x * s.y, d.x};
    aug[2 * i + 1] = {0, 0, 0, s.x, s.y, 1, -d.y * s.x, -d.y * s.y, d.y};
  }
  std::array<double, 8> h{};
  if (!solve8(aug, h)) throw DegenerateConfiguration("rank-deficient homography system");

  const std::array<double, 9> hn{h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0};
  const double inv_s = 1.0 / td[0];
  const std::array<double, 9> td_inv{inv_s, 0, -td[2] * inv_s, 0, inv_s, -td[5] * inv_s, 0, 0, 1};
  const auto full = multiply(td_inv, multiply(hn, ts));
  if (full[8] == 0.0)
    throw DegenerateConfiguration("homography maps the source origin to infinity");
  return Homography(full);
}

HomogeneousPoint apply(const Homography& h, Point2 p) {
  const auto& m = h.matrix();
  return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5],
          m[6] * p.x + m[7] * p.y + m[8]};
}

Point2 dehomogenize(HomogeneousPoint hp, double eps) {
  if (!(std::abs(hp.w) > eps)) {
    std::ostringstream os;
    os << "point at infinity (w = " << hp.w << ")";
    throw PointAtInfinity(os.str());
  }
  return {hp.x / hp.w, hp.y / hp.w};
}

Point2 transform(const Homography& h, Point2 p) { return dehomogenize(apply(h, p)); }

Homography invert(const Homography& h) {
  const auto& m = h.matrix();
  const double det = h.determinant();
  if (!(std::abs(det) > kSingularDetEps)) throw SingularMatrix("homography is singular");
  std::array<double, 9> adj{
      m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
      m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
      m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3]};
  for (auto& v : adj) v /= det;
  return Homography(adj);
}

Homography compose(const Homography& a, const Homography& b) {
  return Homography(multiply(a.matrix(), b.matrix()));
}

double CameraCalibration::max_reprojection_error() const {
  double worst = 0.0;
  for (int i = 0; i < 4; ++i)
    worst = std::max(worst, distance(image_to_world(image_corners[i]), world_corners[i]));
  return worst;
}

CameraCalibration calibrate(const Quad& image_corners, const Quad& world_corners) {
  CameraCalibration cal{image_corners, world_corners, {}, {}};
  cal.to_world = compute_homography(image_corners, world_corners);
  cal.from_world = invert(cal.to_world);
  return cal;
}

CourtModel::CourtModel(double width, double length, double boundary_margin)
    : width_(width), length_(length), margin_(boundary_margin) {
  if (!(width > 0.0) || !(length > 0.0) || !std::isfinite(width) || !std::isfinite(length))
    throw InputError("court dimensions must be positive");
  if (!(boundary_margin >= 0.0)) throw InputError("court boundary margin must be >= 0");
}

Quad CourtModel::corners() const {
  return {Point2{0, 0}, Point2{width_, 0}, Point2{width_, length_}, Point2{0, length_}};
}

bool CourtModel::contains(Point2 p) const {
  return p.x >= 0.0 && p.x <= width_ && p.y >= 0.0 && p.y <= length_;
}

bool CourtModel::contains_with_margin(Point2 p) const {
  return p.x >= -margin_ && p.x <= width_ + margin_ && p.y >= -margin_ &&
         p.y <= length_ + margin_;
}

}  // namespace courtfusion::geometry
