#include "aerotraj/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "aerotraj/errors.hpp"

namespace aerotraj {

double norm(Point2 p) { return std::hypot(p.x, p.y); }
double distance(Point2 a, Point2 b) { return norm(a - b); }
bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// ---------------------------------------------------------------------------
// Homography

Homography::Homography() : m_(Matrix::Identity()) {}

Homography::Homography(const Matrix& m) : m_(m) {
  if (!m_.allFinite()) throw SingularResult("homography has non-finite entries");
  const double fro = m_.norm();
  const double det = m_.determinant();
  if (!(fro > 0.0) || std::abs(det) < kSingularityFloor * fro * fro * fro)
    throw SingularResult("homography fails the invertibility floor");
  if (std::abs(m_(2, 2)) > kNormalizationFloor) {
    m_ /= m_(2, 2);
    normalized_ = true;
  } else {
    normalized_ = false;
  }
}

Homography Homography::from_row_major(std::span<const double> coeffs) {
  if (coeffs.size() != 9) throw SingularResult("homography needs exactly 9 coefficients");
  Matrix m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = coeffs[static_cast<std::size_t>(3 * r + c)];
  return Homography(m);
}

Homography Homography::translation(double tx, double ty) {
  Matrix m = Matrix::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

Homography Homography::scaling(double sx, double sy) {
  Matrix m = Matrix::Identity();
  m(0, 0) = sx;
  m(1, 1) = sy;
  return Homography(m);
}

Homography Homography::rotation(double radians, Point2 center) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Matrix m = Matrix::Identity();
  m(0, 0) = c;
  m(0, 1) = -s;
  m(1, 0) = s;
  m(1, 1) = c;
  m(0, 2) = center.x - c * center.x + s * center.y;
  m(1, 2) = center.y - s * center.x - c * center.y;
  return Homography(m);
}

std::array<double, 9> Homography::row_major() const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(3 * r + c)] = m_(r, c);
  return out;
}

Homography Homography::inverse() const { return Homography(Matrix(m_.inverse())); }

Point2 Homography::apply(Point2 p) const {
  const double xp = m_(0, 0) * p.x + m_(0, 1) * p.y + m_(0, 2);
  const double yp = m_(1, 0) * p.x + m_(1, 1) * p.y + m_(1, 2);
  const double z = m_(2, 0) * p.x + m_(2, 1) * p.y + m_(2, 2);
  if (!(std::abs(z) >= kProjectionFloor)) throw DegenerateProjection("point maps to projective infinity");
  return {xp / z, yp / z};
}

bool Homography::approx_equal(const Homography& other, double tol) const {
  auto canonical = [](const Homography& h) {
    if (h.normalized()) return Matrix(h.matrix());
    Matrix m = h.matrix() / h.matrix().norm();
    // fix the overall sign on the largest-magnitude entry
    Eigen::Index r = 0, c = 0;
    m.cwiseAbs().maxCoeff(&r, &c);
    if (m(r, c) < 0) m = -m;
    return m;
  };
  return (canonical(*this) - canonical(other)).cwiseAbs().maxCoeff() <= tol;
}

Point2 apply_homography(const Homography& h, Point2 p) { return h.apply(p); }

Homography compose(const Homography& second, const Homography& first) {
  return Homography(Homography::Matrix(second.matrix() * first.matrix()));
}

// ---------------------------------------------------------------------------
// GeoTransform

void GeoTransform::validate() const {
  for (double v : {a, b, c, d, t_x, t_y})
    if (!std::isfinite(v)) throw SingularResult("geo transform has non-finite coefficients");
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
  if (scale == 0.0 || std::abs(determinant()) <= 1e-15 * scale * scale)
    throw SingularResult("geo transform linear part is singular");
}

Point2 pixel_to_world(const GeoTransform& t, Point2 p) {
  return {t.a * p.x + t.b * p.y + t.t_x, t.c * p.x + t.d * p.y + t.t_y};
}

// ---------------------------------------------------------------------------
// Boxes and quads

BBox BBox::from_corners(double x0, double y0, double x1, double y1) {
  return {(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0};
}

double bbox_iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Quad Quad::from_bbox(const BBox& b) {
  return Quad{{Point2{b.left(), b.top()}, Point2{b.right(), b.top()}, Point2{b.right(), b.bottom()},
               Point2{b.left(), b.bottom()}}};
}

Quad transform_quad(const Homography& h, const Quad& q) {
  Quad out;
  for (std::size_t i = 0; i < 4; ++i) out.p[i] = h.apply(q.p[i]);
  return out;
}

BBox transform_bbox(const Homography& h, const BBox& b) {
  const auto& m = h.matrix();
  if (h.normalized() && m(0, 0) == 1.0 && m(0, 1) == 0.0 && m(1, 0) == 0.0 && m(1, 1) == 1.0 && m(2, 0) == 0.0 &&
      m(2, 1) == 0.0)
    return {b.cx + m(0, 2), b.cy + m(1, 2), b.w, b.h};  // keeps w and h bit-exact
  const Quad q = transform_quad(h, Quad::from_bbox(b));
  double x0 = q.p[0].x, x1 = q.p[0].x, y0 = q.p[0].y, y1 = q.p[0].y;
  for (const auto& p : q.p) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return BBox::from_corners(x0, y0, x1, y1);
}

// ---------------------------------------------------------------------------
// Polygons

double signed_area(std::span<const Point2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += cross(polygon[i], polygon[(i + 1) % n]);
  return acc / 2.0;
}

double polygon_area(std::span<const Point2> polygon) { return std::abs(signed_area(polygon)); }

bool is_convex(std::span<const Point2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return true;
  double scale = 0.0;
  for (const auto& p : polygon) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double eps = 1e-12 * std::max(1.0, scale * scale);
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e1 = polygon[(i + 1) % n] - polygon[i];
    const Point2 e2 = polygon[(i + 2) % n] - polygon[(i + 1) % n];
    const double z = cross(e1, e2);
    if (std::abs(z) <= eps) continue;
    const int s = z > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

namespace {

std::vector<Point2> counter_clockwise(std::span<const Point2> polygon) {
  std::vector<Point2> out(polygon.begin(), polygon.end());
  if (signed_area(out) < 0) std::reverse(out.begin(), out.end());
  return out;
}

Point2 line_intersection(Point2 p, Point2 q, Point2 a, Point2 b) {
  const Point2 r = q - p;
  const Point2 s = b - a;
  const double denom = cross(r, s);
  if (denom == 0.0) return p;
  const double t = cross(a - p, s) / denom;
  return p + t * r;
}

}  // namespace

std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip) {
  std::vector<Point2> output = counter_clockwise(subject);
  const std::vector<Point2> window = counter_clockwise(clip);
  const std::size_t m = window.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Point2 a = window[e];
    const Point2 b = window[(e + 1) % m];
    auto inside = [&](Point2 p) { return cross(b - a, p - a) >= 0.0; };
    std::vector<Point2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Point2 cur = input[i];
      const Point2 prev = input[(i + input.size() - 1) % input.size()];
      const bool cur_in = inside(cur);
      const bool prev_in = inside(prev);
      if (cur_in) {
        if (!prev_in) output.push_back(line_intersection(prev, cur, a, b));
        output.push_back(cur);
      } else if (prev_in) {
        output.push_back(line_intersection(prev, cur, a, b));
      }
    }
  }
  return output;
}

double quad_iou(const Quad& q1, const Quad& q2) {
  for (const Quad* q : {&q1, &q2}) {
    for (const auto& p : q->p)
      if (!is_finite(p)) throw NonConvexInput("quad has non-finite vertices");
    if (!is_convex(q->p)) throw NonConvexInput("quad is not convex");
  }
  const double a1 = polygon_area(q1.p);
  const double a2 = polygon_area(q2.p);
  const auto inter_poly = clip_convex(q1.p, q2.p);
  const double inter = std::min({polygon_area(inter_poly), a1, a2});
  const double uni = a1 + a2 - inter;
  if (!(uni > 0.0)) return q1.p == q2.p ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool point_in_polygon(std::span<const Point2> polygon, Point2 p, double boundary_tol) {
  const std::size_t n = polygon.size();
  if (n == 0) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = polygon[i];
    const Point2 b = polygon[(i + 1) % n];
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    if (distance(a + t * ab, p) <= boundary_tol) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = polygon[i];
    const Point2 b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace aerotraj
