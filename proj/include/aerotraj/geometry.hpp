#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace aerotraj {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double norm(Point2 p);
double distance(Point2 a, Point2 b);
bool is_finite(Point2 p);

/// Planar projective transform acting on homogeneous pixel coordinates.
///
/// The matrix is validated on construction: all entries finite and
/// |det| >= 1e-12 * ||M||_F^3. When |M(2,2)| > 1e-12 the matrix is scaled so
/// that M(2,2) == 1; otherwise it is kept as-is and normalized() is false.
class Homography {
public:
  using Matrix = Eigen::Matrix3d;

  static constexpr double kSingularityFloor = 1e-12;
  static constexpr double kNormalizationFloor = 1e-12;
  static constexpr double kProjectionFloor = 1e-12;

  /// Identity.
  Homography();
  /// Throws SingularResult if `m` fails the invertibility floor.
  explicit Homography(const Matrix& m);

  /// Row-major construction from nine coefficients.
  static Homography from_row_major(std::span<const double> coeffs);
  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);
  static Homography scaling(double s) { return scaling(s, s); }
  static Homography scaling(double sx, double sy);
  /// Counter-clockwise (in a y-up frame) rotation by `radians` about `center`.
  static Homography rotation(double radians, Point2 center = {});

  const Matrix& matrix() const noexcept { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }
  bool normalized() const noexcept { return normalized_; }
  std::array<double, 9> row_major() const;

  Homography inverse() const;

  /// Throws DegenerateProjection when the homogeneous scale |z| < 1e-12.
  Point2 apply(Point2 p) const;

  /// Point-action equality within an absolute tolerance on the normalized matrix.
  bool approx_equal(const Homography& other, double tol) const;

private:
  Matrix m_;
  bool normalized_ = true;
};

Point2 apply_homography(const Homography& h, Point2 p);

/// Returns the map p -> second(first(p)). Throws SingularResult if the
/// product fails the invertibility floor.
Homography compose(const Homography& second, const Homography& first);

/// Six-parameter affine map from pixel to world coordinates:
/// X = a*x + b*y + t_x, Y = c*x + d*y + t_y.
struct GeoTransform {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0, t_x = 0.0, t_y = 0.0;

  /// Throws SingularResult when the linear part is singular or any coefficient is non-finite.
  void validate() const;
  double determinant() const { return a * d - b * c; }
  static GeoTransform identity() { return {}; }
  static GeoTransform scale(double s) { return {s, 0.0, 0.0, s, 0.0, 0.0}; }

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

Point2 pixel_to_world(const GeoTransform& t, Point2 p);

/// Axis-aligned box in center/size encoding.
struct BBox {
  double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;

  double left() const { return cx - w / 2.0; }
  double right() const { return cx + w / 2.0; }
  double top() const { return cy - h / 2.0; }
  double bottom() const { return cy + h / 2.0; }
  double area() const { return w * h; }
  static BBox from_corners(double x0, double y0, double x1, double y1);

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Axis-aligned IoU of two boxes; 0 when the union is empty.
double bbox_iou(const BBox& a, const BBox& b);

/// Quadrilateral given by its corners in traversal order.
struct Quad {
  std::array<Point2, 4> p;

  /// Corners in the order (left,top), (right,top), (right,bottom), (left,bottom).
  static Quad from_bbox(const BBox& b);
};

Quad transform_quad(const Homography& h, const Quad& q);

/// Transforms the four corners and refits the minimal axis-aligned box.
BBox transform_bbox(const Homography& h, const BBox& b);

/// Signed shoelace area (positive for counter-clockwise in a y-up frame).
double signed_area(std::span<const Point2> polygon);
double polygon_area(std::span<const Point2> polygon);
bool is_convex(std::span<const Point2> polygon);

/// Intersection of two convex polygons by Sutherland-Hodgman clipping.
std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip);

/// IoU of two convex quadrilaterals. Throws NonConvexInput otherwise.
double quad_iou(const Quad& q1, const Quad& q2);

/// Even-odd point-in-polygon test where points on the boundary count as inside.
bool point_in_polygon(std::span<const Point2> polygon, Point2 p, double boundary_tol = 1e-9);

}  // namespace aerotraj
