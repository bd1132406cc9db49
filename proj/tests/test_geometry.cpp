#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aerotraj/errors.hpp"
#include "aerotraj/geometry.hpp"
#include "test_support.hpp"

using namespace aerotraj;

namespace {

Quad unit_square(double dx = 0.0, double dy = 0.0) {
  return Quad{{Point2{dx, dy}, Point2{dx + 1, dy}, Point2{dx + 1, dy + 1}, Point2{dx, dy + 1}}};
}

// Grid integration over the union bounding box; crude but independent of clipping.
double iou_by_sampling(const Quad& a, const Quad& b, int n) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const Quad* q : {&a, &b})
    for (const auto& p : q->p) {
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
  long inter = 0, uni = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Point2 p{x0 + (i + 0.5) * (x1 - x0) / n, y0 + (j + 0.5) * (y1 - y0) / n};
      const bool ia = point_in_polygon(a.p, p, 0.0), ib = point_in_polygon(b.p, p, 0.0);
      inter += ia && ib;
      uni += ia || ib;
    }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace

TEST(ApplyHomography, IdentityAndTranslation) {
  EXPECT_EQ(apply_homography(Homography::identity(), {5, 7}), (Point2{5, 7}));
  const Point2 p = apply_homography(Homography::translation(10, -3), {0, 0});
  EXPECT_DOUBLE_EQ(p.x, 10.0);
  EXPECT_DOUBLE_EQ(p.y, -3.0);
}

TEST(ApplyHomography, PerspectiveDivision) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(2, 0) = 0.001;
  const Point2 p = apply_homography(Homography(m), {100, 50});
  // z = 0.001 * 100 + 1
  EXPECT_NEAR(p.x, 100.0 / 1.1, 1e-12);
  EXPECT_NEAR(p.y, 50.0 / 1.1, 1e-12);
}

TEST(ApplyHomography, PointAtInfinity) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(2, 0) = -0.01;  // z vanishes at x = 100
  EXPECT_THROW(apply_homography(Homography(m), {100, 3}), DegenerateProjection);
}

TEST(HomographyType, NormalizedAndSingular) {
  Eigen::Matrix3d m = 4.0 * Eigen::Matrix3d::Identity();
  const Homography h(m);
  EXPECT_TRUE(h.normalized());
  EXPECT_DOUBLE_EQ(h(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(h(0, 0), 1.0);

  Eigen::Matrix3d s;
  s << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  EXPECT_THROW(Homography{s}, SingularResult);

  Eigen::Matrix3d z;  // bottom-right zero, still invertible
  z << 1, 0, 0, 0, 0, 1, 0, 1, 0;
  const Homography hz(z);
  EXPECT_FALSE(hz.normalized());
}

TEST(Compose, Examples) {
  const Homography h = Homography::rotation(0.3, {4, 5});
  EXPECT_TRUE(compose(Homography::identity(), h).approx_equal(h, 1e-12));
  EXPECT_TRUE(compose(Homography::translation(1, 2), Homography::translation(3, 4))
                  .approx_equal(Homography::translation(4, 6), 1e-12));
  const Point2 p = compose(Homography::scaling(2.0), Homography::translation(1, 0)).apply({0, 0});
  EXPECT_DOUBLE_EQ(p.x, 2.0);
  EXPECT_DOUBLE_EQ(p.y, 0.0);
}

TEST(Compose, MatchesSequentialApplicationAndAssociates) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto h1 = fixtures::random_near_identity(rng);
    const auto h2 = fixtures::random_near_identity(rng);
    const auto h3 = fixtures::random_near_identity(rng);
    const Point2 p = fixtures::random_point(rng, 0, 3840);
    const Point2 seq = h3.apply(h2.apply(h1.apply(p)));
    const Point2 left = compose(compose(h3, h2), h1).apply(p);
    const Point2 right = compose(h3, compose(h2, h1)).apply(p);
    EXPECT_NEAR(distance(left, seq), 0.0, 1e-9);
    EXPECT_NEAR(distance(right, left), 0.0, 1e-9);
  }
}

TEST(Homography, InverseRoundTrip) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto h = fixtures::random_near_identity(rng);
    const Point2 p = fixtures::random_point(rng, -500, 4000);
    EXPECT_LT(distance(h.inverse().apply(h.apply(p)), p), 1e-9);
  }
}

TEST(TransformBBox, Examples) {
  const BBox b{50, 50, 20, 10};
  EXPECT_EQ(transform_bbox(Homography::identity(), b), b);
  const BBox t = transform_bbox(Homography::translation(10, 0), b);
  EXPECT_DOUBLE_EQ(t.cx, 60.0);
  EXPECT_DOUBLE_EQ(t.cy, 50.0);
  EXPECT_DOUBLE_EQ(t.w, 20.0);
  EXPECT_DOUBLE_EQ(t.h, 10.0);
  const BBox r = transform_bbox(Homography::rotation(std::numbers::pi / 2), b);
  EXPECT_NEAR(r.w, 10.0, 1e-12);
  EXPECT_NEAR(r.h, 20.0, 1e-12);
  EXPECT_NEAR(r.cx, -50.0, 1e-9);
  EXPECT_NEAR(r.cy, 50.0, 1e-9);
}

TEST(TransformBBox, TranslationPreservesSizeExactly) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1000, 1000);
  for (int i = 0; i < 200; ++i) {
    const BBox b{u(rng), u(rng), std::abs(u(rng)) / 8, std::abs(u(rng)) / 8};
    const BBox t = transform_bbox(Homography::translation(std::round(u(rng)), std::round(u(rng))), b);
    EXPECT_DOUBLE_EQ(t.w, b.w);
    EXPECT_DOUBLE_EQ(t.h, b.h);
  }
}

TEST(PixelToWorld, Examples) {
  const GeoTransform t{0.1, 0.0, 0.0, -0.1, 100.0, 50.0};
  const Point2 w = pixel_to_world(t, {10, 20});
  EXPECT_NEAR(w.x, 101.0, 1e-12);
  EXPECT_NEAR(w.y, 48.0, 1e-12);
  const Point2 o = pixel_to_world(t, {0, 0});
  EXPECT_EQ(o, (Point2{100.0, 50.0}));
  EXPECT_EQ(pixel_to_world(GeoTransform::identity(), {3, 4}), (Point2{3, 4}));
}

TEST(PixelToWorld, AffineCombination) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const GeoTransform t{u(rng), u(rng), u(rng), u(rng), 100 * u(rng), 100 * u(rng)};
    const Point2 p{100 * u(rng), 100 * u(rng)}, q{100 * u(rng), 100 * u(rng)};
    const double al = u(rng), be = u(rng);
    const Point2 lhs = pixel_to_world(t, al * p + be * q);
    const Point2 rhs = al * pixel_to_world(t, p) + be * pixel_to_world(t, q) + (1 - al - be) * Point2{t.t_x, t.t_y};
    EXPECT_NEAR(lhs.x, rhs.x, 1e-9);
    EXPECT_NEAR(lhs.y, rhs.y, 1e-9);
  }
}

TEST(GeoTransformType, SingularRejected) {
  EXPECT_THROW((GeoTransform{1, 2, 2, 4, 0, 0}.validate()), SingularResult);
  EXPECT_NO_THROW(GeoTransform::scale(0.02725).validate());
}

TEST(QuadIou, Examples) {
  EXPECT_DOUBLE_EQ(quad_iou(unit_square(), unit_square()), 1.0);
  EXPECT_DOUBLE_EQ(quad_iou(unit_square(), unit_square(5, 5)), 0.0);
  EXPECT_NEAR(quad_iou(unit_square(), unit_square(0.5, 0)), 1.0 / 3.0, 1e-12);
}

TEST(QuadIou, NonConvexRejected) {
  const Quad dart{{Point2{0, 0}, Point2{2, 0}, Point2{0.5, 0.5}, Point2{0, 2}}};
  EXPECT_THROW(quad_iou(dart, unit_square()), NonConvexInput);
}

TEST(QuadIou, SymmetricBoundedAndMatchesSampling) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const BBox b{200 * u(rng), 200 * u(rng), 20 + 60 * u(rng), 20 + 60 * u(rng)};
    const Homography h = compose(Homography::translation(40 * (u(rng) - 0.5), 40 * (u(rng) - 0.5)),
                                 Homography::rotation(0.5 * (u(rng) - 0.5), {b.cx, b.cy}));
    const Quad q1 = Quad::from_bbox(b);
    const Quad q2 = transform_quad(h, q1);
    const double v = quad_iou(q1, q2);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_NEAR(v, quad_iou(q2, q1), 1e-12);
    EXPECT_NEAR(quad_iou(q2, q2), 1.0, 1e-12);
    EXPECT_NEAR(v, iou_by_sampling(q1, q2, 400), 0.01);
  }
}

TEST(QuadIou, AxisAlignedMatchesBoxIou) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const BBox a{u(rng), u(rng), 1 + u(rng), 1 + u(rng)};
    const BBox b{u(rng), u(rng), 1 + u(rng), 1 + u(rng)};
    const double ix = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.left(), b.left()));
    const double iy = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top()));
    const double expect = ix * iy / (a.area() + b.area() - ix * iy);
    EXPECT_NEAR(quad_iou(Quad::from_bbox(a), Quad::from_bbox(b)), expect, 1e-12);
    EXPECT_NEAR(bbox_iou(a, b), expect, 1e-12);
  }
}

TEST(Polygon, AreaConvexityAndContainment) {
  const std::vector<Point2> sq{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  EXPECT_DOUBLE_EQ(polygon_area(sq), 4.0);
  EXPECT_TRUE(is_convex(sq));
  EXPECT_TRUE(point_in_polygon(sq, {1, 1}));
  EXPECT_TRUE(point_in_polygon(sq, {2, 1}));  // on the boundary
  EXPECT_FALSE(point_in_polygon(sq, {2.1, 1}));
  const std::vector<Point2> ell{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  EXPECT_FALSE(is_convex(ell));
  EXPECT_FALSE(point_in_polygon(ell, {1.5, 1.5}));
  EXPECT_TRUE(point_in_polygon(ell, {0.5, 1.5}));
}
