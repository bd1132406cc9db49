#include <gtest/gtest.h>

#include <random>

#include "aerotraj/errors.hpp"
#include "aerotraj/registration.hpp"
#include "test_support.hpp"

using namespace aerotraj;

namespace {

std::vector<Correspondence> exact_matches(const Homography& h, std::mt19937_64& rng, int n) {
  std::vector<Correspondence> out;
  for (int i = 0; i < n; ++i) {
    const Point2 p = fixtures::random_point(rng, 0, 3000);
    out.push_back({p, h.apply(p), std::nullopt, std::nullopt});
  }
  return out;
}

// Forward reprojection over sample points as a model-agnostic comparison.
double max_point_gap(const Homography& a, const Homography& b, double extent) {
  double worst = 0.0;
  for (double x = 0; x <= extent; x += extent / 8)
    for (double y = 0; y <= extent; y += extent / 8) worst = std::max(worst, distance(a.apply({x, y}), b.apply({x, y})));
  return worst;
}

}  // namespace

TEST(SnnFilter, Examples) {
  const Correspondence keep{{0, 0}, {0, 0}, 0.4, 1.0};
  const Correspondence drop{{0, 0}, {0, 0}, 0.95, 1.0};
  const std::vector<Correspondence> in{keep, drop};
  const auto out = snn_filter(in, 0.9);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(*out[0].d1, 0.4);
  EXPECT_EQ(snn_filter(in, 1.0).size(), 2u);
}

TEST(SnnFilter, MissingDistancesAndBadRatio) {
  const std::vector<Correspondence> in{{{0, 0}, {0, 0}, std::nullopt, std::nullopt}};
  EXPECT_THROW(snn_filter(in, 0.9), MissingDistances);
  EXPECT_THROW(snn_filter({}, 0.0), ConfigError);
  EXPECT_THROW(snn_filter({}, 1.5), ConfigError);
}

TEST(SnnFilter, SubsetOrderPreservedIdempotent) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Correspondence> in;
  for (int i = 0; i < 300; ++i) {
    const double d2 = 1 + u(rng);
    in.push_back({{double(i), 0}, {0, 0}, d2 * u(rng), d2});
  }
  const auto once = snn_filter(in, 0.7);
  const auto twice = snn_filter(once, 0.7);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 1; i < once.size(); ++i) EXPECT_LT(once[i - 1].src.x, once[i].src.x);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].src, twice[i].src);
}

TEST(MaskFilter, Examples) {
  const std::vector<Point2> pts{{105.7, 100}, {106, 100}};
  EXPECT_EQ(mask_filter(pts, {}, 0.15).size(), 2u);
  const std::vector<BBox> masks{{100, 100, 10, 10}};
  const auto enlarged = mask_filter(pts, masks, 0.15);  // half width 5.75
  ASSERT_EQ(enlarged.size(), 1u);
  EXPECT_EQ(enlarged[0], (Point2{106, 100}));
  const auto plain = mask_filter(std::vector<Point2>{{106, 100}}, masks, 0.0);
  EXPECT_EQ(plain.size(), 1u);
  // strictly inside: the boundary itself is kept
  EXPECT_FALSE(inside_enlarged_mask({105, 100}, masks[0], 0.0));
}

TEST(MaskFilter, CorrespondencesUseBothSides) {
  const std::vector<Correspondence> in{{{10, 10}, {500, 500}}, {{500, 500}, {10, 10}}, {{500, 500}, {500, 500}}};
  const std::vector<BBox> src_masks{{10, 10, 8, 8}};
  const std::vector<BBox> dst_masks{{10, 10, 8, 8}};
  const auto out = mask_filter(in, src_masks, dst_masks, 0.0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].src, (Point2{500, 500}));
}

TEST(Dlt, Examples) {
  const std::vector<Point2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<Correspondence> id, tr;
  for (const auto& p : sq) {
    id.push_back({p, p});
    tr.push_back({p, {p.x + 7, p.y - 2}});
  }
  EXPECT_TRUE(dlt_homography(id).approx_equal(Homography::identity(), 1e-9));
  EXPECT_TRUE(dlt_homography(tr).approx_equal(Homography::translation(7, -2), 1e-9));
  EXPECT_THROW(dlt_homography(std::span(id).first(3)), InsufficientPoints);
}

TEST(Dlt, CollinearRejected) {
  std::vector<Correspondence> c;
  for (int i = 0; i < 6; ++i) c.push_back({{double(i), 2.0 * i}, {double(i), double(i % 3)}});
  EXPECT_THROW(dlt_homography(c), DegenerateConfiguration);
}

TEST(Dlt, ExactOnRandomHomographies) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const auto h = fixtures::random_near_identity(rng);
    const auto c = exact_matches(h, rng, 4 + t % 17);
    const Homography est = dlt_homography(c);
    const Homography inv = est.inverse();
    for (const auto& m : c) EXPECT_LT(symmetric_transfer_error(est, inv, m), 1e-7);
  }
}

TEST(Dlt, InvariantToGlobalSimilarity) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 50; ++t) {
    const auto h = fixtures::random_near_identity(rng);
    std::vector<Correspondence> c = exact_matches(h, rng, 12);
    for (auto& m : c) m.dst = m.dst + Point2{0.3 * (t % 3), -0.2};  // make it slightly inconsistent
    c[0].dst.x += 1.5;
    const Homography base = dlt_homography(c);
    // same data in coordinates offset by (800,-600) and scaled by 3
    const Homography sim = compose(Homography::translation(800, -600), Homography::scaling(3.0));
    std::vector<Correspondence> moved;
    for (const auto& m : c) moved.push_back({sim.apply(m.src), sim.apply(m.dst)});
    const Homography back = compose(sim.inverse(), compose(dlt_homography(moved), sim));
    EXPECT_LT(max_point_gap(base, back, 3000), 1e-7);
  }
}

TEST(Ransac, NoOutliers) {
  std::mt19937_64 rng(31);
  const auto h = fixtures::random_near_identity(rng);
  const auto c = exact_matches(h, rng, 100);
  RansacConfig cfg;
  cfg.seed = 99;
  const auto rep = ransac_homography(c, cfg);
  EXPECT_EQ(rep.inlier_count(), 100u);
  EXPECT_LT(max_point_gap(rep.h, h, 3000), 1e-6);
  EXPECT_LE(rep.mean_reproj_error, 1e-6);
}

TEST(Ransac, SeparatesInliersFromOutliers) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = fixtures::random_near_identity(rng);
    auto c = exact_matches(h, rng, 70);
    std::uniform_real_distribution<double> u(0, 3000);
    for (int i = 0; i < 30; ++i) {
      Correspondence o{{u(rng), u(rng)}, {u(rng), u(rng)}};
      const Homography inv = h.inverse();
      if (symmetric_transfer_error(h, inv, o) <= 20.0) o.dst.x += 100.0;  // keep outliers clearly off-model
      c.push_back(o);
    }
    std::shuffle(c.begin(), c.end(), rng);
    const Homography inv = h.inverse();
    RansacConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto rep = ransac_homography(c, cfg);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const bool truth = symmetric_transfer_error(h, inv, c[i]) < 1e-6;
      EXPECT_EQ(rep.inlier_flags[i], truth) << "index " << i;
    }
    EXPECT_EQ(rep.inlier_count(), 70u);
    EXPECT_LT(max_point_gap(rep.h, h, 3000), 1e-4);
  }
}

TEST(Ransac, InsufficientAndNoModel) {
  std::mt19937_64 rng(1);
  const auto c = exact_matches(Homography::identity(), rng, 3);
  EXPECT_THROW(ransac_homography(c, RansacConfig{}), InsufficientPoints);
  // four collinear pairs: every sample is degenerate
  std::vector<Correspondence> line;
  for (int i = 0; i < 8; ++i) line.push_back({{double(i), double(i)}, {double(i), double(i)}});
  RansacConfig cfg;
  cfg.max_iterations = 50;
  EXPECT_THROW(ransac_homography(line, cfg), NoModelFound);
}

TEST(Ransac, DeterministicForSeed) {
  std::mt19937_64 rng(41);
  const auto h = fixtures::random_near_identity(rng);
  auto c = exact_matches(h, rng, 60);
  std::uniform_real_distribution<double> u(0, 3000), n(-1, 1);
  for (auto& m : c) m.dst = m.dst + Point2{n(rng), n(rng)};
  for (int i = 0; i < 40; ++i) c.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  RansacConfig cfg;
  cfg.seed = 1234;
  const auto a = ransac_homography(c, cfg);
  const auto b = ransac_homography(c, cfg);
  EXPECT_EQ(a.inlier_flags, b.inlier_flags);
  EXPECT_EQ(a.iterations_run, b.iterations_run);
  EXPECT_EQ(a.h.row_major(), b.h.row_major());
}

TEST(Ransac, LargerThresholdNeverShrinksConsensus) {
  std::mt19937_64 rng(43);
  const auto h = fixtures::random_near_identity(rng);
  auto c = exact_matches(h, rng, 80);
  std::normal_distribution<double> noise(0.0, 1.5);
  std::uniform_real_distribution<double> u(0, 3000);
  for (auto& m : c) m.dst = m.dst + Point2{noise(rng), noise(rng)};
  for (int i = 0; i < 30; ++i) c.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  RansacConfig cfg;
  cfg.seed = 7;
  cfg.reproj_threshold = 1.0;
  const auto tight = ransac_homography(c, cfg);
  for (double eta : {1.5, 2.0, 3.0, 5.0}) {
    RansacConfig wide = cfg;
    wide.reproj_threshold = eta;
    const Homography inv = tight.h.inverse();
    std::size_t count = 0;
    for (const auto& m : c) count += symmetric_transfer_error(tight.h, inv, m) <= eta;
    EXPECT_GE(count, tight.inlier_count());
    EXPECT_GE(ransac_homography(c, wide).inlier_count(), tight.inlier_count());
  }
}

TEST(Ransac, ConfigValidation) {
  RansacConfig cfg;
  cfg.confidence = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.max_iterations = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.reproj_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Upscale, Examples) {
  const Homography h = Homography::rotation(0.2, {3, 4});
  EXPECT_TRUE(upscale_homography(h, 1.0).approx_equal(h, 1e-15));
  EXPECT_TRUE(upscale_homography(Homography::translation(5, 0), 0.5).approx_equal(Homography::translation(10, 0), 1e-12));
  EXPECT_TRUE(upscale_homography(Homography::identity(), 0.37).approx_equal(Homography::identity(), 1e-12));
}

TEST(Upscale, ConjugationOnPoints) {
  std::mt19937_64 rng(47);
  for (int i = 0; i < 50; ++i) {
    const auto h = fixtures::random_near_identity(rng, 1920, 1080);
    const double rho = 0.5;
    const Homography full = upscale_homography(h, rho);
    const Point2 p = fixtures::random_point(rng, 0, 3840);
    const Point2 via_scaled = (1.0 / rho) * h.apply(rho * p);
    EXPECT_LT(distance(full.apply(p), via_scaled), 1e-8);
  }
}
