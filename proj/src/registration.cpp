#include "aerotraj/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "aerotraj/errors.hpp"
#include "aerotraj/random.hpp"

namespace aerotraj {

void RansacConfig::validate() const {
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("ransac confidence must lie in (0,1)");
  if (max_iterations <= 0) throw ConfigError("ransac max_iterations must be positive");
  if (!(reproj_threshold > 0.0)) throw ConfigError("ransac reproj_threshold must be positive");
}

std::size_t EstimateReport::inlier_count() const {
  return static_cast<std::size_t>(std::count(inlier_flags.begin(), inlier_flags.end(), true));
}

std::vector<Correspondence> snn_filter(std::span<const Correspondence> matches, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("SNN ratio must lie in (0,1]");
  std::vector<Correspondence> out;
  out.reserve(matches.size());
  for (const auto& m : matches) {
    if (!m.d1 || !m.d2) throw MissingDistances("SNN filter needs d1 and d2 on every match");
    if (*m.d1 <= ratio * *m.d2) out.push_back(m);
  }
  return out;
}

bool inside_enlarged_mask(Point2 p, const BBox& mask, double enlarge) {
  const double half_w = mask.w * (1.0 + enlarge) / 2.0;
  const double half_h = mask.h * (1.0 + enlarge) / 2.0;
  return std::abs(p.x - mask.cx) < half_w && std::abs(p.y - mask.cy) < half_h;
}

namespace {

bool masked(Point2 p, std::span<const BBox> masks, double enlarge) {
  return std::any_of(masks.begin(), masks.end(), [&](const BBox& m) { return inside_enlarged_mask(p, m, enlarge); });
}

}  // namespace

std::vector<Point2> mask_filter(std::span<const Point2> points, std::span<const BBox> masks, double enlarge) {
  if (!(enlarge >= 0.0)) throw ConfigError("mask enlargement must be non-negative");
  std::vector<Point2> out;
  out.reserve(points.size());
  for (const auto& p : points)
    if (!masked(p, masks, enlarge)) out.push_back(p);
  return out;
}

std::vector<Correspondence> mask_filter(std::span<const Correspondence> matches, std::span<const BBox> src_masks,
                                        std::span<const BBox> dst_masks, double enlarge) {
  if (!(enlarge >= 0.0)) throw ConfigError("mask enlargement must be non-negative");
  std::vector<Correspondence> out;
  out.reserve(matches.size());
  for (const auto& m : matches)
    if (!masked(m.src, src_masks, enlarge) && !masked(m.dst, dst_masks, enlarge)) out.push_back(m);
  return out;
}

// ---------------------------------------------------------------------------
// DLT

namespace {

struct Normalizer {
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  std::vector<Point2> points;
};

// Translates the centroid to the origin and scales to mean distance sqrt(2).
Normalizer normalize_points(std::span<const Correspondence> corrs, bool use_src) {
  const double n = static_cast<double>(corrs.size());
  Point2 mean{};
  for (const auto& c : corrs) mean = mean + (use_src ? c.src : c.dst);
  mean = (1.0 / n) * mean;
  double mean_dist = 0.0;
  for (const auto& c : corrs) mean_dist += distance(use_src ? c.src : c.dst, mean);
  mean_dist /= n;
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist))
    throw DegenerateConfiguration("coincident or non-finite points");

  Normalizer out;
  const double s = std::sqrt(2.0) / mean_dist;
  out.t << s, 0, -s * mean.x, 0, s, -s * mean.y, 0, 0, 1;
  out.points.reserve(corrs.size());
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& c : corrs) {
    const Point2 p = use_src ? c.src : c.dst;
    const Point2 q{s * (p.x - mean.x), s * (p.y - mean.y)};
    out.points.push_back(q);
    sxx += q.x * q.x;
    syy += q.y * q.y;
    sxy += q.x * q.y;
  }
  // smallest eigenvalue of the 2x2 scatter; zero for collinear sets
  const double tr = (sxx + syy) / n;
  const double det = (sxx * syy - sxy * sxy) / (n * n);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double lambda_min = tr / 2.0 - disc;
  if (lambda_min < 1e-10 * tr) throw DegenerateConfiguration("points are collinear");
  return out;
}

}  // namespace

Homography dlt_homography(std::span<const Correspondence> corrs) {
  if (corrs.size() < 4) throw InsufficientPoints("homography needs at least 4 correspondences");
  const Normalizer src = normalize_points(corrs, true);
  const Normalizer dst = normalize_points(corrs, false);

  const Eigen::Index n = static_cast<Eigen::Index>(corrs.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 p = src.points[static_cast<std::size_t>(i)];
    const Point2 q = dst.points[static_cast<std::size_t>(i)];
    a.row(2 * i) << -p.x, -p.y, -1, 0, 0, 0, q.x * p.x, q.x * p.y, q.x;
    a.row(2 * i + 1) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // a unique solution needs the 8 leading singular values to be non-negligible
  if (!(sv(7) > 1e-10 * sv(0))) throw DegenerateConfiguration("correspondences do not determine a homography");
  const Eigen::VectorXd h = svd.matrixV().col(8);

  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = dst.t.inverse() * hn * src.t;
  try {
    return Homography(full);
  } catch (const SingularResult&) {
    throw DegenerateConfiguration("fitted homography is singular");
  }
}

// ---------------------------------------------------------------------------
// RANSAC

namespace {

bool project(const Eigen::Matrix3d& m, Point2 p, Point2& out) {
  const double z = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  if (!(std::abs(z) >= Homography::kProjectionFloor)) return false;
  out = {(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / z, (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / z};
  return true;
}

bool sample_degenerate(const std::array<Point2, 4>& pts) {
  double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double box_area = (x1 - x0) * (y1 - y0);
  if (!(box_area > 0.0)) return true;
  static constexpr int kTriples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (const auto& t : kTriples) {
    const double area = std::abs(cross(pts[t[1]] - pts[t[0]], pts[t[2]] - pts[t[0]])) / 2.0;
    if (area < 1e-9 * box_area) return true;
  }
  return false;
}

struct Consensus {
  std::size_t count = 0;
  double error_sum = 0.0;
};

Consensus evaluate(const Homography& h, std::span<const Correspondence> corrs, double threshold,
                   std::vector<bool>* flags) {
  const Homography inv = h.inverse();
  Consensus out;
  if (flags) flags->assign(corrs.size(), false);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const double e = symmetric_transfer_error(h, inv, corrs[i]);
    if (e <= threshold) {
      ++out.count;
      out.error_sum += e;
      if (flags) (*flags)[i] = true;
    }
  }
  return out;
}

int required_iterations(double inlier_ratio, double confidence, int cap) {
  const double w4 = std::pow(inlier_ratio, 4);
  if (w4 >= 1.0) return 1;
  if (w4 <= 0.0) return cap;
  const double k = std::log(1.0 - confidence) / std::log(1.0 - w4);
  if (!std::isfinite(k) || k >= static_cast<double>(cap)) return cap;
  return std::max(1, static_cast<int>(std::ceil(k)));
}

}  // namespace

double symmetric_transfer_error(const Homography& h, const Homography& h_inv, const Correspondence& c) {
  Point2 fwd, bwd;
  if (!project(h.matrix(), c.src, fwd) || !project(h_inv.matrix(), c.dst, bwd))
    return std::numeric_limits<double>::infinity();
  return 0.5 * (distance(fwd, c.dst) + distance(bwd, c.src));
}

EstimateReport ransac_homography(std::span<const Correspondence> corrs, const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = corrs.size();
  if (n < 4) throw InsufficientPoints("RANSAC needs at least 4 correspondences");

  RandomEngine rng = make_engine(cfg.seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  std::optional<Homography> best;
  Consensus best_score;
  int required = cfg.max_iterations;
  int it = 0;
  for (; it < required; ++it) {
    for (std::size_t j = 0; j < 4; ++j) {
      const std::size_t k = j + static_cast<std::size_t>(uniform_index(rng, n - j));
      std::swap(idx[j], idx[k]);
    }
    std::array<Correspondence, 4> sample;
    std::array<Point2, 4> src_pts, dst_pts;
    for (std::size_t j = 0; j < 4; ++j) {
      sample[j] = corrs[idx[j]];
      src_pts[j] = sample[j].src;
      dst_pts[j] = sample[j].dst;
    }
    if (sample_degenerate(src_pts) || sample_degenerate(dst_pts)) continue;

    Homography model;
    try {
      model = dlt_homography(sample);
      const Consensus score = evaluate(model, corrs, cfg.reproj_threshold, nullptr);
      if (score.count > best_score.count ||
          (score.count == best_score.count && score.count > 0 && score.error_sum < best_score.error_sum)) {
        best = model;
        best_score = score;
        required = std::min(cfg.max_iterations,
                            required_iterations(static_cast<double>(score.count) / static_cast<double>(n),
                                                cfg.confidence, cfg.max_iterations));
      }
    } catch (const DegenerateConfiguration&) {
      continue;
    } catch (const SingularResult&) {
      continue;
    }
  }

  if (!best || best_score.count < 4) throw NoModelFound("no sample reached a consensus of 4 inliers");

  EstimateReport report;
  report.iterations_run = it;
  std::vector<bool> flags;
  evaluate(*best, corrs, cfg.reproj_threshold, &flags);

  std::vector<Correspondence> inliers;
  inliers.reserve(best_score.count);
  for (std::size_t i = 0; i < n; ++i)
    if (flags[i]) inliers.push_back(corrs[i]);

  Homography final_model = *best;
  try {
    const Homography refit = dlt_homography(inliers);
    std::vector<bool> refit_flags;
    const Consensus refit_score = evaluate(refit, corrs, cfg.reproj_threshold, &refit_flags);
    if (refit_score.count >= 4) {
      final_model = refit;
      flags = std::move(refit_flags);
    }
  } catch (const DegenerateConfiguration&) {
  } catch (const SingularResult&) {
  }

  report.h = final_model;
  report.inlier_flags = std::move(flags);
  const Homography inv = final_model.inverse();
  double err_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!report.inlier_flags[i]) continue;
    err_sum += symmetric_transfer_error(final_model, inv, corrs[i]);
    ++count;
  }
  report.mean_reproj_error = count ? err_sum / static_cast<double>(count) : 0.0;
  return report;
}

Homography upscale_homography(const Homography& scaled, double rho) {
  if (!(rho > 0.0)) throw ConfigError("downscale factor must be positive");
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  s(0, 0) = rho;
  s(1, 1) = rho;
  Eigen::Matrix3d s_inv = Eigen::Matrix3d::Identity();
  s_inv(0, 0) = 1.0 / rho;
  s_inv(1, 1) = 1.0 / rho;
  return Homography(Eigen::Matrix3d(s_inv * scaled.matrix() * s));
}

std::vector<Correspondence> scale_correspondences(std::span<const Correspondence> corrs, double rho) {
  std::vector<Correspondence> out(corrs.begin(), corrs.end());
  for (auto& c : out) {
    c.src = rho * c.src;
    c.dst = rho * c.dst;
  }
  return out;
}

}  // namespace aerotraj
