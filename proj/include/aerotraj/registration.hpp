#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aerotraj/geometry.hpp"

namespace aerotraj {

/// A putative match from a point in frame k (src) to the reference frame (dst).
/// d1/d2 are the best and second-best descriptor distances, when known.
struct Correspondence {
  Point2 src;
  Point2 dst;
  std::optional<double> d1;
  std::optional<double> d2;
};

struct RansacConfig {
  double confidence = 0.999999;
  int max_iterations = 5000;
  double reproj_threshold = 2.0;  ///< pixels, on the symmetric transfer error
  std::uint64_t seed = 0;

  /// Throws ConfigError when a field is outside its domain.
  void validate() const;
};

struct EstimateReport {
  Homography h;
  std::vector<bool> inlier_flags;
  int iterations_run = 0;
  double mean_reproj_error = 0.0;  ///< pixels, over inliers

  std::size_t inlier_count() const;
};

/// Retains matches with d1 <= ratio * d2, preserving order.
/// Throws MissingDistances if any match lacks d1 or d2.
std::vector<Correspondence> snn_filter(std::span<const Correspondence> matches, double ratio);

/// True when `p` lies strictly inside `mask` enlarged by (1 + enlarge) about its center.
bool inside_enlarged_mask(Point2 p, const BBox& mask, double enlarge);

/// Drops points strictly inside any enlarged mask.
std::vector<Point2> mask_filter(std::span<const Point2> points, std::span<const BBox> masks, double enlarge);

/// Drops correspondences whose src point falls in a src mask or whose dst
/// point falls in a dst mask.
std::vector<Correspondence> mask_filter(std::span<const Correspondence> matches, std::span<const BBox> src_masks,
                                        std::span<const BBox> dst_masks, double enlarge);

/// Hartley-normalized DLT fit mapping src -> dst.
/// Throws InsufficientPoints (< 4) or DegenerateConfiguration.
Homography dlt_homography(std::span<const Correspondence> corrs);

/// Average of the forward (src->dst) and backward (dst->src) reprojection
/// distances. Returns +inf if either projection is degenerate.
double symmetric_transfer_error(const Homography& h, const Homography& h_inv, const Correspondence& c);

/// RANSAC over minimal 4-point samples with adaptive termination and a final
/// DLT refit on the best consensus set. Deterministic for a fixed seed.
EstimateReport ransac_homography(std::span<const Correspondence> corrs, const RansacConfig& cfg);

/// Lifts a homography estimated on coordinates scaled by `rho` back to full
/// resolution: S^-1 * H * S with S = diag(rho, rho, 1).
Homography upscale_homography(const Homography& scaled, double rho);

/// Scales both endpoints of every correspondence by rho.
std::vector<Correspondence> scale_correspondences(std::span<const Correspondence> corrs, double rho);

}  // namespace aerotraj
