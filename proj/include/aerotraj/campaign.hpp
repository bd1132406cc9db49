#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aerotraj/geometry.hpp"
#include "aerotraj/metrics.hpp"
#include "aerotraj/registration.hpp"

namespace aerotraj {

/// Bounds of the random drone-motion homographies.
struct DistortionRanges {
  double rot_max_deg = 15.0;
  double trans_max = 0.10;  ///< fraction of scene width/height
  double scale_max = 0.05;  ///< isotropic, fraction
  double persp_max = 5e-5;  ///< bottom-row coefficients

  void validate() const;
};

struct SynthConfig {
  int n_points = 100;
  double noise_sigma = 0.5;  ///< px
  double outlier_fraction = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticMatches {
  std::vector<Correspondence> matches;
  std::vector<bool> is_outlier;
};

struct CampaignGrid {
  std::vector<double> snn_ratios = {0.9};
  std::vector<double> downscales = {1.0};
  std::vector<double> thresholds = {2.0};
  std::vector<int> keypoints = {100};
  int trials_per_scene = 100;

  void validate() const;
  std::size_t cell_count() const;
};

/// One point of the grid.
struct CampaignCell {
  double snn_ratio = 0.9;
  double downscale = 1.0;
  double threshold = 2.0;
  int keypoints = 100;
};

struct CampaignConfig {
  double noise_sigma = 0.5;
  double outlier_fraction = 0.3;
  double confidence = 0.999999;
  int max_iterations = 5000;
  double hea_eps = 3.0;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  bool record_timing = false;
};

struct TrialOutcome {
  bool estimated = false;
  double corner_error = 0.0;  ///< mean px, +inf when estimation failed
  double box_iou = 0.0;
  double time_ms = 0.0;
};

struct CampaignRow {
  CampaignCell cell;
  double hea = 0.0;
  double miou = 0.0;
  std::optional<double> mean_time_ms;
  std::size_t trials = 0;
};

/// Rotation about the scene center, translation, isotropic scale and
/// bottom-row perspective terms, each uniform within its range.
/// Composition: C * S * R * T * C^-1 with the perspective entries then set in row 2.
Homography random_homography(const DistortionRanges& ranges, const SceneSpec& scene, std::uint64_t seed);

/// Image-free stand-in for keypoint matching between a scene and its
/// distorted copy: src in the scene, dst = H_true(src) + noise for inliers,
/// dst uniform in the scene for outliers. Descriptor distances are assigned
/// so inliers pass a 0.9 ratio test and outliers fail it, with 10% label noise.
SyntheticMatches synth_correspondences(const SceneSpec& scene, const Homography& h_true, const SynthConfig& cfg);

/// Vehicle-sized boxes scattered over width x height scenes.
std::vector<SceneSpec> make_synthetic_scenes(std::size_t count, double width, double height,
                                             std::size_t boxes_per_scene, std::uint64_t seed);

std::vector<CampaignCell> expand_grid(const CampaignGrid& grid);

/// Draws H_true and matches for (scene, trial), estimates the inverse map at
/// the cell's settings and scores it.
TrialOutcome run_trial(const SceneSpec& scene, std::size_t scene_index, std::size_t trial_index,
                       const DistortionRanges& ranges, const CampaignCell& cell, const CampaignConfig& cfg);

/// Per-cell rows plus every trial outcome, cell-major then scene then trial.
struct CampaignResult {
  std::vector<CampaignRow> rows;
  std::vector<TrialOutcome> outcomes;
  std::size_t trials_per_cell = 0;
  std::size_t trials_per_scene = 0;
};

CampaignResult run_campaign_detailed(std::span<const SceneSpec> scenes, const DistortionRanges& ranges,
                                     const CampaignGrid& grid, const CampaignConfig& cfg);

/// One row per grid cell. Results do not depend on cfg.jobs.
std::vector<CampaignRow> run_campaign(std::span<const SceneSpec> scenes, const DistortionRanges& ranges,
                                      const CampaignGrid& grid, const CampaignConfig& cfg);

}  // namespace aerotraj
