#include "aerotraj/campaign.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

#include "aerotraj/errors.hpp"
#include "aerotraj/parallel.hpp"
#include "aerotraj/random.hpp"

namespace aerotraj {

void DistortionRanges::validate() const {
  if (!(rot_max_deg >= 0.0 && trans_max >= 0.0 && scale_max >= 0.0 && persp_max >= 0.0))
    throw ConfigError("distortion ranges must be non-negative");
}

void SynthConfig::validate() const {
  if (n_points < 8) throw ConfigError("synthetic matches need at least 8 points");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) throw ConfigError("outlier fraction must lie in [0,1)");
}

void CampaignGrid::validate() const {
  if (trials_per_scene < 1) throw ConfigError("trials per scene must be at least 1");
  if (snn_ratios.empty() || downscales.empty() || thresholds.empty() || keypoints.empty())
    throw ConfigError("every grid axis needs at least one value");
  for (double r : snn_ratios)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("SNN ratios must lie in (0,1]");
  for (double r : downscales)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("downscale factors must lie in (0,1]");
  for (double t : thresholds)
    if (!(t > 0.0)) throw ConfigError("thresholds must be positive");
  for (int k : keypoints)
    if (k < 8) throw ConfigError("keypoint counts must be at least 8");
}

std::size_t CampaignGrid::cell_count() const {
  return snn_ratios.size() * downscales.size() * thresholds.size() * keypoints.size();
}

Homography random_homography(const DistortionRanges& ranges, const SceneSpec& scene, std::uint64_t seed) {
  ranges.validate();
  RandomEngine rng = make_engine(seed);
  const double angle = uniform(rng, -ranges.rot_max_deg, ranges.rot_max_deg) * std::numbers::pi / 180.0;
  const double tx = uniform(rng, -ranges.trans_max, ranges.trans_max) * scene.width();
  const double ty = uniform(rng, -ranges.trans_max, ranges.trans_max) * scene.height();
  const double s = 1.0 + uniform(rng, -ranges.scale_max, ranges.scale_max);
  const double p0 = uniform(rng, -ranges.persp_max, ranges.persp_max);
  const double p1 = uniform(rng, -ranges.persp_max, ranges.persp_max);

  const Point2 c = scene.center();
  Eigen::Matrix3d to_center = Eigen::Matrix3d::Identity();
  to_center(0, 2) = c.x;
  to_center(1, 2) = c.y;
  Eigen::Matrix3d from_center = Eigen::Matrix3d::Identity();
  from_center(0, 2) = -c.x;
  from_center(1, 2) = -c.y;
  Eigen::Matrix3d scale = Eigen::Matrix3d::Identity();
  scale(0, 0) = s;
  scale(1, 1) = s;
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  rot(0, 0) = std::cos(angle);
  rot(0, 1) = -std::sin(angle);
  rot(1, 0) = std::sin(angle);
  rot(1, 1) = std::cos(angle);
  Eigen::Matrix3d shift = Eigen::Matrix3d::Identity();
  shift(0, 2) = tx;
  shift(1, 2) = ty;

  Eigen::Matrix3d m = to_center * scale * rot * shift * from_center;
  m(2, 0) = p0;
  m(2, 1) = p1;
  return Homography(m);
}

SyntheticMatches synth_correspondences(const SceneSpec& scene, const Homography& h_true, const SynthConfig& cfg) {
  cfg.validate();
  RandomEngine rng = make_engine(cfg.seed);
  const auto n = static_cast<std::size_t>(cfg.n_points);
  double x0 = scene.corners[0].x, y0 = scene.corners[0].y;
  for (const auto& p : scene.corners) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
  }
  const double w = scene.width(), h = scene.height();

  std::vector<Point2> src(n);
  for (auto& p : src) {
    p.x = x0 + uniform01(rng) * w;
    p.y = y0 + uniform01(rng) * h;
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[static_cast<std::size_t>(uniform_index(rng, i + 1))]);
  const auto n_out = static_cast<std::size_t>(std::lround(cfg.outlier_fraction * static_cast<double>(n)));

  SyntheticMatches out;
  out.is_outlier.assign(n, false);
  for (std::size_t i = 0; i < n_out; ++i) out.is_outlier[perm[i]] = true;
  out.matches.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // every draw is consumed for every point so the stream is independent of outlier_fraction
    const double nx = standard_normal(rng);
    const double ny = standard_normal(rng);
    const Point2 random_dst{x0 + uniform01(rng) * w, y0 + uniform01(rng) * h};
    const bool flip = uniform01(rng) < 0.1;
    const double d2 = uniform(rng, 100.0, 300.0);
    const double good_ratio = uniform(rng, 0.3, 0.85);
    const double bad_ratio = uniform(rng, 0.92, 1.0);

    Correspondence c;
    c.src = src[i];
    if (out.is_outlier[i]) {
      c.dst = random_dst;
    } else {
      const Point2 mapped = h_true.apply(src[i]);
      c.dst = {mapped.x + cfg.noise_sigma * nx, mapped.y + cfg.noise_sigma * ny};
    }
    const bool distinctive = out.is_outlier[i] == flip;
    c.d2 = d2;
    c.d1 = (distinctive ? good_ratio : bad_ratio) * d2;
    out.matches.push_back(c);
  }
  return out;
}

std::vector<SceneSpec> make_synthetic_scenes(std::size_t count, double width, double height,
                                             std::size_t boxes_per_scene, std::uint64_t seed) {
  std::vector<SceneSpec> scenes;
  scenes.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    RandomEngine rng = make_engine(derive_seed(seed, {s}));
    std::vector<BBox> boxes;
    boxes.reserve(boxes_per_scene);
    for (std::size_t b = 0; b < boxes_per_scene; ++b) {
      const double length = uniform(rng, 120.0, 200.0);
      const double breadth = uniform(rng, 50.0, 90.0);
      const bool horizontal = uniform01(rng) < 0.5;
      const double bw = horizontal ? length : breadth;
      const double bh = horizontal ? breadth : length;
      const double cx = uniform(rng, bw / 2.0, width - bw / 2.0);
      const double cy = uniform(rng, bh / 2.0, height - bh / 2.0);
      boxes.push_back({cx, cy, bw, bh});
    }
    scenes.push_back(SceneSpec::from_size(width, height, std::move(boxes)));
  }
  return scenes;
}

std::vector<CampaignCell> expand_grid(const CampaignGrid& grid) {
  std::vector<CampaignCell> cells;
  cells.reserve(grid.cell_count());
  for (double snn : grid.snn_ratios)
    for (double rho : grid.downscales)
      for (double eta : grid.thresholds)
        for (int k : grid.keypoints) cells.push_back({snn, rho, eta, k});
  return cells;
}

TrialOutcome run_trial(const SceneSpec& scene, std::size_t scene_index, std::size_t trial_index,
                       const DistortionRanges& ranges, const CampaignCell& cell, const CampaignConfig& cfg) {
  const std::uint64_t base = derive_seed(cfg.master_seed, {scene_index, trial_index});
  const Homography h_true = random_homography(ranges, scene, derive_seed(base, {0}));

  SynthConfig synth;
  synth.n_points = cell.keypoints;
  synth.noise_sigma = cfg.noise_sigma;
  synth.outlier_fraction = cfg.outlier_fraction;
  synth.seed = derive_seed(base, {1});
  const SyntheticMatches generated = synth_correspondences(scene, h_true, synth);

  // estimate distorted -> original, the same direction as frame k -> reference
  std::vector<Correspondence> corrs;
  corrs.reserve(generated.matches.size());
  for (const auto& m : generated.matches) corrs.push_back({m.dst, m.src, m.d1, m.d2});

  RansacConfig rc;
  rc.confidence = cfg.confidence;
  rc.max_iterations = cfg.max_iterations;
  rc.reproj_threshold = cell.threshold;
  rc.seed = derive_seed(base, {2});

  TrialOutcome outcome;
  std::optional<Homography> estimate;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto filtered = snn_filter(corrs, cell.snn_ratio);
    if (cell.downscale != 1.0) filtered = scale_correspondences(filtered, cell.downscale);
    const EstimateReport report = ransac_homography(filtered, rc);
    estimate = cell.downscale != 1.0 ? upscale_homography(report.h, cell.downscale) : report.h;
  } catch (const Error&) {
    estimate.reset();
  }
  const auto t1 = std::chrono::steady_clock::now();
  outcome.time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  const RegistrationTrial trial{h_true, estimate, &scene};
  outcome.estimated = estimate.has_value();
  outcome.corner_error = round_trip_corner_error(trial);
  outcome.box_iou = scene.boxes.empty() ? 0.0 : round_trip_box_iou(trial);
  return outcome;
}

CampaignResult run_campaign_detailed(std::span<const SceneSpec> scenes, const DistortionRanges& ranges,
                                     const CampaignGrid& grid, const CampaignConfig& cfg) {
  if (scenes.empty()) throw ConfigError("campaign needs at least one scene");
  grid.validate();
  ranges.validate();
  const auto cells = expand_grid(grid);
  const std::size_t per_cell = scenes.size() * static_cast<std::size_t>(grid.trials_per_scene);
  std::vector<TrialOutcome> outcomes(cells.size() * per_cell);

  parallel_for(outcomes.size(), cfg.jobs, [&](std::size_t task) {
    const std::size_t cell = task / per_cell;
    const std::size_t within = task % per_cell;
    const std::size_t scene = within / static_cast<std::size_t>(grid.trials_per_scene);
    const std::size_t trial = within % static_cast<std::size_t>(grid.trials_per_scene);
    outcomes[task] = run_trial(scenes[scene], scene, trial, ranges, cells[cell], cfg);
  });

  CampaignResult result;
  result.trials_per_cell = per_cell;
  result.trials_per_scene = static_cast<std::size_t>(grid.trials_per_scene);
  auto& rows = result.rows;
  rows.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CampaignRow row;
    row.cell = cells[c];
    row.trials = per_cell;
    std::size_t hits = 0;
    double iou_sum = 0.0, time_sum = 0.0;
    for (std::size_t i = 0; i < per_cell; ++i) {
      const TrialOutcome& o = outcomes[c * per_cell + i];
      if (o.corner_error <= cfg.hea_eps) ++hits;
      iou_sum += o.box_iou;
      time_sum += o.time_ms;
    }
    row.hea = static_cast<double>(hits) / static_cast<double>(per_cell);
    row.miou = iou_sum / static_cast<double>(per_cell);
    if (cfg.record_timing) row.mean_time_ms = time_sum / static_cast<double>(per_cell);
    rows.push_back(row);
  }
  result.outcomes = std::move(outcomes);
  return result;
}

std::vector<CampaignRow> run_campaign(std::span<const SceneSpec> scenes, const DistortionRanges& ranges,
                                      const CampaignGrid& grid, const CampaignConfig& cfg) {
  return run_campaign_detailed(scenes, ranges, grid, cfg).rows;
}

}  // namespace aerotraj
