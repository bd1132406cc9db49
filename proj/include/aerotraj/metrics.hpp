#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aerotraj/geometry.hpp"
#include "aerotraj/trackmodel.hpp"

namespace aerotraj {

// ---------------------------------------------------------------------------
// Registration accuracy

struct SceneSpec {
  std::array<Point2, 4> corners;
  std::vector<BBox> boxes;

  static SceneSpec from_size(double width, double height, std::vector<BBox> boxes = {});
  double width() const;
  double height() const;
  Point2 center() const;
};

/// One synthetic registration trial: `h_true` distorts the scene, `h_est`
/// is the estimate of the inverse mapping.
struct RegistrationTrial {
  Homography h_true;
  std::optional<Homography> h_est;  ///< empty when the estimator failed
  const SceneSpec* scene = nullptr;
};

/// Mean corner displacement after the round trip h_est(h_true(p)); +inf on failure.
double round_trip_corner_error(const RegistrationTrial& trial);
/// Mean box IoU after the round trip; 0 on failure.
double round_trip_box_iou(const RegistrationTrial& trial);

/// Fraction of trials whose mean corner displacement is <= eps.
double hea(std::span<const RegistrationTrial> trials, double eps);
/// Grand mean over trials of the per-scene mean box IoU.
double miou(std::span<const RegistrationTrial> trials);

// ---------------------------------------------------------------------------
// Trajectory comparison

struct CandidatePoint {
  Point2 p;
  double speed_kmh = 0.0;
};

struct ComparisonSample {
  Point2 probe;
  double probe_speed_kmh = 0.0;
  std::span<const CandidatePoint> candidate;
};

/// Nearest candidate and its nearer index-neighbour.
struct NearestPair {
  std::size_t first = 0;
  std::size_t second = 0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Throws DegenerateSegment when fewer than 2 candidates or the pair coincides.
NearestPair nearest_pair(const ComparisonSample& sample);

/// Perpendicular distance from the probe to the line through the nearest pair.
double positional_deviation(const ComparisonSample& sample);

struct SpeedDifference {
  double delta_v = 0.0;  ///< km/h
  double w1 = 0.0;
  double w2 = 0.0;
};

SpeedDifference speed_difference(const ComparisonSample& sample);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  ///< population standard deviation
  std::size_t n = 0;
};

std::optional<MeanSd> mean_sd(std::span<const double> values);

struct ComparisonGroup {
  std::string label;
  std::vector<double> deviations;        ///< d_P per probe sample
  std::vector<double> speed_diffs;       ///< Δv per probe sample
  std::vector<double> probe_speeds_kmh;  ///< aligned with speed_diffs
  std::vector<Point2> trajectory;        ///< candidate trajectory, local metres
  Rational fps;
};

struct GroupReport {
  std::string label;
  MeanSd deviation;
  std::optional<MeanSd> speed_diff;  ///< empty when every probe speed is below the floor
  double length_m = 0.0;
  double duration_s = 0.0;
};

/// Groups without deviations are dropped. Δv samples with probe speed
/// <= speed_floor_kmh are excluded.
std::vector<GroupReport> aggregate_comparison(std::span<const ComparisonGroup> groups, double speed_floor_kmh = 1.0);

}  // namespace aerotraj
