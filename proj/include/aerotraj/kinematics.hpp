#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "aerotraj/geometry.hpp"
#include "aerotraj/trackmodel.hpp"

namespace aerotraj {

struct KinematicsConfig {
  double sigma = 14.0;  ///< frames
  Rational fps;
  double speed_floor_kmh = 1.0;

  /// Kernel half-width round(3σ).
  int half_width() const;
  void validate() const;
};

struct KinematicSample {
  int frame = 0;
  std::optional<double> raw_speed;     ///< m/s, from the second frame on
  std::optional<double> smooth_speed;  ///< m/s
  std::optional<double> acceleration;  ///< m/s², from the third frame on
  bool gated = true;                   ///< frame belongs to the visibility set
};

using KinematicProfile = std::vector<KinematicSample>;

/// Fills every interior frame by linear interpolation. Throws TooShort (< 2 points).
std::map<int, Point2> interpolate_gaps(const std::map<int, Point2>& points);

/// v[k] = ||p[k] - p[k-1]|| * fps; the result has points.size() - 1 entries.
std::vector<double> raw_speed(std::span<const Point2> dense, Rational fps);

/// Index into [0, n) after repeated mirror reflection about both ends
/// (the end samples are not duplicated).
std::size_t reflect_index(long long i, std::size_t n);

/// Normalized Gaussian weights over [-M, M], M = round(3σ).
std::vector<double> gaussian_kernel(double sigma);

/// Convolution with the normalized kernel and reflected boundaries.
std::vector<double> gaussian_smooth(std::span<const double> v, double sigma);

/// a[k] = (v[k] - v[k-1]) * fps; size v.size() - 1.
std::vector<double> acceleration(std::span<const double> smoothed, Rational fps);

/// Full profile over the dense frame range of `local_points` (metres).
/// `visible` marks which frames are gated in.
KinematicProfile compute_kinematics(const std::map<int, Point2>& local_points, const KinematicsConfig& cfg,
                                    const std::vector<int>& visible);

/// Clears smooth speed and acceleration on frames outside `visible`.
KinematicProfile gate_by_visibility(const KinematicProfile& profile, const std::vector<int>& visible);

}  // namespace aerotraj
