#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "aerotraj/geometry.hpp"
#include "aerotraj/trackmodel.hpp"

namespace aerotraj {

/// Vehicle classes: 0 car/van, 1 bus, 2 truck, 3 motorcycle.
inline constexpr int kNumVehicleClasses = 4;

struct DimConfig {
  double margin_px = 4.0;
  double azimuth_tol_deg = 15.0;
  double min_move_m = 1.25;
  double gsd = 0.02725;  ///< metres per pixel
  std::array<double, kNumVehicleClasses> kappa = {1.83, 2.85, 1.7, 1.8};

  double r_px() const { return min_move_m / gsd; }
  /// Class-specific non-squareness threshold; unknown classes get +inf.
  double kappa_for(int cls) const;
  void validate() const;

  static DimConfig defaults() { return {}; }
  /// θ̄ = 5° and κ = ∞ for every class.
  static DimConfig strict();
  /// "default" or "strict"; throws ConfigError otherwise.
  static DimConfig preset(std::string_view name);
};

enum class DimPath { azimuth_filtered, ratio_filtered, none };

std::string_view to_string(DimPath path);

struct DimensionEstimate {
  double length_px = 0.0;
  double width_px = 0.0;
  double length_m = 0.0;
  double width_m = 0.0;
  int n_samples = 0;
  DimPath path = DimPath::none;
};

/// Instantaneous dims keyed by frame.
struct DimSamples {
  std::vector<int> frames;
  std::vector<double> lengths;
  std::vector<double> widths;

  bool empty() const { return frames.empty(); }
  std::size_t size() const { return frames.size(); }
};

/// Heading over the frame window [begin, end).
struct AzimuthWindow {
  double theta = 0.0;  ///< radians in [0, 2π)
  int begin = 0;
  int end = 0;
};

/// Frames of `raw` (un-stabilized) whose box passes the strict margin test.
std::vector<int> visibility_set(const Track& raw, FrameSize size, double margin);

/// L = max(w,h), W = min(w,h) in pixels for frames in `visible`.
/// Throws EmptyVisibilitySet when `visible` is empty.
DimSamples initial_dims(const Track& raw, FrameSize size, const std::vector<int>& visible);

/// Recursive heading windows over the stabilized track centers.
std::vector<AzimuthWindow> azimuth_sequence(const Track& stabilized, FrameSize size, const std::vector<int>& visible,
                                            double r_px);

/// Minimum angular distance from θ to {0, π/2, π, 3π/2, 2π}.
double cardinal_deviation(double theta);

DimSamples azimuth_filter(const DimSamples& samples, const std::vector<AzimuthWindow>& windows, double tol_rad);

/// Keeps samples with L/W >= kappa. Throws DivisionByZero if any W is 0.
DimSamples ratio_filter(const DimSamples& samples, double kappa);

/// First quartile with linear interpolation at rank (n-1)/4. Throws EmptySet.
double first_quartile(std::vector<double> values);
std::pair<double, double> quartile_dims(const std::vector<double>& lengths, const std::vector<double>& widths);

/// Three-point decomposition of a frame-centred box in local metres.
std::pair<double, double> dims_to_world(double length_px, double width_px, FrameSize size,
                                        const Homography& ref_to_ortho, const GeoTransform& geo_local);

std::optional<DimensionEstimate> estimate_dimensions(const Track& raw, const Track& stabilized, FrameSize size,
                                                     const DimConfig& cfg, const Homography& ref_to_ortho,
                                                     const GeoTransform& geo_local);

}  // namespace aerotraj
