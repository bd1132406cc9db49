#include "aerotraj/dimensions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aerotraj/errors.hpp"

namespace aerotraj {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

double DimConfig::kappa_for(int cls) const {
  if (cls < 0 || cls >= kNumVehicleClasses) return kInf;
  return kappa[static_cast<std::size_t>(cls)];
}

void DimConfig::validate() const {
  if (!(margin_px >= 0.0)) throw ConfigError("visibility margin must be non-negative");
  if (!(azimuth_tol_deg > 0.0)) throw ConfigError("azimuth tolerance must be positive");
  if (!(min_move_m > 0.0) || !(gsd > 0.0)) throw ConfigError("r_m and GSD must be positive");
  for (double k : kappa)
    if (!(k > 1.0)) throw ConfigError("kappa thresholds must exceed 1");
}

DimConfig DimConfig::strict() {
  DimConfig cfg;
  cfg.azimuth_tol_deg = 5.0;
  cfg.kappa.fill(kInf);
  return cfg;
}

DimConfig DimConfig::preset(std::string_view name) {
  if (name == "default") return defaults();
  if (name == "strict") return strict();
  throw ConfigError("unknown dimension preset '" + std::string(name) + "'");
}

std::string_view to_string(DimPath path) {
  switch (path) {
    case DimPath::azimuth_filtered: return "azimuth_filtered";
    case DimPath::ratio_filtered: return "ratio_filtered";
    case DimPath::none: break;
  }
  return "none";
}

std::vector<int> visibility_set(const Track& raw, FrameSize size, double margin) {
  std::vector<int> frames;
  for (const auto& p : raw.points)
    if (visibility_flag(p, size, margin)) frames.push_back(p.frame);
  return frames;
}

DimSamples initial_dims(const Track& raw, FrameSize size, const std::vector<int>& visible) {
  if (visible.empty()) throw EmptyVisibilitySet("no fully visible boxes for id " + std::to_string(raw.id));
  DimSamples out;
  auto v = visible.begin();
  for (const auto& p : raw.points) {
    while (v != visible.end() && *v < p.frame) ++v;
    if (v == visible.end()) break;
    if (*v != p.frame) continue;
    const BBox px = to_pixels(p.det.bbox, size);
    out.frames.push_back(p.frame);
    out.lengths.push_back(std::max(px.w, px.h));
    out.widths.push_back(std::min(px.w, px.h));
  }
  return out;
}

std::vector<AzimuthWindow> azimuth_sequence(const Track& stabilized, FrameSize size, const std::vector<int>& visible,
                                            double r_px) {
  std::vector<AzimuthWindow> out;
  if (visible.empty()) return out;
  const int first = visible.front();
  const int last = visible.back();

  std::vector<std::pair<int, Point2>> centers;
  for (const auto& p : stabilized.points) {
    if (p.frame < first || p.frame > last) continue;
    const BBox px = to_pixels(p.det.bbox, size);
    centers.emplace_back(p.frame, Point2{px.cx, px.cy});
  }
  if (centers.empty()) return out;

  std::size_t anchor = 0;
  for (std::size_t i = 1; i < centers.size(); ++i) {
    const Point2 a = centers[anchor].second;
    const Point2 b = centers[i].second;
    if (distance(a, b) < r_px) continue;
    double theta = std::atan2(a.y - b.y, b.x - a.x);
    if (theta < 0.0) theta += kTwoPi;
    if (theta >= kTwoPi) theta = 0.0;
    out.push_back({theta, centers[anchor].first, centers[i].first});
    anchor = i;
  }
  return out;
}

double cardinal_deviation(double theta) {
  static constexpr std::array<double, 5> kCardinals = {0.0, std::numbers::pi / 2.0, std::numbers::pi,
                                                       3.0 * std::numbers::pi / 2.0, kTwoPi};
  double best = kInf;
  for (double phi : kCardinals) best = std::min(best, std::abs(theta - phi));
  return best;
}

DimSamples azimuth_filter(const DimSamples& samples, const std::vector<AzimuthWindow>& windows, double tol_rad) {
  DimSamples out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int f = samples.frames[i];
    const bool keep = std::any_of(windows.begin(), windows.end(), [&](const AzimuthWindow& w) {
      return f >= w.begin && f < w.end && cardinal_deviation(w.theta) <= tol_rad;
    });
    if (!keep) continue;
    out.frames.push_back(f);
    out.lengths.push_back(samples.lengths[i]);
    out.widths.push_back(samples.widths[i]);
  }
  return out;
}

DimSamples ratio_filter(const DimSamples& samples, double kappa) {
  for (double w : samples.widths)
    if (w == 0.0) throw DivisionByZero("zero-width box in dimension samples");
  DimSamples out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples.lengths[i] / samples.widths[i] >= kappa)) continue;
    out.frames.push_back(samples.frames[i]);
    out.lengths.push_back(samples.lengths[i]);
    out.widths.push_back(samples.widths[i]);
  }
  return out;
}

double first_quartile(std::vector<double> values) {
  if (values.empty()) throw EmptySet("quartile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * 0.25;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::pair<double, double> quartile_dims(const std::vector<double>& lengths, const std::vector<double>& widths) {
  return {first_quartile(lengths), first_quartile(widths)};
}

std::pair<double, double> dims_to_world(double length_px, double width_px, FrameSize size,
                                        const Homography& ref_to_ortho, const GeoTransform& geo_local) {
  const double w = size.width, h = size.height;
  const Point2 p1{w / 2.0, h / 2.0};
  const Point2 p2{w / 2.0, (h + width_px) / 2.0};
  const Point2 p3{(w + length_px) / 2.0, h / 2.0};
  auto to_local = [&](Point2 p) { return pixel_to_world(geo_local, ref_to_ortho.apply(p)); };
  const Point2 q1 = to_local(p1);
  const Point2 q2 = to_local(p2);
  const Point2 q3 = to_local(p3);
  return {2.0 * distance(q3, q1), 2.0 * distance(q2, q1)};
}

std::optional<DimensionEstimate> estimate_dimensions(const Track& raw, const Track& stabilized, FrameSize size,
                                                     const DimConfig& cfg, const Homography& ref_to_ortho,
                                                     const GeoTransform& geo_local) {
  const std::vector<int> visible = visibility_set(raw, size, cfg.margin_px);
  if (visible.empty()) return std::nullopt;
  const DimSamples samples = initial_dims(raw, size, visible);

  const auto windows = azimuth_sequence(stabilized, size, visible, cfg.r_px());
  DimSamples kept;
  DimPath path;
  if (!windows.empty()) {
    kept = azimuth_filter(samples, windows, cfg.azimuth_tol_deg * std::numbers::pi / 180.0);
    path = DimPath::azimuth_filtered;
  } else {
    const int cls = raw.points.empty() ? -1 : raw.points.front().det.cls;
    kept = ratio_filter(samples, cfg.kappa_for(cls));
    path = DimPath::ratio_filtered;
  }
  if (kept.empty()) return std::nullopt;

  DimensionEstimate est;
  std::tie(est.length_px, est.width_px) = quartile_dims(kept.lengths, kept.widths);
  std::tie(est.length_m, est.width_m) = dims_to_world(est.length_px, est.width_px, size, ref_to_ortho, geo_local);
  est.n_samples = static_cast<int>(kept.size());
  est.path = path;
  return est;
}

}  // namespace aerotraj
