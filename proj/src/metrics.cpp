#include "aerotraj/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aerotraj/errors.hpp"

namespace aerotraj {

SceneSpec SceneSpec::from_size(double width, double height, std::vector<BBox> boxes) {
  SceneSpec s;
  s.corners = {Point2{0.0, 0.0}, Point2{width, 0.0}, Point2{width, height}, Point2{0.0, height}};
  s.boxes = std::move(boxes);
  return s;
}

double SceneSpec::width() const {
  double lo = corners[0].x, hi = corners[0].x;
  for (const auto& p : corners) {
    lo = std::min(lo, p.x);
    hi = std::max(hi, p.x);
  }
  return hi - lo;
}

double SceneSpec::height() const {
  double lo = corners[0].y, hi = corners[0].y;
  for (const auto& p : corners) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }
  return hi - lo;
}

Point2 SceneSpec::center() const {
  Point2 c{};
  for (const auto& p : corners) c = c + p;
  return 0.25 * c;
}

double round_trip_corner_error(const RegistrationTrial& trial) {
  if (!trial.h_est || !trial.scene) return std::numeric_limits<double>::infinity();
  try {
    double sum = 0.0;
    for (const auto& p : trial.scene->corners) sum += distance(p, trial.h_est->apply(trial.h_true.apply(p)));
    return sum / 4.0;
  } catch (const DegenerateProjection&) {
    return std::numeric_limits<double>::infinity();
  }
}

double round_trip_box_iou(const RegistrationTrial& trial) {
  if (!trial.scene) return 0.0;
  if (trial.scene->boxes.empty()) throw Error("MIoU needs at least one box per scene");
  if (!trial.h_est) return 0.0;
  double sum = 0.0;
  for (const auto& b : trial.scene->boxes) {
    const Quad q = Quad::from_bbox(b);
    try {
      sum += quad_iou(q, transform_quad(*trial.h_est, transform_quad(trial.h_true, q)));
    } catch (const DegenerateProjection&) {
    } catch (const NonConvexInput&) {
    }
  }
  return sum / static_cast<double>(trial.scene->boxes.size());
}

double hea(std::span<const RegistrationTrial> trials, double eps) {
  if (trials.empty()) throw Error("HEA needs at least one trial");
  std::size_t hits = 0;
  for (const auto& t : trials)
    if (round_trip_corner_error(t) <= eps) ++hits;
  return static_cast<double>(hits) / static_cast<double>(trials.size());
}

double miou(std::span<const RegistrationTrial> trials) {
  if (trials.empty()) throw Error("MIoU needs at least one trial");
  double sum = 0.0;
  for (const auto& t : trials) sum += round_trip_box_iou(t);
  return sum / static_cast<double>(trials.size());
}

// ---------------------------------------------------------------------------

NearestPair nearest_pair(const ComparisonSample& sample) {
  const auto& cand = sample.candidate;
  if (cand.size() < 2) throw DegenerateSegment("candidate trajectory needs at least two points");
  NearestPair out;
  out.d1 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const double d = distance(cand[i].p, sample.probe);
    if (d < out.d1) {
      out.d1 = d;
      out.first = i;
    }
  }
  const std::size_t i = out.first;
  if (i == 0) {
    out.second = 1;
  } else if (i + 1 == cand.size()) {
    out.second = i - 1;
  } else {
    const double prev = distance(cand[i - 1].p, sample.probe);
    const double next = distance(cand[i + 1].p, sample.probe);
    out.second = next < prev ? i + 1 : i - 1;
  }
  out.d2 = distance(cand[out.second].p, sample.probe);
  if (cand[out.first].p == cand[out.second].p) throw DegenerateSegment("nearest candidate points coincide");
  return out;
}

double positional_deviation(const ComparisonSample& sample) {
  const NearestPair np = nearest_pair(sample);
  const Point2 p1 = sample.candidate[np.first].p;
  const Point2 p2 = sample.candidate[np.second].p;
  const Point2 seg = p2 - p1;
  return std::abs(cross(seg, p1 - sample.probe)) / norm(seg);
}

SpeedDifference speed_difference(const ComparisonSample& sample) {
  const NearestPair np = nearest_pair(sample);
  const double total = np.d1 + np.d2;
  if (!(total > 0.0)) throw DegenerateSegment("probe coincides with both candidate points");
  SpeedDifference out;
  out.w1 = np.d2 / total;
  out.w2 = np.d1 / total;
  const double interp = out.w1 * sample.candidate[np.first].speed_kmh + out.w2 * sample.candidate[np.second].speed_kmh;
  out.delta_v = sample.probe_speed_kmh - interp;
  return out;
}

std::optional<MeanSd> mean_sd(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return MeanSd{mean, std::sqrt(var / n), values.size()};
}

std::vector<GroupReport> aggregate_comparison(std::span<const ComparisonGroup> groups, double speed_floor_kmh) {
  std::vector<GroupReport> out;
  for (const auto& g : groups) {
    const auto dev = mean_sd(g.deviations);
    if (!dev) continue;
    GroupReport r;
    r.label = g.label;
    r.deviation = *dev;
    std::vector<double> dv;
    for (std::size_t i = 0; i < g.speed_diffs.size(); ++i) {
      const double v = i < g.probe_speeds_kmh.size() ? g.probe_speeds_kmh[i] : 0.0;
      if (v > speed_floor_kmh) dv.push_back(g.speed_diffs[i]);
    }
    r.speed_diff = mean_sd(dv);
    for (std::size_t i = 1; i < g.trajectory.size(); ++i) r.length_m += distance(g.trajectory[i], g.trajectory[i - 1]);
    r.duration_s = static_cast<double>(g.trajectory.size()) * static_cast<double>(g.fps.den) /
                   static_cast<double>(g.fps.num);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace aerotraj
