#include "aerotraj/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "aerotraj/errors.hpp"

namespace aerotraj {

int KinematicsConfig::half_width() const { return static_cast<int>(std::lround(3.0 * sigma)); }

void KinematicsConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("smoothing sigma must be positive");
  if (fps.num <= 0 || fps.den <= 0) throw ConfigError("fps must be positive");
}

std::map<int, Point2> interpolate_gaps(const std::map<int, Point2>& points) {
  if (points.size() < 2) throw TooShort("interpolation needs at least two points");
  std::map<int, Point2> out;
  auto prev = points.begin();
  out.insert(*prev);
  for (auto it = std::next(points.begin()); it != points.end(); prev = it, ++it) {
    const int gap = it->first - prev->first;
    for (int k = 1; k < gap; ++k) {
      const double t = static_cast<double>(k) / gap;
      out.emplace(prev->first + k, prev->second + t * (it->second - prev->second));
    }
    out.insert(*it);
  }
  return out;
}

std::vector<double> raw_speed(std::span<const Point2> dense, Rational fps) {
  std::vector<double> v;
  if (dense.size() < 2) return v;
  v.reserve(dense.size() - 1);
  const double rate = fps.value();
  for (std::size_t k = 1; k < dense.size(); ++k) v.push_back(distance(dense[k], dense[k - 1]) * rate);
  return v;
}

std::size_t reflect_index(long long i, std::size_t n) {
  if (n <= 1) return 0;
  const long long period = 2 * (static_cast<long long>(n) - 1);
  long long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<long long>(n) ? m : period - m);
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("smoothing sigma must be positive");
  const int m = static_cast<int>(std::lround(3.0 * sigma));
  std::vector<double> w(static_cast<std::size_t>(2 * m + 1));
  double sum = 0.0;
  for (int i = -m; i <= m; ++i) {
    const double g = std::exp(-static_cast<double>(i) * i / (2.0 * sigma * sigma));
    w[static_cast<std::size_t>(i + m)] = g;
    sum += g;
  }
  for (double& g : w) g /= sum;
  return w;
}

std::vector<double> gaussian_smooth(std::span<const double> v, double sigma) {
  const std::vector<double> w = gaussian_kernel(sigma);
  const long long m = static_cast<long long>(w.size() / 2);
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    // accumulate deviations from v[k] so constant runs come back bit-exact
    double acc = 0.0;
    for (long long i = -m; i <= m; ++i)
      acc += (v[reflect_index(static_cast<long long>(k) + i, v.size())] - v[k]) * w[static_cast<std::size_t>(i + m)];
    out[k] = v[k] + acc;
  }
  return out;
}

std::vector<double> acceleration(std::span<const double> smoothed, Rational fps) {
  std::vector<double> a;
  if (smoothed.size() < 2) return a;
  a.reserve(smoothed.size() - 1);
  const double rate = fps.value();
  for (std::size_t k = 1; k < smoothed.size(); ++k) a.push_back((smoothed[k] - smoothed[k - 1]) * rate);
  return a;
}

KinematicProfile compute_kinematics(const std::map<int, Point2>& local_points, const KinematicsConfig& cfg,
                                    const std::vector<int>& visible) {
  cfg.validate();
  const auto dense = interpolate_gaps(local_points);
  std::vector<int> frames;
  std::vector<Point2> pts;
  frames.reserve(dense.size());
  pts.reserve(dense.size());
  for (const auto& [f, p] : dense) {
    frames.push_back(f);
    pts.push_back(p);
  }
  const auto v = raw_speed(pts, cfg.fps);
  const auto vs = gaussian_smooth(v, cfg.sigma);
  const auto a = acceleration(vs, cfg.fps);

  KinematicProfile profile(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    auto& s = profile[k];
    s.frame = frames[k];
    s.gated = std::binary_search(visible.begin(), visible.end(), frames[k]);
    if (k >= 1) {
      s.raw_speed = v[k - 1];
      s.smooth_speed = vs[k - 1];
    }
    if (k >= 2) s.acceleration = a[k - 2];
  }
  return profile;
}

KinematicProfile gate_by_visibility(const KinematicProfile& profile, const std::vector<int>& visible) {
  KinematicProfile out = profile;
  for (auto& s : out) {
    s.gated = std::binary_search(visible.begin(), visible.end(), s.frame);
    if (!s.gated) {
      s.smooth_speed.reset();
      s.acceleration.reset();
    }
  }
  return out;
}

}  // namespace aerotraj
