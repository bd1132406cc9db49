// Acceptance checks, one PASS/FAIL line per criterion. Exit code is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "aerotraj/campaign.hpp"
#include "aerotraj/dataio.hpp"
#include "aerotraj/dimensions.hpp"
#include "aerotraj/errors.hpp"
#include "aerotraj/kinematics.hpp"
#include "aerotraj/metrics.hpp"
#include "aerotraj/registration.hpp"
#include "aerotraj/trackmodel.hpp"
#include "commands.hpp"
#include "pipeline_fixture.hpp"
#include "test_support.hpp"

using namespace aerotraj;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1 -------------------------------------------------------------------------
Verdict homography_recovery() {
  const auto scenes = make_synthetic_scenes(29, 3840, 2160, 20, 0xB0C5);
  const DistortionRanges ranges{15.0, 0.10, 0.05, 5e-5};
  const CampaignCell cell{0.9, 1.0, 2.0, 100};
  CampaignConfig cfg;
  cfg.noise_sigma = 0.5;
  cfg.outlier_fraction = 0.3;
  cfg.confidence = 0.999999;
  cfg.max_iterations = 5000;
  cfg.master_seed = 1;
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t hits = 0;
  double iou = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto out = run_trial(scenes[i % 29], i % 29, i / 29, ranges, cell, cfg);
    if (out.corner_error <= 3.0) ++hits;
    iou += out.box_iou;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double h = hits / 1000.0, m = iou / 1000.0;
  return {h >= 0.99 && m >= 0.98 && secs < 60.0, fmt("HEA(3px)=%.4f MIoU=%.4f time=%.1fs", h, m, secs)};
}

// 2 -------------------------------------------------------------------------
Verdict dlt_exactness() {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const Homography h = fixtures::random_near_identity(rng);
    const int n = 4 + t % 17;
    std::vector<Correspondence> c;
    for (int i = 0; i < n; ++i) {
      const Point2 p = fixtures::random_point(rng, 0.0, 3840.0);
      c.push_back({p, h.apply(p), std::nullopt, std::nullopt});
    }
    try {
      const Homography est = dlt_homography(c);
      const Homography est_inv = est.inverse();
      for (const auto& cc : c)
        worst = std::max({worst, distance(est.apply(cc.src), cc.dst), distance(est_inv.apply(cc.dst), cc.src)});
    } catch (const Error& e) {
      return {false, std::string("estimation failed: ") + e.what()};
    }
  }
  return {worst <= 1e-7, fmt("max symmetric error=%.3g px", worst)};
}

// 3 -------------------------------------------------------------------------
Verdict downscale_consistency() {
  const auto scenes = make_synthetic_scenes(29, 3840, 2160, 20, 3);
  CampaignGrid grid;
  grid.downscales = {0.5};
  grid.trials_per_scene = 10;
  CampaignConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.outlier_fraction = 0.0;
  cfg.hea_eps = 1.0;
  cfg.master_seed = 3;
  const auto rows = run_campaign(scenes, {}, grid, cfg);
  return {rows.size() == 1 && rows[0].hea == 1.0, fmt("HEA(1px)=%.6f over %.0f trials", rows[0].hea,
                                                      static_cast<double>(rows[0].trials))};
}

// 4 -------------------------------------------------------------------------
Track pixel_track(const std::vector<BBox>& boxes, int cls) {
  Track t{1, {}};
  for (std::size_t i = 0; i < boxes.size(); ++i)
    t.points.push_back({static_cast<int>(i) + 1, 1, Detection{to_normalized(boxes[i], {3840, 2160}), cls, 0.9}, true});
  return t;
}

Verdict dimension_oracle() {
  const FrameSize fs{3840, 2160};
  const GeoTransform gsd = GeoTransform::scale(0.02725);
  std::vector<BBox> along, diagonal, parked;
  for (int k = 0; k < 60; ++k) {
    along.push_back({500 + 20.0 * k, 1000, 180, 80});
    diagonal.push_back({500 + 15.0 * k, 500 + 15.0 * k, 150, 150});
    parked.push_back({1500, 1200, 180, 80});
  }
  const DimConfig cfg = DimConfig::defaults();
  const auto a = estimate_dimensions(pixel_track(along, 0), pixel_track(along, 0), fs, cfg, Homography::identity(), gsd);
  const auto d = estimate_dimensions(pixel_track(diagonal, 0), pixel_track(diagonal, 0), fs, cfg,
                                     Homography::identity(), gsd);
  const auto p = estimate_dimensions(pixel_track(parked, 0), pixel_track(parked, 0), fs, cfg, Homography::identity(),
                                     gsd);
  const bool ok_a = a && std::abs(a->length_m - 4.905) <= 1e-9 && std::abs(a->width_m - 2.180) <= 1e-9;
  const bool ok_p = p && p->path == DimPath::ratio_filtered && std::abs(p->length_px - 180) <= 1e-9 &&
                    std::abs(p->width_px - 80) <= 1e-9;
  return {ok_a && !d && ok_p, fmt("L=%.9f W=%.9f", a ? a->length_m : -1.0, a ? a->width_m : -1.0) +
                                  (d ? " diagonal estimated" : " diagonal withheld") +
                                  (ok_p ? " parked ratio-path ok" : " parked mismatch")};
}

// 5 -------------------------------------------------------------------------
std::vector<double> smooth_oracle(const std::vector<double>& v, double sigma) {
  const long long m = std::llround(3 * sigma), n = static_cast<long long>(v.size());
  auto mirror = [n](long long j) {
    if (n == 1) return 1LL;
    while (j < 1 || j > n) j = j > n ? 2 * n - j : 2 - j;
    return j;
  };
  std::vector<double> out(v.size());
  for (long long k = 1; k <= n; ++k) {
    double acc = 0, wsum = 0;
    for (long long i = -m; i <= m; ++i) {
      const double w = std::exp(-static_cast<double>(i * i) / (2 * sigma * sigma));
      acc += w * v[static_cast<std::size_t>(mirror(k + i) - 1)];
      wsum += w;
    }
    out[static_cast<std::size_t>(k - 1)] = acc / wsum;
  }
  return out;
}

Verdict kinematics_accuracy() {
  KinematicsConfig cfg;  // sigma 14, 30000/1001 fps
  const Point2 step{0.3, 0.4};  // 0.5 m per frame
  std::map<int, Point2> pts;
  for (int f = 1; f <= 300; ++f) pts[f] = {step.x * f, step.y * f};
  std::vector<int> visible;
  for (int f = 20; f <= 280; ++f) visible.push_back(f);
  const auto prof = compute_kinematics(pts, cfg, visible);
  const double truth = 0.5 * cfg.fps.value();
  double worst_v = 0, worst_a = 0;
  for (const auto& s : prof) {
    if (!s.gated) continue;
    worst_v = std::max(worst_v, std::abs(*s.smooth_speed - truth));
    worst_a = std::max(worst_a, std::abs(*s.acceleration));
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 40);
  double worst_s = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(1 + rng() % 300);
    for (auto& x : v) x = u(rng);
    const auto a = gaussian_smooth(v, 14);
    const auto b = smooth_oracle(v, 14);
    for (std::size_t i = 0; i < v.size(); ++i) worst_s = std::max(worst_s, std::abs(a[i] - b[i]));
  }
  return {worst_v <= 1e-9 && worst_a <= 1e-9 && worst_s <= 1e-12,
          fmt("speed err=%.3g accel err=%.3g smoothing err=%.3g", worst_v, worst_a, worst_s)};
}

// 6 -------------------------------------------------------------------------
Verdict metric_identities() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    // two-point candidate on a randomly placed, randomly oriented line
    const double a = std::numbers::pi * u(rng);
    const Point2 o{100 * u(rng), 100 * u(rng)}, dir{std::cos(a), std::sin(a)}, nrm{-std::sin(a), std::cos(a)};
    const double off = 10 * u(rng), along = 5 * u(rng);
    const std::vector<CandidatePoint> c{{o, 0}, {o + 10.0 * dir, 0}};
    const Point2 probe = o + along * dir + off * nrm;
    worst = std::max(worst, std::abs(positional_deviation({probe, 0, c}) - std::abs(off)));
  }
  bool weights = true;
  std::vector<CandidatePoint> track;
  for (int i = 0; i < 30; ++i) track.push_back({{2.0 * i + u(rng), u(rng)}, 30 + u(rng)});
  for (int t = 0; t < 1000; ++t) {
    const ComparisonSample s{{60 * std::abs(u(rng)), 3 * u(rng)}, 30, track};
    const auto d = speed_difference(s);
    const auto pr = nearest_pair(s);
    weights = weights && std::abs(d.w1 + d.w2 - 1) <= 1e-12 && d.w1 >= d.w2 && pr.d1 <= pr.d2;
  }
  GroupReport g{"AV", {1.25, 0.5, 3}, MeanSd{-2.0, 1.0, 3}, 100.0, 10.0};
  std::ostringstream out;
  write_comparison_report(out, std::span(&g, 1));
  const bool format = out.str() == "group,positional_deviation_m,speed_difference_kmh,length_m,duration_s\n"
                                   "AV,1.250 ± 0.500,-2.000 ± 1.000,100.00,10.00\n";
  return {worst <= 1e-12 && weights && format, fmt("distance err=%.3g", worst) +
                                                   (weights ? " weights ok" : " weights violated") +
                                                   (format ? " report ok" : " report mismatch")};
}

// 7 -------------------------------------------------------------------------
Verdict refinement_oracle() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 10000; ++t) {
    const int frames = 1 + static_cast<int>(rng() % 6);
    const int classes = 1 + static_cast<int>(rng() % 4);
    std::vector<TrackPoint> pts;
    for (int f = 1; f <= frames; ++f) {
      // coarse scores make exact ties common
      const double s = (rng() % 3 == 0) ? 0.5 : std::round(u(rng) * 4) / 4 + 0.25;
      pts.push_back({f, 1, Detection{{0.5, 0.5, 0.1, 0.1}, static_cast<int>(rng() % classes), s}, true});
    }
    // enumerate every candidate class and keep the first strict maximum
    int best = -1;
    double best_sum = -1;
    for (int c = 0; c < 4; ++c) {
      double sum = 0;
      bool seen = false;
      for (const auto& p : pts)
        if (p.det.cls == c) {
          sum += p.det.score;
          seen = true;
        }
      if (seen && sum > best_sum) {
        best = c;
        best_sum = sum;
      }
    }
    const auto r = refine_classes(VideoTracks::from_points({}, {}, frames, pts));
    for (const auto& p : r.tracks[0].points)
      if (p.det.cls != best) return {false, "mismatch on case " + std::to_string(t)};
  }
  return {true, "10000 cases agree"};
}

// 8 -------------------------------------------------------------------------
int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "aerotraj");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Verdict export_fidelity(const fs::path& work) {
  const fs::path cfg = fixtures::write_pipeline_session(work / "session");
  const fs::path golden = fs::path(AEROTRAJ_TEST_DATA) / "golden_export.csv";
  std::vector<std::string> outputs;
  for (const char* jobs : {"1", "1", "4"}) {
    const fs::path out = work / (std::string("export_") + std::to_string(outputs.size()) + ".csv");
    if (run_cli({"--config", cfg.string(), "--jobs", jobs, "--output", out.string(), "pipeline"}) != 0)
      return {false, "pipeline failed"};
    outputs.push_back(read_text_file(out));
  }
  if (!fs::exists(golden)) return {false, "golden file missing: " + golden.string()};
  const std::string want = read_text_file(golden);
  const bool same = outputs[0] == outputs[1] && outputs[0] == outputs[2];
  return {same && outputs[0] == want, std::string(same ? "runs identical" : "runs differ") +
                                          (outputs[0] == want ? ", matches golden" : ", differs from golden")};
}

// 9 -------------------------------------------------------------------------
Verdict campaign_reproducibility(const fs::path& work) {
  std::vector<std::string> outputs;
  for (int i = 0; i < 2; ++i) {
    const fs::path out = work / ("bench_" + std::to_string(i) + ".csv");
    if (run_cli({"--seed", "99", "--output", out.string(), "bench", "--scenes", "29", "--trials-per-scene", "100",
                 "--scene-width", "640", "--scene-height", "480", "--boxes-per-scene", "2", "--keypoints", "24",
                 "--ransac-max-iterations", "100"}) != 0)
      return {false, "bench failed"};
    outputs.push_back(read_text_file(out));
  }
  const bool same = outputs[0] == outputs[1];
  const bool count = outputs[0].find(",2900\n") != std::string::npos;
  return {same && count, std::string(same ? "identical CSV" : "CSV differs") + (count ? ", 2900 trials" : ", wrong count")};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "aerotraj_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"homography recovery", homography_recovery},
      {"DLT exactness", dlt_exactness},
      {"downscale consistency", downscale_consistency},
      {"dimension estimator", dimension_oracle},
      {"kinematics", kinematics_accuracy},
      {"comparison metrics", metric_identities},
      {"class refinement", refinement_oracle},
      {"export fidelity", [&] { return export_fidelity(work); }},
      {"campaign reproducibility", [&] { return campaign_reproducibility(work); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << ' ' << (i + 1) << ' ' << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  fs::remove_all(work);
  return failed;
}
