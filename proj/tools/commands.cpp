#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aerotraj/campaign.hpp"
#include "aerotraj/dataio.hpp"
#include "aerotraj/dimensions.hpp"
#include "aerotraj/errors.hpp"
#include "aerotraj/georeference.hpp"
#include "aerotraj/kinematics.hpp"
#include "aerotraj/metrics.hpp"
#include "aerotraj/parallel.hpp"
#include "aerotraj/random.hpp"
#include "aerotraj/registration.hpp"
#include "aerotraj/trackmodel.hpp"

namespace aerotraj::cli {

namespace {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration resolution: CLI flag > config section > config top level > default

struct Globals {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> output;
  bool timing = false;
};

class Settings {
public:
  Settings(const json& root, const fs::path& base, std::string section) : root_(root), base_(base) {
    if (root_.is_object() && root_.contains(section)) {
      section_ = &root_[section];
      if (!section_->is_object()) throw ConfigError("config section '" + section + "' must be an object");
    }
  }

  const json* find(const std::string& key) const {
    if (section_ && section_->contains(key)) return &(*section_)[key];
    if (root_.is_object() && root_.contains(key)) return &root_[key];
    return nullptr;
  }

  template <typename T>
  T get(const std::optional<T>& cli, const std::string& key, T fallback) const {
    if (cli) return *cli;
    if (const json* j = find(key)) return convert<T>(*j, key);
    return fallback;
  }

  template <typename T>
  std::optional<T> get_optional(const std::optional<T>& cli, const std::string& key) const {
    if (cli) return cli;
    if (const json* j = find(key)) return convert<T>(*j, key);
    return std::nullopt;
  }

  /// CLI paths are taken as given; config paths are relative to the config file.
  std::optional<fs::path> path(const std::optional<std::string>& cli, const std::string& key) const {
    if (cli) return fs::path(*cli);
    if (const json* j = find(key)) return resolve(convert<std::string>(*j, key));
    return std::nullopt;
  }

  fs::path input(const std::optional<std::string>& cli, const std::string& key) const {
    auto p = path(cli, key);
    if (!p) throw ConfigError("missing required input '" + key + "'");
    if (!fs::exists(*p)) throw IoFailure("input '" + key + "' not found: " + p->string());
    return *p;
  }

  std::optional<fs::path> optional_input(const std::optional<std::string>& cli, const std::string& key) const {
    auto p = path(cli, key);
    if (p && !fs::exists(*p)) throw IoFailure("input '" + key + "' not found: " + p->string());
    return p;
  }

  fs::path resolve(const fs::path& p) const { return p.is_relative() ? base_ / p : p; }

  template <typename T>
  static T convert(const json& j, const std::string& key) {
    try {
      return j.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }

private:
  const json& root_;
  fs::path base_;
  const json* section_ = nullptr;
};

struct Context {
  json root = json::object();
  fs::path base = ".";
  Globals globals;
  std::ostream* err = nullptr;

  std::ostream& log() const { return *err; }
  Settings settings(const std::string& section) const { return Settings(root, base, section); }
  std::uint64_t seed(const Settings& s) const { return s.get<std::uint64_t>(globals.seed, "seed", 0); }
  int jobs(const Settings& s) const {
    const int j = s.get<int>(globals.jobs, "jobs", 1);
    if (j < 1) throw ConfigError("jobs must be at least 1");
    return j;
  }
  fs::path output(const Settings& s) const {
    auto p = s.path(globals.output, "output");
    if (!p) throw ConfigError("missing --output");
    return *p;
  }
};

double json_extended_double(const json& j, const std::string& key) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") return std::numeric_limits<double>::infinity();
    throw ConfigError("config key '" + key + "': expected a number or \"inf\"");
  }
  return Settings::convert<double>(j, key);
}

Rational rational_setting(const Settings& s, const std::optional<std::string>& cli, const std::string& key,
                          Rational fallback) {
  if (cli) return parse_rational(*cli);
  if (const json* j = s.find(key)) {
    if (j->is_string()) return parse_rational(j->get<std::string>());
    if (j->is_array() && j->size() == 2) return parse_rational(std::to_string((*j)[0].get<long long>()) + "/" +
                                                               std::to_string((*j)[1].get<long long>()));
    if (j->is_number_integer()) return parse_rational(std::to_string(j->get<long long>()));
    throw ConfigError("config key '" + key + "': expected \"num/den\"");
  }
  return fallback;
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& writer) {
  std::ostringstream buf;
  writer(buf);
  write_text_file(path, buf.str());
}

/// Rethrows any library error with a prefix naming where it happened.
template <typename Fn>
auto with_context(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const MissingHomography& e) {
    throw Error(where + ": " + e.what());
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared option blocks

struct RansacOpts {
  std::optional<double> threshold;
  std::optional<double> confidence;
  std::optional<int> max_iterations;

  void add(CLI::App* app) {
    app->add_option("--ransac-threshold", threshold, "inlier threshold eta in pixels");
    app->add_option("--ransac-confidence", confidence, "termination confidence tau");
    app->add_option("--ransac-max-iterations", max_iterations, "iteration cap Gamma");
  }
  RansacConfig resolve(const Settings& s, double def_threshold, int def_iterations) const {
    RansacConfig c;
    c.reproj_threshold = s.get(threshold, "ransac_threshold", def_threshold);
    c.confidence = s.get(confidence, "ransac_confidence", c.confidence);
    c.max_iterations = s.get(max_iterations, "ransac_max_iterations", def_iterations);
    c.validate();
    return c;
  }
};

struct DimOpts {
  std::optional<std::string> preset;
  std::optional<double> azimuth_tol_deg;
  std::optional<double> min_move_m;
  std::optional<double> gsd;
  std::optional<double> kappa[kNumVehicleClasses];

  void add(CLI::App* app) {
    app->add_option("--dims-preset", preset, "default or strict");
    app->add_option("--azimuth-tol-deg", azimuth_tol_deg, "azimuth tolerance in degrees");
    app->add_option("--min-move-m", min_move_m, "azimuth window displacement in metres");
    app->add_option("--gsd", gsd, "ground sampling distance, metres per pixel");
    app->add_option("--kappa-car", kappa[0]);
    app->add_option("--kappa-bus", kappa[1]);
    app->add_option("--kappa-truck", kappa[2]);
    app->add_option("--kappa-motorcycle", kappa[3]);
  }
  DimConfig resolve(const Settings& s, double margin) const {
    DimConfig c = DimConfig::preset(s.get<std::string>(preset, "dims_preset", "default"));
    c.margin_px = margin;
    c.azimuth_tol_deg = s.get(azimuth_tol_deg, "azimuth_tol_deg", c.azimuth_tol_deg);
    c.min_move_m = s.get(min_move_m, "min_move_m", c.min_move_m);
    c.gsd = s.get(gsd, "gsd", c.gsd);
    static const char* names[kNumVehicleClasses] = {"kappa_car", "kappa_bus", "kappa_truck", "kappa_motorcycle"};
    for (int i = 0; i < kNumVehicleClasses; ++i) {
      if (kappa[i])
        c.kappa[i] = *kappa[i];
      else if (const json* j = s.find(names[i]))
        c.kappa[i] = json_extended_double(*j, names[i]);
    }
    c.validate();
    return c;
  }
};

/// Inputs shared by the track-level commands (dims, kinematics).
struct TrackInputOpts {
  std::optional<std::string> tracks, sidecar, homographies, registry, video;
  std::optional<double> margin;

  void add(CLI::App* app) {
    app->add_option("--tracks", tracks, "track CSV (frame,id,cx,cy,w,h,class,score)");
    app->add_option("--sidecar", sidecar, "JSON with frame size, fps and frame count");
    app->add_option("--homographies", homographies, "per-frame homography log; identity when omitted");
    app->add_option("--registry", registry, "georeferencing registry JSON");
    app->add_option("--video", video, "video name in the registry");
    app->add_option("--margin", margin, "visibility margin in pixels");
  }
};

struct LoadedVideo {
  VideoTracks raw;
  VideoTracks stabilized;
  Homography ref_to_ortho;
  GeoTransform geo_local;
  GeoTransform geo_wgs;
};

std::map<int, Homography> identity_log(const VideoTracks& tracks) {
  std::map<int, Homography> out;
  for (const auto& t : tracks.tracks)
    for (const auto& p : t.points) out.emplace(p.frame, Homography::identity());
  return out;
}

/// Without a registry the reference frame is used directly, scaled by the GSD.
LoadedVideo load_video(const Settings& s, const TrackInputOpts& o, double margin, double gsd) {
  LoadedVideo v;
  const TrackSidecar sidecar = load_sidecar(s.input(o.sidecar, "sidecar"));
  v.raw = refine_classes(load_tracks(s.input(o.tracks, "tracks"), sidecar));
  const auto log_path = s.optional_input(o.homographies, "homographies");
  const auto per_frame = log_path ? load_homography_log(*log_path) : identity_log(v.raw);
  v.stabilized = stabilize_tracks(v.raw, per_frame, margin);
  if (const auto reg_path = s.optional_input(o.registry, "registry")) {
    const auto video = s.get_optional(o.video, "video");
    if (!video) throw ConfigError("--video is required with --registry");
    const GeoRegistry reg = load_registry(*reg_path);
    v.ref_to_ortho = compose_ref_to_ortho(reg, *video);
    const auto& geo = reg.intersection_of(*video);
    v.geo_local = geo.geo_local;
    v.geo_wgs = geo.geo_wgs;
  } else {
    v.geo_local = GeoTransform::scale(gsd);
    v.geo_wgs = GeoTransform::identity();
  }
  return v;
}

Point2 center_px(const TrackPoint& p, FrameSize size) {
  const BBox b = to_pixels(p.det.bbox, size);
  return {b.cx, b.cy};
}

std::vector<int> visible_frames(const Track& t) {
  std::vector<int> out;
  for (const auto& p : t.points)
    if (p.visible) out.push_back(p.frame);
  return out;
}

// ---------------------------------------------------------------------------
// stabilize

struct StabilizeOpts {
  std::optional<std::string> tracks, sidecar, correspondences, homographies, log;
  std::optional<double> mask_enlarge, snn_ratio, downscale, margin;
  RansacOpts ransac;
};

void cmd_stabilize(const Context& ctx, const StabilizeOpts& o) {
  const Settings s = ctx.settings("stabilize");
  const fs::path out_path = ctx.output(s);
  const TrackSidecar sidecar = load_sidecar(s.input(o.sidecar, "sidecar"));
  const VideoTracks tracks = load_tracks(s.input(o.tracks, "tracks"), sidecar);
  const double margin = s.get(o.margin, "margin", 4.0);
  const auto corr_path = s.optional_input(o.correspondences, "correspondences");
  const auto log_in = s.optional_input(o.homographies, "homographies");
  if (corr_path.has_value() == log_in.has_value())
    throw ConfigError("give exactly one of --correspondences or --homographies");

  std::map<int, Homography> per_frame;
  if (log_in) {
    per_frame = load_homography_log(*log_in);
  } else {
    const double enlarge = s.get(o.mask_enlarge, "mask_enlarge", 0.15);
    const double snn = s.get(o.snn_ratio, "snn_ratio", 0.9);
    const double rho = s.get(o.downscale, "downscale", 0.5);
    if (!(enlarge >= 0.0)) throw ConfigError("mask_enlarge must be non-negative");
    if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("downscale must lie in (0,1]");
    RansacConfig rc = o.ransac.resolve(s, 2.0, 5000);
    const std::uint64_t seed = ctx.seed(s);

    std::map<int, std::vector<BBox>> boxes;
    for (const auto& t : tracks.tracks)
      for (const auto& p : t.points) boxes[p.frame].push_back(to_pixels(p.det.bbox, tracks.frame_size));
    const std::vector<BBox> no_boxes;
    const auto& ref_boxes = boxes.contains(1) ? boxes.at(1) : no_boxes;

    const auto corrs = load_correspondences(*corr_path);
    std::vector<int> frames;
    for (const auto& [f, list] : corrs)
      if (f != 1) frames.push_back(f);
    std::vector<Homography> estimates(frames.size());
    parallel_for(frames.size(), ctx.jobs(s), [&](std::size_t i) {
      const int f = frames[i];
      estimates[i] = with_context("frame " + std::to_string(f), [&] {
        const auto& src_boxes = boxes.contains(f) ? boxes.at(f) : no_boxes;
        auto kept = mask_filter(corrs.at(f), src_boxes, ref_boxes, enlarge);
        kept = snn_filter(kept, snn);
        if (rho != 1.0) kept = scale_correspondences(kept, rho);
        RansacConfig frame_cfg = rc;
        frame_cfg.seed = derive_seed(seed, {static_cast<std::uint64_t>(f)});
        const EstimateReport rep = ransac_homography(kept, frame_cfg);
        return rho != 1.0 ? upscale_homography(rep.h, rho) : rep.h;
      });
    });
    for (std::size_t i = 0; i < frames.size(); ++i) per_frame.emplace(frames[i], estimates[i]);
  }
  per_frame.try_emplace(1, Homography::identity());

  const VideoTracks stabilized = stabilize_tracks(tracks, per_frame, margin);
  fs::path log_out = s.path(o.log, "log").value_or(out_path.parent_path() /
                                                   (out_path.stem().string() + "_homographies.txt"));
  write_file(out_path, [&](std::ostream& os) { write_tracks(os, stabilized); });
  write_file(log_out, [&](std::ostream& os) { write_homography_log(os, per_frame); });
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineOpts {
  std::optional<std::string> tracks, sidecar, homographies, registry, segmentation, video, start_time;
  std::optional<std::string> date, intersection, session;
  std::optional<int> drone_id;
  std::optional<double> score_threshold, nms_iou, margin, sigma;
  DimOpts dims;
};

struct VideoJob {
  std::string name;
  fs::path tracks, sidecar;
  std::optional<fs::path> homographies;
  int drone_id = 1;
  std::string start_time = "00:00:00.000";
};

struct PipelineParams {
  double score_threshold = 0.25;
  double nms_iou = 0.7;
  double margin = 4.0;
  DimConfig dims;
  double sigma = 14.0;
};

VideoTracks ingest(const fs::path& path, const TrackSidecar& sidecar, const PipelineParams& p) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path.string() + "'");
  const auto rows = read_track_rows(in);
  std::set<std::pair<int, int>> seen;
  std::map<int, std::vector<const TrackRow*>> by_frame;
  for (const auto& r : rows) {
    if (!seen.emplace(r.point.id, r.point.frame).second)
      throw InvariantViolation(r.line, "duplicate (id, frame)");
    if (sidecar.num_frames > 0 && r.point.frame > sidecar.num_frames)
      throw InvariantViolation(r.line, "frame beyond num_frames");
    by_frame[r.point.frame].push_back(&r);
  }
  std::vector<TrackPoint> kept;
  int max_frame = 0;
  for (const auto& [frame, list] : by_frame) {
    std::vector<Detection> dets;
    dets.reserve(list.size());
    for (const TrackRow* r : list) dets.push_back(r->point.det);
    for (std::size_t i : ingest_filter_indices(dets, p.score_threshold, p.nms_iou)) kept.push_back(list[i]->point);
    max_frame = std::max(max_frame, frame);
  }
  const int n = sidecar.num_frames > 0 ? sidecar.num_frames : max_frame;
  return VideoTracks::from_points(sidecar.frame_size, sidecar.fps, n, std::move(kept));
}

std::vector<ExportRow> process_video(const VideoJob& job, const PipelineParams& p, const GeoRegistry& reg,
                                     const SegmentationMap* seg) {
  const std::string where = "video '" + job.name + "'";
  const TrackSidecar sidecar = with_context(where + ", sidecar", [&] { return load_sidecar(job.sidecar); });
  const VideoTracks filtered = with_context(where + ", ingest", [&] { return ingest(job.tracks, sidecar, p); });
  const VideoTracks raw = refine_classes(filtered);
  const VideoTracks stab = with_context(where + ", stabilize", [&] {
    const auto per_frame = job.homographies ? load_homography_log(*job.homographies) : identity_log(raw);
    return stabilize_tracks(raw, per_frame, p.margin);
  });
  const Homography ref_to_ortho = with_context(where + ", georeference", [&] { return compose_ref_to_ortho(reg, job.name); });
  const IntersectionGeo& geo = reg.intersection_of(job.name);

  SessionMeta meta;
  meta.drone_id = job.drone_id;
  meta.fps = sidecar.fps;
  meta.start_ms = with_context(where, [&] { return parse_clock(job.start_time); });
  meta.validate();

  KinematicsConfig kcfg;
  kcfg.sigma = p.sigma;
  kcfg.fps = sidecar.fps;

  std::vector<ExportRow> rows;
  for (std::size_t ti = 0; ti < raw.tracks.size(); ++ti) {
    const Track& rt = raw.tracks[ti];
    const Track& st = stab.tracks[ti];
    const std::string vwhere = where + ", vehicle " + std::to_string(rt.id);

    std::vector<GeoPoint> geo_pts;
    std::map<int, Point2> local;
    with_context(vwhere + ", georeference", [&] {
      for (const auto& pt : st.points) {
        geo_pts.push_back(georeference_point(ref_to_ortho, center_px(pt, stab.frame_size), geo.geo_local, geo.geo_wgs));
        local.emplace(pt.frame, geo_pts.back().local);
      }
    });
    const auto dims = with_context(vwhere + ", dimensions", [&] {
      return estimate_dimensions(rt, st, raw.frame_size, p.dims, ref_to_ortho, geo.geo_local);
    });
    const std::vector<int> visible = visible_frames(st);
    std::map<int, KinematicSample> kin;
    if (local.size() >= 2) {
      with_context(vwhere + ", kinematics", [&] {
        for (const auto& s : gate_by_visibility(compute_kinematics(local, kcfg, visible), visible)) kin.emplace(s.frame, s);
      });
    }

    for (std::size_t k = 0; k < st.points.size(); ++k) {
      const TrackPoint& pt = st.points[k];
      ExportRow r;
      r.vehicle_id = rt.id;
      r.frame = pt.frame;
      r.local_time = frame_to_timestamp(pt.frame, meta);
      r.drone_id = job.drone_id;
      r.ortho_x = geo_pts[k].ortho.x;
      r.ortho_y = geo_pts[k].ortho.y;
      r.local_x = geo_pts[k].local.x;
      r.local_y = geo_pts[k].local.y;
      r.latitude = geo_pts[k].lat;
      r.longitude = geo_pts[k].lon;
      if (dims) {
        r.length_m = dims->length_m;
        r.width_m = dims->width_m;
      }
      r.vehicle_class = pt.det.cls;
      if (const auto it = kin.find(pt.frame); it != kin.end()) {
        if (it->second.smooth_speed) r.speed_kmh = *it->second.smooth_speed * 3.6;
        r.acceleration = it->second.acceleration;
      }
      if (seg) {
        if (const auto lane = assign_segment(*seg, geo_pts[k].ortho)) {
          r.road_section = lane->section;
          r.lane = lane->lane;
        }
      }
      r.visibility = pt.visible ? 1 : 0;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

void cmd_pipeline(const Context& ctx, const PipelineOpts& o) {
  const Settings s = ctx.settings("pipeline");
  fs::path out_path = ctx.output(s);

  PipelineParams p;
  p.score_threshold = s.get(o.score_threshold, "score_threshold", p.score_threshold);
  p.nms_iou = s.get(o.nms_iou, "nms_iou", p.nms_iou);
  p.margin = s.get(o.margin, "margin", p.margin);
  p.dims = o.dims.resolve(s, p.margin);
  p.sigma = s.get(o.sigma, "sigma", p.sigma);
  if (!(p.sigma > 0.0)) throw ConfigError("sigma must be positive");

  std::vector<VideoJob> jobs;
  if (o.tracks || !s.find("videos")) {
    VideoJob j;
    j.name = s.get<std::string>(o.video, "video", "");
    if (j.name.empty()) throw ConfigError("missing --video (the video's registry name)");
    j.tracks = s.input(o.tracks, "tracks");
    j.sidecar = s.input(o.sidecar, "sidecar");
    j.homographies = s.optional_input(o.homographies, "homographies");
    j.drone_id = s.get(o.drone_id, "drone_id", 1);
    j.start_time = s.get<std::string>(o.start_time, "start_time", j.start_time);
    jobs.push_back(std::move(j));
  } else {
    const json& list = *s.find("videos");
    if (!list.is_array()) throw ConfigError("'videos' must be an array");
    for (const auto& v : list) {
      VideoJob j;
      j.name = Settings::convert<std::string>(v.at("name"), "videos[].name");
      auto in = [&](const char* key) {
        fs::path path = s.resolve(Settings::convert<std::string>(v.at(key), std::string("videos[].") + key));
        if (!fs::exists(path)) throw IoFailure("input '" + std::string(key) + "' not found: " + path.string());
        return path;
      };
      j.tracks = in("tracks");
      j.sidecar = in("sidecar");
      if (v.contains("homographies")) j.homographies = in("homographies");
      j.drone_id = v.value("drone_id", 1);
      j.start_time = v.value("start_time", j.start_time);
      jobs.push_back(std::move(j));
    }
  }

  const GeoRegistry reg = load_registry(s.input(o.registry, "registry"));
  std::optional<SegmentationMap> seg;
  if (const auto sp = s.optional_input(o.segmentation, "segmentation")) seg = load_segmentation(*sp);

  std::vector<std::vector<ExportRow>> per_video(jobs.size());
  parallel_for(jobs.size(), ctx.jobs(s), [&](std::size_t i) {
    per_video[i] = process_video(jobs[i], p, reg, seg ? &*seg : nullptr);
  });

  std::vector<ExportRow> all;
  int offset = 0;
  for (auto& rows : per_video) {
    int max_id = 0;
    for (auto& r : rows) {
      max_id = std::max(max_id, r.vehicle_id);
      r.vehicle_id += offset;
      all.push_back(std::move(r));
    }
    offset += max_id;
  }

  SessionMeta naming;
  naming.date = s.get<std::string>(o.date, "date", naming.date);
  naming.intersection = s.get<std::string>(o.intersection, "intersection", naming.intersection);
  naming.session = s.get<std::string>(o.session, "session", naming.session);
  const std::string out_str = out_path.string();
  if (fs::is_directory(out_path) || (!out_str.empty() && out_str.back() == '/'))
    out_path = out_path / songdo_filename(naming);
  export_songdo(all, out_path);
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
  std::optional<int> scenes, trials_per_scene, boxes_per_scene, max_iterations;
  std::optional<double> scene_width, scene_height, noise_sigma, outlier_fraction, confidence, hea_eps;
  std::optional<double> rot_max_deg, trans_max, scale_max, persp_max;
  std::vector<double> snn_ratios, downscales, thresholds;
  std::vector<int> keypoints;
  std::optional<std::string> series_dir;
};

template <typename T>
std::vector<T> list_setting(const Settings& s, const std::vector<T>& cli, const std::string& key, std::vector<T> def) {
  if (!cli.empty()) return cli;
  if (const json* j = s.find(key)) {
    if (j->is_array()) return Settings::convert<std::vector<T>>(*j, key);
    return {Settings::convert<T>(*j, key)};
  }
  return def;
}

void cmd_bench(const Context& ctx, const BenchOpts& o) {
  const Settings s = ctx.settings("bench");
  const fs::path out_path = ctx.output(s);

  DistortionRanges ranges;
  ranges.rot_max_deg = s.get(o.rot_max_deg, "rot_max_deg", ranges.rot_max_deg);
  ranges.trans_max = s.get(o.trans_max, "trans_max", ranges.trans_max);
  ranges.scale_max = s.get(o.scale_max, "scale_max", ranges.scale_max);
  ranges.persp_max = s.get(o.persp_max, "persp_max", ranges.persp_max);

  CampaignGrid grid;
  grid.snn_ratios = list_setting(s, o.snn_ratios, "snn_ratios", grid.snn_ratios);
  grid.downscales = list_setting(s, o.downscales, "downscales", grid.downscales);
  grid.thresholds = list_setting(s, o.thresholds, "thresholds", grid.thresholds);
  grid.keypoints = list_setting(s, o.keypoints, "keypoints", grid.keypoints);
  grid.trials_per_scene = s.get(o.trials_per_scene, "trials_per_scene", grid.trials_per_scene);

  CampaignConfig cfg;
  cfg.noise_sigma = s.get(o.noise_sigma, "noise_sigma", cfg.noise_sigma);
  cfg.outlier_fraction = s.get(o.outlier_fraction, "outlier_fraction", cfg.outlier_fraction);
  cfg.confidence = s.get(o.confidence, "ransac_confidence", cfg.confidence);
  cfg.max_iterations = s.get(o.max_iterations, "ransac_max_iterations", cfg.max_iterations);
  cfg.hea_eps = s.get(o.hea_eps, "hea_eps", cfg.hea_eps);
  cfg.master_seed = ctx.seed(s);
  cfg.jobs = ctx.jobs(s);
  cfg.record_timing = ctx.globals.timing || s.get<bool>(std::nullopt, "record_timing", false);
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) throw ConfigError("confidence must lie in (0,1)");
  if (cfg.max_iterations < 1) throw ConfigError("max_iterations must be positive");
  SynthConfig probe{grid.keypoints.empty() ? 100 : grid.keypoints.front(), cfg.noise_sigma, cfg.outlier_fraction, 0};
  probe.validate();

  const int n_scenes = s.get(o.scenes, "scenes", 29);
  const double width = s.get(o.scene_width, "scene_width", 3840.0);
  const double height = s.get(o.scene_height, "scene_height", 2160.0);
  const int boxes = s.get(o.boxes_per_scene, "boxes_per_scene", 20);
  if (n_scenes < 1 || boxes < 1 || !(width > 0.0) || !(height > 0.0))
    throw ConfigError("scene count, size and boxes per scene must be positive");
  const auto scenes = make_synthetic_scenes(static_cast<std::size_t>(n_scenes), width, height,
                                            static_cast<std::size_t>(boxes),
                                            derive_seed(cfg.master_seed, {0xB0C5ULL}));

  const CampaignResult result = run_campaign_detailed(scenes, ranges, grid, cfg);
  write_file(out_path, [&](std::ostream& os) { write_campaign_csv(os, result.rows); });

  if (const auto dir = s.path(o.series_dir, "series_dir")) {
    fs::create_directories(*dir);
    for (std::size_t c = 0; c < result.rows.size(); ++c) {
      write_file(*dir / ("cell_" + std::to_string(c) + ".csv"), [&](std::ostream& os) {
        os << "scene,trial,estimated,corner_error,box_iou" << (cfg.record_timing ? ",time_ms" : "") << '\n';
        for (std::size_t i = 0; i < result.trials_per_cell; ++i) {
          const TrialOutcome& t = result.outcomes[c * result.trials_per_cell + i];
          os << i / result.trials_per_scene << ',' << i % result.trials_per_scene << ',' << (t.estimated ? 1 : 0)
             << ',' << format_shortest(t.corner_error) << ',' << format_shortest(t.box_iou);
          if (cfg.record_timing) os << ',' << format_fixed(t.time_ms, 3);
          os << '\n';
        }
      });
    }
  }
}

// ---------------------------------------------------------------------------
// compare

struct CompareOpts {
  std::optional<std::string> probe, candidate, label, fps;
  std::optional<double> speed_floor;
};

void cmd_compare(const Context& ctx, const CompareOpts& o) {
  const Settings s = ctx.settings("compare");
  const fs::path out_path = ctx.output(s);
  const double floor_kmh = s.get(o.speed_floor, "speed_floor_kmh", 1.0);
  const Rational fps = rational_setting(s, o.fps, "fps", Rational{});

  struct GroupInput {
    std::string label;
    fs::path probe, candidate;
  };
  std::vector<GroupInput> inputs;
  if (o.probe || o.candidate || !s.find("groups")) {
    inputs.push_back({s.get<std::string>(o.label, "label", "vehicle"), s.input(o.probe, "probe"),
                      s.input(o.candidate, "candidate")});
  } else {
    for (const auto& g : *s.find("groups")) {
      GroupInput gi{Settings::convert<std::string>(g.at("label"), "groups[].label"),
                    s.resolve(Settings::convert<std::string>(g.at("probe"), "groups[].probe")),
                    s.resolve(Settings::convert<std::string>(g.at("candidate"), "groups[].candidate"))};
      inputs.push_back(std::move(gi));
    }
  }

  std::vector<ComparisonGroup> groups;
  for (const auto& in : inputs) {
    const auto probe = load_probe(in.probe);
    const auto cand = load_candidate(in.candidate);
    ComparisonGroup g;
    g.label = in.label;
    g.fps = fps;
    for (const auto& c : cand) g.trajectory.push_back(c.p);
    std::size_t skipped = 0;
    for (const auto& ps : probe) {
      const ComparisonSample sample{ps.p, ps.speed_kmh, cand};
      try {
        const double dp = positional_deviation(sample);
        const SpeedDifference dv = speed_difference(sample);
        g.deviations.push_back(dp);
        g.speed_diffs.push_back(dv.delta_v);
        g.probe_speeds_kmh.push_back(ps.speed_kmh);
      } catch (const DegenerateSegment&) {
        ++skipped;
      }
    }
    if (skipped) ctx.log() << "compare: " << in.label << ": skipped " << skipped << " degenerate sample(s)\n";
    groups.push_back(std::move(g));
  }

  const auto reports = aggregate_comparison(groups, floor_kmh);
  for (const auto& g : groups)
    if (g.deviations.empty()) ctx.log() << "compare: " << g.label << ": no usable samples, group omitted\n";
  for (const auto& r : reports)
    if (!r.speed_diff)
      ctx.log() << "compare: " << r.label << ": speed difference left empty, every probe speed is at or below "
                << format_shortest(floor_kmh) << " km/h\n";
  write_file(out_path, [&](std::ostream& os) { write_comparison_report(os, reports); });
}

// ---------------------------------------------------------------------------
// dims

struct DimsOpts {
  TrackInputOpts in;
  DimOpts dims;
};

void cmd_dims(const Context& ctx, const DimsOpts& o) {
  const Settings s = ctx.settings("dims");
  const fs::path out_path = ctx.output(s);
  const double margin = s.get(o.in.margin, "margin", 4.0);
  const DimConfig cfg = o.dims.resolve(s, margin);
  const LoadedVideo v = load_video(s, o.in, margin, cfg.gsd);

  std::vector<std::optional<DimensionEstimate>> est(v.raw.tracks.size());
  parallel_for(est.size(), ctx.jobs(s), [&](std::size_t i) {
    est[i] = with_context("vehicle " + std::to_string(v.raw.tracks[i].id), [&] {
      return estimate_dimensions(v.raw.tracks[i], v.stabilized.tracks[i], v.raw.frame_size, cfg, v.ref_to_ortho,
                                 v.geo_local);
    });
  });
  write_file(out_path, [&](std::ostream& os) {
    os << "id,class,length_px,width_px,length_m,width_m,n_samples,path\n";
    for (std::size_t i = 0; i < est.size(); ++i) {
      const Track& t = v.raw.tracks[i];
      os << t.id << ',' << (t.points.empty() ? 0 : t.points.front().det.cls) << ',';
      if (est[i])
        os << format_fixed(est[i]->length_px, 2) << ',' << format_fixed(est[i]->width_px, 2) << ','
           << format_fixed(est[i]->length_m, 3) << ',' << format_fixed(est[i]->width_m, 3) << ','
           << est[i]->n_samples << ',' << to_string(est[i]->path) << '\n';
      else
        os << ",,,,0," << to_string(DimPath::none) << '\n';
    }
  });
}

// ---------------------------------------------------------------------------
// kinematics

struct KinematicsOpts {
  TrackInputOpts in;
  std::optional<double> sigma, gsd;
};

void cmd_kinematics(const Context& ctx, const KinematicsOpts& o) {
  const Settings s = ctx.settings("kinematics");
  const fs::path out_path = ctx.output(s);
  const double margin = s.get(o.in.margin, "margin", 4.0);
  const LoadedVideo v = load_video(s, o.in, margin, s.get(o.gsd, "gsd", DimConfig{}.gsd));
  KinematicsConfig cfg;
  cfg.sigma = s.get(o.sigma, "sigma", cfg.sigma);
  cfg.fps = v.raw.fps;
  cfg.validate();

  struct Out {
    std::map<int, Point2> dense;
    std::set<int> observed;
    KinematicProfile profile;
  };
  const auto& tracks = v.stabilized.tracks;
  std::vector<Out> outs(tracks.size());
  parallel_for(tracks.size(), ctx.jobs(s), [&](std::size_t i) {
    with_context("vehicle " + std::to_string(tracks[i].id), [&] {
      std::map<int, Point2> local;
      for (const auto& pt : tracks[i].points) {
        local.emplace(pt.frame, georeference_point(v.ref_to_ortho, center_px(pt, v.stabilized.frame_size), v.geo_local,
                                                   v.geo_wgs)
                                    .local);
        outs[i].observed.insert(pt.frame);
      }
      if (local.size() < 2) return;
      const auto visible = visible_frames(tracks[i]);
      outs[i].dense = interpolate_gaps(local);
      outs[i].profile = gate_by_visibility(compute_kinematics(local, cfg, visible), visible);
    });
  });
  write_file(out_path, [&](std::ostream& os) {
    auto opt = [](const std::optional<double>& x) { return x ? format_shortest(*x) : std::string(); };
    os << "id,frame,observed,x,y,raw_speed_mps,smooth_speed_mps,acceleration_mps2,gated\n";
    for (std::size_t i = 0; i < tracks.size(); ++i)
      for (const auto& k : outs[i].profile) {
        const Point2 p = outs[i].dense.at(k.frame);
        os << tracks[i].id << ',' << k.frame << ',' << (outs[i].observed.contains(k.frame) ? 1 : 0) << ','
           << format_shortest(p.x) << ',' << format_shortest(p.y) << ',' << opt(k.raw_speed) << ','
           << opt(k.smooth_speed) << ',' << opt(k.acceleration) << ',' << (k.gated ? 1 : 0) << '\n';
      }
  });
}

// ---------------------------------------------------------------------------
// georef

struct GeorefOpts {
  std::optional<std::string> correspondences, registry, video, points, segmentation;
  std::optional<double> snn_ratio;
  RansacOpts ransac;
};

void cmd_georef(const Context& ctx, const GeorefOpts& o) {
  const Settings s = ctx.settings("georef");
  const fs::path out_path = ctx.output(s);
  const auto corr_path = s.optional_input(o.correspondences, "correspondences");
  const auto points_path = s.optional_input(o.points, "points");
  if (corr_path.has_value() == points_path.has_value())
    throw ConfigError("give exactly one of --correspondences (estimate) or --points (map)");

  if (corr_path) {
    RansacConfig rc = o.ransac.resolve(s, 3.0, 10000);
    rc.seed = ctx.seed(s);
    auto corrs = load_correspondence_list(*corr_path);
    const bool any_distances = std::any_of(corrs.begin(), corrs.end(), [](const Correspondence& c) { return c.d1.has_value(); });
    if (any_distances) corrs = snn_filter(corrs, s.get(o.snn_ratio, "snn_ratio", 0.55));
    const EstimateReport rep = ransac_homography(corrs, rc);
    ctx.log() << "georef: " << rep.inlier_count() << " of " << corrs.size() << " matches kept as inliers, mean error "
              << format_fixed(rep.mean_reproj_error, 3) << " px\n";
    write_file(out_path, [&](std::ostream& os) { write_homography(os, rep.h); });
    return;
  }

  const GeoRegistry reg = load_registry(s.input(o.registry, "registry"));
  const auto video = s.get_optional(o.video, "video");
  if (!video) throw ConfigError("missing --video");
  std::optional<SegmentationMap> seg;
  if (const auto sp = s.optional_input(o.segmentation, "segmentation")) seg = load_segmentation(*sp);
  const auto pts = load_points(*points_path);
  write_file(out_path, [&](std::ostream& os) {
    os << "x,y,ortho_x,ortho_y,local_x,local_y,latitude,longitude,road_section,lane\n";
    for (const auto& p : pts) {
      const GeoPoint g = georeference_point(reg, *video, p);
      os << format_shortest(p.x) << ',' << format_shortest(p.y) << ',' << format_shortest(g.ortho.x) << ','
         << format_shortest(g.ortho.y) << ',' << format_shortest(g.local.x) << ',' << format_shortest(g.local.y) << ','
         << format_shortest(g.lat) << ',' << format_shortest(g.lon) << ',';
      if (seg)
        if (const auto lane = assign_segment(*seg, g.ortho)) os << lane->section << ',' << lane->lane;
        else os << ',';
      else
        os << ',';
      os << '\n';
    }
  });
}

}  // namespace

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Drone traffic trajectory toolkit: stabilization, georeferencing, dimensions, kinematics, "
               "export and registration benchmarks"};
  app.name(args.empty() ? "aerotraj" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  ctx.err = &err;
  Globals& g = ctx.globals;
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--jobs", g.jobs, "worker threads");
  app.add_option("--output", g.output, "output file (or directory for pipeline)");
  app.add_flag("--timing", g.timing, "record wall time in benchmark results");

  StabilizeOpts so;
  auto* stab = app.add_subcommand("stabilize", "align every frame's boxes to the first frame");
  stab->add_option("--tracks", so.tracks, "track CSV");
  stab->add_option("--sidecar", so.sidecar, "sidecar JSON");
  stab->add_option("--correspondences", so.correspondences, "per-frame matches CSV");
  stab->add_option("--homographies", so.homographies, "precomputed per-frame homography log");
  stab->add_option("--log", so.log, "where to write the homography log");
  stab->add_option("--mask-enlarge", so.mask_enlarge, "exclusion mask enlargement factor");
  stab->add_option("--snn-ratio", so.snn_ratio, "ratio test threshold");
  stab->add_option("--downscale", so.downscale, "estimation scale factor rho");
  stab->add_option("--margin", so.margin, "visibility margin in pixels");
  so.ransac.add(stab);

  PipelineOpts po;
  auto* pipe = app.add_subcommand("pipeline", "tracks to a georeferenced trajectory CSV");
  pipe->add_option("--tracks", po.tracks, "track CSV (single video)");
  pipe->add_option("--sidecar", po.sidecar, "sidecar JSON (single video)");
  pipe->add_option("--homographies", po.homographies, "homography log (single video)");
  pipe->add_option("--video", po.video, "registry name of the video");
  pipe->add_option("--drone-id", po.drone_id);
  pipe->add_option("--start-time", po.start_time, "local time of frame 1, hh:mm:ss.sss");
  pipe->add_option("--registry", po.registry, "georeferencing registry JSON");
  pipe->add_option("--segmentation", po.segmentation, "road/lane polygons JSON");
  pipe->add_option("--date", po.date);
  pipe->add_option("--intersection", po.intersection);
  pipe->add_option("--session", po.session);
  pipe->add_option("--score-threshold", po.score_threshold, "detection confidence threshold");
  pipe->add_option("--nms-iou", po.nms_iou, "NMS IoU threshold");
  pipe->add_option("--margin", po.margin, "visibility margin in pixels");
  pipe->add_option("--sigma", po.sigma, "speed smoothing sigma in frames");
  po.dims.add(pipe);

  BenchOpts bo;
  auto* bench = app.add_subcommand("bench", "synthetic registration campaign");
  bench->add_option("--scenes", bo.scenes);
  bench->add_option("--scene-width", bo.scene_width);
  bench->add_option("--scene-height", bo.scene_height);
  bench->add_option("--boxes-per-scene", bo.boxes_per_scene);
  bench->add_option("--trials-per-scene", bo.trials_per_scene);
  bench->add_option("--snn-ratios", bo.snn_ratios)->delimiter(',');
  bench->add_option("--downscales", bo.downscales)->delimiter(',');
  bench->add_option("--thresholds", bo.thresholds)->delimiter(',');
  bench->add_option("--keypoints", bo.keypoints)->delimiter(',');
  bench->add_option("--noise-sigma", bo.noise_sigma);
  bench->add_option("--outlier-fraction", bo.outlier_fraction);
  bench->add_option("--ransac-confidence", bo.confidence);
  bench->add_option("--ransac-max-iterations", bo.max_iterations);
  bench->add_option("--hea-eps", bo.hea_eps, "corner error threshold in pixels");
  bench->add_option("--rot-max-deg", bo.rot_max_deg);
  bench->add_option("--trans-max", bo.trans_max);
  bench->add_option("--scale-max", bo.scale_max);
  bench->add_option("--persp-max", bo.persp_max);
  bench->add_option("--series-dir", bo.series_dir, "write per-trial outcomes for each cell here");

  CompareOpts co;
  auto* cmp = app.add_subcommand("compare", "positional and speed differences against a probe trajectory");
  cmp->add_option("--probe", co.probe, "probe CSV (t,x,y,speed_kmh)");
  cmp->add_option("--candidate", co.candidate, "candidate CSV (frame,x,y,speed_kmh)");
  cmp->add_option("--label", co.label);
  cmp->add_option("--fps", co.fps, "candidate frame rate, e.g. 30000/1001");
  cmp->add_option("--speed-floor", co.speed_floor, "km/h; slower probe samples are left out of the speed statistics");

  DimsOpts dopt;
  auto* dims = app.add_subcommand("dims", "vehicle length and width per track");
  dopt.in.add(dims);
  dopt.dims.add(dims);

  KinematicsOpts ko;
  auto* kin = app.add_subcommand("kinematics", "speed and acceleration profiles per track");
  ko.in.add(kin);
  kin->add_option("--sigma", ko.sigma, "smoothing sigma in frames");
  kin->add_option("--gsd", ko.gsd, "metres per pixel when no registry is given");

  GeorefOpts go;
  auto* geo = app.add_subcommand("georef", "estimate a registration homography or map points to world coordinates");
  geo->add_option("--correspondences", go.correspondences, "matches CSV (src_x,src_y,dst_x,dst_y[,d1,d2])");
  geo->add_option("--snn-ratio", go.snn_ratio);
  go.ransac.add(geo);
  geo->add_option("--registry", go.registry);
  geo->add_option("--video", go.video);
  geo->add_option("--points", go.points, "reference-frame pixels CSV (x,y)");
  geo->add_option("--segmentation", go.segmentation);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("aerotraj");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (g.config) {
      const fs::path cfg_path = *g.config;
      try {
        ctx.root = json::parse(read_text_file(cfg_path));
      } catch (const json::parse_error& e) {
        throw ConfigError("config: " + std::string(e.what()));
      }
      if (!ctx.root.is_object()) throw ConfigError("config must be a JSON object");
      ctx.base = cfg_path.has_parent_path() ? cfg_path.parent_path() : fs::path(".");
    }
    if (stab->parsed()) cmd_stabilize(ctx, so);
    else if (pipe->parsed()) cmd_pipeline(ctx, po);
    else if (bench->parsed()) cmd_bench(ctx, bo);
    else if (cmp->parsed()) cmd_compare(ctx, co);
    else if (dims->parsed()) cmd_dims(ctx, dopt);
    else if (kin->parsed()) cmd_kinematics(ctx, ko);
    else if (geo->parsed()) cmd_georef(ctx, go);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace aerotraj::cli
