#include "aerotraj/trackmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aerotraj/errors.hpp"

namespace aerotraj {

bool Detection::valid() const {
  auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  return unit(bbox.cx) && unit(bbox.cy) && unit(bbox.w) && unit(bbox.h) && cls >= 0 && std::isfinite(score) &&
         score > 0.0 && score <= 1.0;
}

std::size_t VideoTracks::point_count() const {
  std::size_t n = 0;
  for (const auto& t : tracks) n += t.points.size();
  return n;
}

VideoTracks VideoTracks::from_points(FrameSize size, Rational fps, int num_frames, std::vector<TrackPoint> points) {
  std::stable_sort(points.begin(), points.end(), [](const TrackPoint& a, const TrackPoint& b) {
    return a.id != b.id ? a.id < b.id : a.frame < b.frame;
  });
  VideoTracks out;
  out.frame_size = size;
  out.fps = fps;
  out.num_frames = num_frames;
  for (auto& p : points) {
    if (out.tracks.empty() || out.tracks.back().id != p.id) out.tracks.push_back(Track{p.id, {}});
    auto& pts = out.tracks.back().points;
    if (!pts.empty() && pts.back().frame == p.frame)
      throw Error("duplicate track point for id " + std::to_string(p.id) + " at frame " + std::to_string(p.frame));
    out.num_frames = std::max(out.num_frames, p.frame);
    pts.push_back(p);
  }
  return out;
}

std::vector<TrackPoint> VideoTracks::flatten() const {
  std::vector<TrackPoint> out;
  out.reserve(point_count());
  for (const auto& t : tracks) out.insert(out.end(), t.points.begin(), t.points.end());
  return out;
}

BBox to_pixels(const BBox& b, FrameSize size) {
  const double w = size.width, h = size.height;
  return {b.cx * w, b.cy * h, b.w * w, b.h * h};
}

BBox to_normalized(const BBox& b, FrameSize size) {
  const double w = size.width, h = size.height;
  return {b.cx / w, b.cy / h, b.w / w, b.h / h};
}

std::vector<std::size_t> ingest_filter_indices(std::span<const Detection> dets, double score_threshold,
                                               double iou_threshold) {
  if (!(score_threshold > 0.0 && score_threshold < 1.0)) throw ConfigError("score threshold must lie in (0,1)");
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) throw ConfigError("NMS IoU threshold must lie in (0,1)");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (dets[i].score >= score_threshold) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return bbox_iou(dets[i].bbox, dets[k].bbox) > iou_threshold;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::vector<Detection> ingest_filter(std::span<const Detection> dets, double score_threshold, double iou_threshold) {
  std::vector<Detection> out;
  for (std::size_t i : ingest_filter_indices(dets, score_threshold, iou_threshold)) out.push_back(dets[i]);
  return out;
}

VideoTracks refine_classes(const VideoTracks& tracks) {
  VideoTracks out = tracks;
  for (auto& track : out.tracks) {
    std::map<int, double> votes;
    for (const auto& p : track.points) votes[p.det.cls] += p.det.score;
    int best_cls = 0;
    double best_sum = -1.0;
    for (const auto& [cls, sum] : votes) {  // ascending class, so strict > keeps the lowest on ties
      if (sum > best_sum) {
        best_sum = sum;
        best_cls = cls;
      }
    }
    for (auto& p : track.points) p.det.cls = best_cls;
  }
  return out;
}

bool is_fully_visible(const BBox& px, FrameSize size, double margin) {
  return px.cx - px.w / 2.0 > margin && px.cx + px.w / 2.0 < size.width - (margin + 1.0) &&
         px.cy - px.h / 2.0 > margin && px.cy + px.h / 2.0 < size.height - (margin + 1.0);
}

bool visibility_flag(const TrackPoint& p, FrameSize size, double margin) {
  return is_fully_visible(to_pixels(p.det.bbox, size), size, margin);
}

VideoTracks stabilize_tracks(const VideoTracks& tracks, const std::map<int, Homography>& per_frame,
                             double visibility_margin) {
  VideoTracks out = tracks;
  for (auto& track : out.tracks) {
    for (auto& p : track.points) {
      p.visible = visibility_flag(p, tracks.frame_size, visibility_margin);
      const auto it = per_frame.find(p.frame);
      if (it == per_frame.end()) {
        if (p.frame == 1) continue;
        throw MissingHomography(p.frame);
      }
      if (it->second.matrix() == Homography::Matrix::Identity()) continue;  // avoid a lossy pixel round trip
      const BBox px = to_pixels(p.det.bbox, tracks.frame_size);
      p.det.bbox = to_normalized(transform_bbox(it->second, px), tracks.frame_size);
    }
  }
  return out;
}

}  // namespace aerotraj
