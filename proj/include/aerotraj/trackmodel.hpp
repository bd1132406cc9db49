#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "aerotraj/geometry.hpp"

namespace aerotraj {

/// Exact frame rate, e.g. 30000/1001.
struct Rational {
  std::int64_t num = 30000;
  std::int64_t den = 1001;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

struct FrameSize {
  int width = 3840;
  int height = 2160;
};

/// Detector output in frame-normalized coordinates.
struct Detection {
  BBox bbox;
  int cls = 0;
  double score = 1.0;

  /// Normalized box entries within [0,1], class >= 0, score in (0,1].
  bool valid() const;
};

struct TrackPoint {
  int frame = 1;
  int id = 1;
  Detection det;
  bool visible = true;
};

/// All observations of one vehicle id, sorted by frame.
struct Track {
  int id = 0;
  std::vector<TrackPoint> points;
};

struct VideoTracks {
  FrameSize frame_size;
  Rational fps;
  int num_frames = 0;
  std::vector<Track> tracks;  ///< sorted by id

  std::size_t point_count() const;
  /// Builds grouped, sorted tracks from loose points. Throws Error on a duplicate (id, frame).
  static VideoTracks from_points(FrameSize size, Rational fps, int num_frames, std::vector<TrackPoint> points);
  std::vector<TrackPoint> flatten() const;
};

BBox to_pixels(const BBox& normalized, FrameSize size);
BBox to_normalized(const BBox& pixels, FrameSize size);

/// Confidence threshold (keeps s >= score_threshold) followed by greedy,
/// class-agnostic NMS in descending score order. Returns indices into `dets`
/// of the kept detections, in descending score order (input order on ties).
std::vector<std::size_t> ingest_filter_indices(std::span<const Detection> dets, double score_threshold,
                                               double iou_threshold);
std::vector<Detection> ingest_filter(std::span<const Detection> dets, double score_threshold, double iou_threshold);

/// Per-id class relabeling to the class with the largest summed score;
/// ties go to the lowest class index.
VideoTracks refine_classes(const VideoTracks& tracks);

/// Strict margin test on a pixel-space box.
bool is_fully_visible(const BBox& px, FrameSize size, double margin);
/// Strict margin test on a track point (its normalized box is de-normalized first).
bool visibility_flag(const TrackPoint& p, FrameSize size, double margin);

/// Maps every box into the reference frame with the per-frame homography.
/// Frame 1 defaults to identity when absent from `per_frame`. Visibility flags
/// are recomputed on the original (un-stabilized) boxes.
/// Throws MissingHomography for any other frame without an entry.
VideoTracks stabilize_tracks(const VideoTracks& tracks, const std::map<int, Homography>& per_frame,
                             double visibility_margin = 4.0);

}  // namespace aerotraj
