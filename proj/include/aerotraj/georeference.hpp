#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aerotraj/geometry.hpp"

namespace aerotraj {

struct IntersectionGeo {
  Homography master_to_ortho;
  GeoTransform geo_local;  ///< ortho px -> planar metres
  GeoTransform geo_wgs;    ///< ortho px -> (latitude, longitude)
};

struct VideoGeo {
  std::string intersection;
  Homography ref_to_master;
};

/// Per-intersection master->ortho maps and per-video ref->master maps.
struct GeoRegistry {
  std::map<std::string, IntersectionGeo> intersections;
  std::map<std::string, VideoGeo> videos;

  /// Throws UnknownVideo / UnknownIntersection.
  const VideoGeo& video(const std::string& name) const;
  const IntersectionGeo& intersection_of(const std::string& video) const;
};

struct GeoPoint {
  Point2 ortho;
  Point2 local;
  double lat = 0.0;
  double lon = 0.0;
};

struct LaneRegion {
  std::string section;  ///< "N_G"
  int lane = 1;
  std::vector<Point2> polygon;  ///< ortho cut-out pixels
};

using SegmentationMap = std::vector<LaneRegion>;

struct LaneAssignment {
  std::string section;
  int lane = 1;

  friend bool operator==(const LaneAssignment&, const LaneAssignment&) = default;
};

/// master_to_ortho ∘ ref_to_master for the video's intersection.
Homography compose_ref_to_ortho(const GeoRegistry& registry, const std::string& video);

/// Maps a reference-frame pixel to ortho pixels, then independently through
/// both affine maps. Throws DegenerateProjection.
GeoPoint georeference_point(const Homography& ref_to_ortho, Point2 p_ref, const GeoTransform& geo_local,
                            const GeoTransform& geo_wgs);
GeoPoint georeference_point(const GeoRegistry& registry, const std::string& video, Point2 p_ref,
                            const GeoTransform& geo_local, const GeoTransform& geo_wgs);
/// Uses the geo transforms stored for the video's intersection.
GeoPoint georeference_point(const GeoRegistry& registry, const std::string& video, Point2 p_ref);

/// First region in document order containing the point (boundary inclusive).
std::optional<LaneAssignment> assign_segment(const SegmentationMap& seg, Point2 ortho_p);

}  // namespace aerotraj
