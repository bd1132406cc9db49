#include "aerotraj/georeference.hpp"

#include "aerotraj/errors.hpp"

namespace aerotraj {

const VideoGeo& GeoRegistry::video(const std::string& name) const {
  const auto it = videos.find(name);
  if (it == videos.end()) throw UnknownVideo("video '" + name + "' is not in the registry");
  return it->second;
}

const IntersectionGeo& GeoRegistry::intersection_of(const std::string& name) const {
  const VideoGeo& v = video(name);
  const auto it = intersections.find(v.intersection);
  if (it == intersections.end())
    throw UnknownIntersection("intersection '" + v.intersection + "' of video '" + name + "' is not in the registry");
  return it->second;
}

Homography compose_ref_to_ortho(const GeoRegistry& registry, const std::string& video) {
  const VideoGeo& v = registry.video(video);
  return compose(registry.intersection_of(video).master_to_ortho, v.ref_to_master);
}

GeoPoint georeference_point(const Homography& ref_to_ortho, Point2 p_ref, const GeoTransform& geo_local,
                            const GeoTransform& geo_wgs) {
  GeoPoint out;
  out.ortho = ref_to_ortho.apply(p_ref);
  out.local = pixel_to_world(geo_local, out.ortho);
  const Point2 wgs = pixel_to_world(geo_wgs, out.ortho);
  out.lat = wgs.x;
  out.lon = wgs.y;
  return out;
}

GeoPoint georeference_point(const GeoRegistry& registry, const std::string& video, Point2 p_ref,
                            const GeoTransform& geo_local, const GeoTransform& geo_wgs) {
  return georeference_point(compose_ref_to_ortho(registry, video), p_ref, geo_local, geo_wgs);
}

GeoPoint georeference_point(const GeoRegistry& registry, const std::string& video, Point2 p_ref) {
  const IntersectionGeo& geo = registry.intersection_of(video);
  return georeference_point(compose_ref_to_ortho(registry, video), p_ref, geo.geo_local, geo.geo_wgs);
}

std::optional<LaneAssignment> assign_segment(const SegmentationMap& seg, Point2 ortho_p) {
  for (const auto& region : seg)
    if (point_in_polygon(region.polygon, ortho_p)) return LaneAssignment{region.section, region.lane};
  return std::nullopt;
}

}  // namespace aerotraj
