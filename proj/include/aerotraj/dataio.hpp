#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aerotraj/campaign.hpp"
#include "aerotraj/georeference.hpp"
#include "aerotraj/metrics.hpp"
#include "aerotraj/registration.hpp"
#include "aerotraj/trackmodel.hpp"

namespace aerotraj {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Low level helpers

/// Splits one CSV record on commas. No quoting; a trailing '\r' is dropped.
std::vector<std::string> split_csv_line(std::string_view line);

/// Strict number parsing; nullopt on junk or trailing characters.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Fixed-point text with `digits` decimals, half away from zero. Rounding is
/// done on the shortest round-trip decimal form of `v`, so 2.675 -> "2.68".
std::string format_fixed(double v, int digits);

/// Shortest round-trip representation.
std::string format_shortest(double v);

/// "30000/1001", "29.97" is rejected; integers are accepted as n/1.
Rational parse_rational(std::string_view s);

// ---------------------------------------------------------------------------
// Tracks

struct TrackSidecar {
  FrameSize frame_size;
  Rational fps;
  int num_frames = 0;  ///< 0 means "derive from the data"
};

TrackSidecar load_sidecar(const fs::path& path);
TrackSidecar parse_sidecar(std::string_view json_text);

/// A validated row together with its line number (header is line 1).
struct TrackRow {
  TrackPoint point;
  std::size_t line = 0;
};

/// Reads frame,id,cx,cy,w,h,class,score rows (columns matched by header name;
/// extra columns ignored). Throws ParseError / InvariantViolation with the line.
std::vector<TrackRow> read_track_rows(std::istream& in);

/// read_track_rows plus duplicate (id, frame) rejection and grouping.
VideoTracks load_tracks(std::istream& in, const TrackSidecar& sidecar);
VideoTracks load_tracks(const fs::path& path, const TrackSidecar& sidecar);

/// Writes the same columns plus a trailing `visible` column, sorted by (frame, id).
void write_tracks(std::ostream& out, const VideoTracks& tracks);

// ---------------------------------------------------------------------------
// Homographies and affine maps

/// Nine whitespace/comma separated numbers, row-major.
Homography parse_homography(std::string_view text);
Homography load_homography(const fs::path& path);
void write_homography(std::ostream& out, const Homography& h);

/// "frame h0 ... h8" per line; '#' starts a comment.
std::map<int, Homography> read_homography_log(std::istream& in);
std::map<int, Homography> load_homography_log(const fs::path& path);
void write_homography_log(std::ostream& out, const std::map<int, Homography>& per_frame);

/// Six numbers in the order a b t_x c d t_y.
GeoTransform parse_geotransform(std::string_view text);
/// Six lines A D B E C F as written by GIS tools next to a raster.
GeoTransform parse_world_file(std::string_view text);
/// World file when the extension looks like one (.wld, .tfw, .pgw, .jgw, ...).
GeoTransform load_geotransform(const fs::path& path);

// ---------------------------------------------------------------------------
// Registry and segmentation

/// JSON: {"intersections": {name: {master_to_ortho, geo_local, geo_wgs}},
///        "videos": {name: {intersection, ref_to_master}}}.
/// Matrices are 9-number arrays, affine maps 6-number arrays (a b t_x c d t_y)
/// or a path to a geotransform/world file relative to `base_dir`.
GeoRegistry parse_registry(std::string_view json_text, const fs::path& base_dir = {});
GeoRegistry load_registry(const fs::path& path);

/// JSON: [{"section": "N_G", "lane": 1, "polygon": [[x, y], ...]}, ...]
SegmentationMap parse_segmentation(std::string_view json_text);
SegmentationMap load_segmentation(const fs::path& path);

// ---------------------------------------------------------------------------
// Correspondences

/// frame,src_x,src_y,dst_x,dst_y[,d1,d2]; empty d1/d2 cells mean "no distances".
std::map<int, std::vector<Correspondence>> read_correspondences(std::istream& in);
std::map<int, std::vector<Correspondence>> load_correspondences(const fs::path& path);
void write_correspondences(std::ostream& out, const std::map<int, std::vector<Correspondence>>& per_frame);

/// src_x,src_y,dst_x,dst_y[,d1,d2] without a frame column.
std::vector<Correspondence> read_correspondence_list(std::istream& in);
std::vector<Correspondence> load_correspondence_list(const fs::path& path);

/// x,y
std::vector<Point2> read_points(std::istream& in);
std::vector<Point2> load_points(const fs::path& path);

// ---------------------------------------------------------------------------
// Comparison inputs and report

struct ProbeSample {
  double t = 0.0;  ///< seconds
  Point2 p;        ///< local metres
  double speed_kmh = 0.0;
};

/// t,x,y,speed_kmh
std::vector<ProbeSample> read_probe(std::istream& in);
std::vector<ProbeSample> load_probe(const fs::path& path);

/// frame,x,y,speed_kmh ordered by frame.
std::vector<CandidatePoint> read_candidate(std::istream& in);
std::vector<CandidatePoint> load_candidate(const fs::path& path);

/// group, d_P (m), Δv (km/h), length (m), duration (s) with "mean ± sd" cells.
void write_comparison_report(std::ostream& out, std::span<const GroupReport> groups);

// ---------------------------------------------------------------------------
// Campaign results

void write_campaign_csv(std::ostream& out, std::span<const CampaignRow> rows);

// ---------------------------------------------------------------------------
// Songdo-Traffic export

struct SessionMeta {
  int drone_id = 1;
  std::int64_t start_ms = 0;  ///< milliseconds after local midnight (GMT+9)
  Rational fps;
  std::string intersection = "A";
  std::string date = "1970-01-01";
  std::string session = "AM1";

  void validate() const;
};

/// Accepts "hh:mm:ss[.fff]" or a full ISO timestamp "YYYY-MM-DDThh:mm:ss[.fff]".
std::int64_t parse_clock(std::string_view text);
std::string format_clock(std::int64_t ms);

/// Start time plus (k-1) frame periods in exact integer arithmetic,
/// milliseconds truncated toward zero.
std::string frame_to_timestamp(int frame, const SessionMeta& meta);

struct ExportRow {
  int vehicle_id = 0;
  int frame = 0;  ///< sort key; not a column
  std::string local_time;
  int drone_id = 1;
  double ortho_x = 0.0;
  double ortho_y = 0.0;
  double local_x = 0.0;
  double local_y = 0.0;
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<double> length_m;
  std::optional<double> width_m;
  int vehicle_class = 0;
  std::optional<double> speed_kmh;
  std::optional<double> acceleration;  ///< m/s²
  std::optional<std::string> road_section;
  std::optional<int> lane;
  int visibility = 1;
};

inline constexpr std::size_t kMinExportPoints = 16;

/// Songdo column names in file order.
std::span<const std::string_view> songdo_columns();

/// Drops vehicles with fewer than `min_points` rows and stable-sorts by (id, frame).
std::vector<ExportRow> prepare_export(std::vector<ExportRow> rows, std::size_t min_points = kMinExportPoints);

/// Header plus formatted rows of prepare_export(rows). Throws InvariantViolation
/// on an out-of-range class or visibility value.
void write_songdo(std::ostream& out, std::span<const ExportRow> rows);
/// Throws IoFailure.
void export_songdo(std::span<const ExportRow> rows, const fs::path& destination);

/// Reads a file written by write_songdo; `frame` is left at 0.
std::vector<ExportRow> read_songdo(std::istream& in);

/// "YYYY-MM-DD_<Intersection>_<Session>.csv"
std::string songdo_filename(const SessionMeta& meta);

// ---------------------------------------------------------------------------

std::string read_text_file(const fs::path& path);
/// Throws IoFailure on any stream failure.
void write_text_file(const fs::path& path, std::string_view data);

}  // namespace aerotraj
