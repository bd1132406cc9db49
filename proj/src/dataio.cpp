#include "aerotraj/dataio.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <cstdio>
#include <cstdint>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "aerotraj/errors.hpp"

namespace aerotraj {

using json = nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

/// Maps header names to column indices; throws ParseError(1) when one is missing.
class Header {
public:
  Header(std::string_view line, std::initializer_list<std::string_view> required) {
    const auto cells = split_csv_line(line);
    for (std::size_t i = 0; i < cells.size(); ++i) index_.emplace(std::string(trim(cells[i])), i);
    for (auto name : required)
      if (!index_.contains(std::string(name))) throw ParseError(1, "missing column '" + std::string(name) + "'");
  }
  std::optional<std::size_t> find(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t at(std::string_view name) const { return *find(name); }

private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// Iterates over the non-blank data records of a CSV stream.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    fn(split_csv_line(line), lineno);
  }
}

const std::string& cell(const std::vector<std::string>& cells, std::size_t i, std::size_t line) {
  if (i >= cells.size()) throw ParseError(line, "expected at least " + std::to_string(i + 1) + " fields");
  return cells[i];
}

double number_cell(const std::vector<std::string>& cells, std::size_t i, std::size_t line, std::string_view name) {
  const auto v = parse_double(cell(cells, i, line));
  if (!v) throw ParseError(line, "bad number in column '" + std::string(name) + "'");
  return *v;
}

long long int_cell(const std::vector<std::string>& cells, std::size_t i, std::size_t line, std::string_view name) {
  const auto v = parse_int(cell(cells, i, line));
  if (!v) throw ParseError(line, "bad integer in column '" + std::string(name) + "'");
  return *v;
}

std::optional<double> optional_number(const std::vector<std::string>& cells, std::optional<std::size_t> i,
                                      std::size_t line, std::string_view name) {
  if (!i || *i >= cells.size() || is_blank(cells[*i])) return std::nullopt;
  return number_cell(cells, *i, line, name);
}

std::vector<double> numbers_in(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == '#') {
      pos = text.find('\n', pos);
      if (pos == std::string_view::npos) break;
      continue;
    }
    if (std::string_view(" \t\r\n,;").find(text[pos]) != std::string_view::npos) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < text.size() && std::string_view(" \t\r\n,;#").find(text[end]) == std::string_view::npos) ++end;
    const auto v = parse_double(text.substr(pos, end - pos));
    if (!v) throw ParseError(1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n')),
                             "bad number '" + std::string(text.substr(pos, end - pos)) + "'");
    out.push_back(*v);
    pos = end;
  }
  return out;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path.string() + "'");
  return in;
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

Homography homography_from_json(const json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 9) throw ConfigError(std::string(what) + " must be an array of 9 numbers");
  std::array<double, 9> m{};
  for (std::size_t i = 0; i < 9; ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + " must be an array of 9 numbers");
    m[i] = j[i].get<double>();
  }
  return Homography::from_row_major(m);
}

GeoTransform geo_from_json(const json& j, const fs::path& base_dir, std::string_view what) {
  if (j.is_string()) {
    fs::path p = j.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return load_geotransform(p);
  }
  if (!j.is_array() || j.size() != 6) throw ConfigError(std::string(what) + " must be 6 numbers or a file path");
  GeoTransform g{j[0].get<double>(), j[1].get<double>(), j[3].get<double>(),
                 j[4].get<double>(), j[2].get<double>(), j[5].get<double>()};
  g.validate();
  return g;
}

std::string mean_sd_cell(const MeanSd& m, int digits) {
  return format_fixed(m.mean, digits) + " ± " + format_fixed(m.sd, digits);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_shortest(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

std::string format_fixed(double v, int digits) {
  if (!std::isfinite(v)) throw Error("cannot format a non-finite value");
  if (digits < 0) throw Error("negative digit count");
  std::array<char, 512> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
  if (ec != std::errc{}) throw Error("number too large to format");
  std::string s(buf.data(), ptr);

  const bool negative = !s.empty() && s.front() == '-';
  if (negative) s.erase(0, 1);
  const auto dot = s.find('.');
  std::string int_part = dot == std::string::npos ? s : s.substr(0, dot);
  std::string frac = dot == std::string::npos ? std::string() : s.substr(dot + 1);

  const auto d = static_cast<std::size_t>(digits);
  bool round_up = frac.size() > d && frac[d] >= '5';
  if (frac.size() < d) frac.append(d - frac.size(), '0');
  frac.resize(d);

  std::string all = int_part + frac;
  if (round_up) {
    std::size_t i = all.size();
    while (i > 0) {
      --i;
      if (all[i] == '9') {
        all[i] = '0';
      } else {
        ++all[i];
        round_up = false;
        break;
      }
    }
    if (round_up) all.insert(all.begin(), '1');
  }
  const std::size_t int_len = all.size() - d;
  std::string out = all.substr(0, int_len);
  if (d > 0) out += "." + all.substr(int_len);
  const bool zero = all.find_first_not_of('0') == std::string::npos;
  if (negative && !zero) out.insert(out.begin(), '-');
  return out;
}

Rational parse_rational(std::string_view s) {
  s = trim(s);
  const auto slash = s.find('/');
  Rational r;
  if (slash == std::string_view::npos) {
    const auto n = parse_int(s);
    if (!n) throw ConfigError("frame rate must be an integer or a fraction n/d, got '" + std::string(s) + "'");
    r = {*n, 1};
  } else {
    const auto n = parse_int(s.substr(0, slash));
    const auto d = parse_int(s.substr(slash + 1));
    if (!n || !d) throw ConfigError("bad frame rate '" + std::string(s) + "'");
    r = {*n, *d};
  }
  if (r.num <= 0 || r.den <= 0) throw ConfigError("frame rate must be positive");
  return r;
}

// ---------------------------------------------------------------------------

TrackSidecar parse_sidecar(std::string_view json_text) {
  const json j = parse_json(json_text, "sidecar");
  if (!j.is_object()) throw ConfigError("sidecar must be a JSON object");
  TrackSidecar sc;
  sc.frame_size.width = j.value("frame_width", sc.frame_size.width);
  sc.frame_size.height = j.value("frame_height", sc.frame_size.height);
  if (j.contains("fps")) {
    const auto& f = j["fps"];
    if (f.is_string()) {
      sc.fps = parse_rational(f.get<std::string>());
    } else if (f.is_array() && f.size() == 2) {
      sc.fps = {f[0].get<std::int64_t>(), f[1].get<std::int64_t>()};
      if (sc.fps.num <= 0 || sc.fps.den <= 0) throw ConfigError("frame rate must be positive");
    } else if (f.is_number_integer()) {
      sc.fps = {f.get<std::int64_t>(), 1};
    } else {
      throw ConfigError("fps must be \"num/den\", [num, den] or an integer");
    }
  }
  sc.num_frames = j.value("num_frames", 0);
  if (sc.frame_size.width <= 0 || sc.frame_size.height <= 0) throw ConfigError("frame size must be positive");
  if (sc.num_frames < 0) throw ConfigError("num_frames must be non-negative");
  return sc;
}

TrackSidecar load_sidecar(const fs::path& path) { return parse_sidecar(read_text_file(path)); }

std::vector<TrackRow> read_track_rows(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError(1, "missing header row");
  const Header h(header_line, {"frame", "id", "cx", "cy", "w", "h", "class", "score"});
  const std::size_t c_frame = h.at("frame"), c_id = h.at("id"), c_cx = h.at("cx"), c_cy = h.at("cy"),
                    c_w = h.at("w"), c_h = h.at("h"), c_cls = h.at("class"), c_score = h.at("score");

  std::vector<TrackRow> rows;
  for_each_record(in, [&](const std::vector<std::string>& cells, std::size_t line) {
    TrackRow r;
    r.line = line;
    const long long frame = int_cell(cells, c_frame, line, "frame");
    const long long id = int_cell(cells, c_id, line, "id");
    const long long cls = int_cell(cells, c_cls, line, "class");
    r.point.det.bbox = {number_cell(cells, c_cx, line, "cx"), number_cell(cells, c_cy, line, "cy"),
                        number_cell(cells, c_w, line, "w"), number_cell(cells, c_h, line, "h")};
    r.point.det.score = number_cell(cells, c_score, line, "score");
    if (frame < 1 || frame > INT32_MAX) throw InvariantViolation(line, "frame must be >= 1");
    if (id < 0 || id > INT32_MAX) throw InvariantViolation(line, "id must be non-negative");
    if (cls < 0 || cls > INT32_MAX) throw InvariantViolation(line, "class must be non-negative");
    r.point.frame = static_cast<int>(frame);
    r.point.id = static_cast<int>(id);
    r.point.det.cls = static_cast<int>(cls);
    if (!r.point.det.valid())
      throw InvariantViolation(line, "box entries must lie in [0,1] and score in (0,1]");
    rows.push_back(r);
  });
  return rows;
}

VideoTracks load_tracks(std::istream& in, const TrackSidecar& sidecar) {
  const auto rows = read_track_rows(in);
  std::set<std::pair<int, int>> seen;
  std::vector<TrackPoint> points;
  points.reserve(rows.size());
  int max_frame = 0;
  for (const auto& r : rows) {
    if (!seen.emplace(r.point.id, r.point.frame).second)
      throw InvariantViolation(r.line, "duplicate (id, frame) = (" + std::to_string(r.point.id) + ", " +
                                           std::to_string(r.point.frame) + ")");
    if (sidecar.num_frames > 0 && r.point.frame > sidecar.num_frames)
      throw InvariantViolation(r.line, "frame beyond num_frames");
    max_frame = std::max(max_frame, r.point.frame);
    points.push_back(r.point);
  }
  const int n = sidecar.num_frames > 0 ? sidecar.num_frames : max_frame;
  return VideoTracks::from_points(sidecar.frame_size, sidecar.fps, n, std::move(points));
}

VideoTracks load_tracks(const fs::path& path, const TrackSidecar& sidecar) {
  auto in = open_input(path);
  return load_tracks(in, sidecar);
}

void write_tracks(std::ostream& out, const VideoTracks& tracks) {
  auto points = tracks.flatten();
  std::stable_sort(points.begin(), points.end(),
                   [](const TrackPoint& a, const TrackPoint& b) { return std::pair(a.frame, a.id) < std::pair(b.frame, b.id); });
  out << "frame,id,cx,cy,w,h,class,score,visible\n";
  for (const auto& p : points) {
    out << p.frame << ',' << p.id << ',' << format_shortest(p.det.bbox.cx) << ',' << format_shortest(p.det.bbox.cy)
        << ',' << format_shortest(p.det.bbox.w) << ',' << format_shortest(p.det.bbox.h) << ',' << p.det.cls << ','
        << format_shortest(p.det.score) << ',' << (p.visible ? 1 : 0) << '\n';
  }
  if (!out) throw IoFailure("failed writing tracks");
}

// ---------------------------------------------------------------------------

Homography parse_homography(std::string_view text) {
  const auto v = numbers_in(text);
  if (v.size() != 9) throw ParseError(1, "expected 9 homography coefficients, got " + std::to_string(v.size()));
  return Homography::from_row_major(v);
}

Homography load_homography(const fs::path& path) { return parse_homography(read_text_file(path)); }

void write_homography(std::ostream& out, const Homography& h) {
  const auto m = h.row_major();
  for (std::size_t r = 0; r < 3; ++r)
    out << format_shortest(m[3 * r]) << ' ' << format_shortest(m[3 * r + 1]) << ' ' << format_shortest(m[3 * r + 2])
        << '\n';
  if (!out) throw IoFailure("failed writing homography");
}

std::map<int, Homography> read_homography_log(std::istream& in) {
  std::map<int, Homography> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    if (is_blank(body)) continue;
    const auto v = [&] {
      try {
        return numbers_in(body);
      } catch (const ParseError&) {
        throw ParseError(lineno, "bad number in homography log");
      }
    }();
    if (v.size() != 10) throw ParseError(lineno, "expected a frame number and 9 coefficients");
    const double f = v[0];
    if (f < 1 || f != std::floor(f)) throw ParseError(lineno, "frame must be a positive integer");
    const int frame = static_cast<int>(f);
    try {
      if (!out.emplace(frame, Homography::from_row_major(std::span(v).subspan(1))).second)
        throw ParseError(lineno, "duplicate frame " + std::to_string(frame));
    } catch (const SingularResult& e) {
      throw ParseError(lineno, std::string("frame ") + std::to_string(frame) + ": " + e.what());
    }
  }
  return out;
}

std::map<int, Homography> load_homography_log(const fs::path& path) {
  auto in = open_input(path);
  return read_homography_log(in);
}

void write_homography_log(std::ostream& out, const std::map<int, Homography>& per_frame) {
  out << "# frame h00 h01 h02 h10 h11 h12 h20 h21 h22\n";
  for (const auto& [frame, h] : per_frame) {
    out << frame;
    for (double v : h.row_major()) out << ' ' << format_shortest(v);
    out << '\n';
  }
  if (!out) throw IoFailure("failed writing homography log");
}

GeoTransform parse_geotransform(std::string_view text) {
  const auto v = numbers_in(text);
  if (v.size() != 6) throw ParseError(1, "expected 6 geotransform coefficients, got " + std::to_string(v.size()));
  GeoTransform g{v[0], v[1], v[3], v[4], v[2], v[5]};
  g.validate();
  return g;
}

GeoTransform parse_world_file(std::string_view text) {
  const auto v = numbers_in(text);
  if (v.size() != 6) throw ParseError(1, "a world file has 6 lines, got " + std::to_string(v.size()) + " values");
  // A D B E C F
  GeoTransform g{v[0], v[2], v[1], v[3], v[4], v[5]};
  g.validate();
  return g;
}

GeoTransform load_geotransform(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  static const std::set<std::string> world_ext = {".wld", ".tfw", ".tifw", ".pgw", ".pngw", ".jgw", ".jpgw"};
  const std::string text = read_text_file(path);
  return world_ext.contains(ext) ? parse_world_file(text) : parse_geotransform(text);
}

// ---------------------------------------------------------------------------

GeoRegistry parse_registry(std::string_view json_text, const fs::path& base_dir) {
  const json j = parse_json(json_text, "registry");
  if (!j.is_object() || !j.contains("intersections") || !j.contains("videos"))
    throw ConfigError("registry needs 'intersections' and 'videos' objects");
  GeoRegistry reg;
  for (const auto& [name, node] : j["intersections"].items()) {
    const std::string ctx = "intersection '" + name + "'";
    for (const char* key : {"master_to_ortho", "geo_local", "geo_wgs"})
      if (!node.contains(key)) throw ConfigError(ctx + " lacks '" + key + "'");
    reg.intersections.emplace(name, IntersectionGeo{homography_from_json(node["master_to_ortho"], ctx + " master_to_ortho"),
                                                    geo_from_json(node["geo_local"], base_dir, ctx + " geo_local"),
                                                    geo_from_json(node["geo_wgs"], base_dir, ctx + " geo_wgs")});
  }
  for (const auto& [name, node] : j["videos"].items()) {
    const std::string ctx = "video '" + name + "'";
    if (!node.contains("intersection") || !node["intersection"].is_string())
      throw ConfigError(ctx + " lacks an 'intersection' name");
    VideoGeo v;
    v.intersection = node["intersection"].get<std::string>();
    if (!reg.intersections.contains(v.intersection))
      throw UnknownIntersection(ctx + " refers to unknown intersection '" + v.intersection + "'");
    v.ref_to_master = node.contains("ref_to_master") ? homography_from_json(node["ref_to_master"], ctx + " ref_to_master")
                                                     : Homography::identity();
    reg.videos.emplace(name, std::move(v));
  }
  return reg;
}

GeoRegistry load_registry(const fs::path& path) { return parse_registry(read_text_file(path), path.parent_path()); }

SegmentationMap parse_segmentation(std::string_view json_text) {
  const json j = parse_json(json_text, "segmentation");
  if (!j.is_array()) throw ConfigError("segmentation must be a JSON array");
  SegmentationMap seg;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& node = j[i];
    const std::string ctx = "segmentation entry " + std::to_string(i);
    if (!node.contains("section") || !node.contains("lane") || !node.contains("polygon"))
      throw ConfigError(ctx + " needs section, lane and polygon");
    LaneRegion r;
    r.section = node["section"].get<std::string>();
    r.lane = node["lane"].get<int>();
    if (r.lane < 1) throw ConfigError(ctx + " lane numbers start at 1");
    for (const auto& pt : node["polygon"]) {
      if (!pt.is_array() || pt.size() != 2) throw ConfigError(ctx + " polygon vertices must be [x, y]");
      r.polygon.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    if (r.polygon.size() < 3) throw ConfigError(ctx + " polygon needs at least 3 vertices");
    seg.push_back(std::move(r));
  }
  return seg;
}

SegmentationMap load_segmentation(const fs::path& path) { return parse_segmentation(read_text_file(path)); }

// ---------------------------------------------------------------------------

namespace {

Correspondence correspondence_record(const Header& h, const std::vector<std::string>& cells, std::size_t line) {
  Correspondence c;
  c.src = {number_cell(cells, h.at("src_x"), line, "src_x"), number_cell(cells, h.at("src_y"), line, "src_y")};
  c.dst = {number_cell(cells, h.at("dst_x"), line, "dst_x"), number_cell(cells, h.at("dst_y"), line, "dst_y")};
  c.d1 = optional_number(cells, h.find("d1"), line, "d1");
  c.d2 = optional_number(cells, h.find("d2"), line, "d2");
  if (c.d1.has_value() != c.d2.has_value()) throw InvariantViolation(line, "d1 and d2 must be given together");
  if (c.d1 && (*c.d1 < 0.0 || *c.d1 > *c.d2)) throw InvariantViolation(line, "distances must satisfy 0 <= d1 <= d2");
  if (!is_finite(c.src) || !is_finite(c.dst)) throw InvariantViolation(line, "non-finite coordinate");
  return c;
}

}  // namespace

std::map<int, std::vector<Correspondence>> read_correspondences(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError(1, "missing header row");
  const Header h(header_line, {"frame", "src_x", "src_y", "dst_x", "dst_y"});
  std::map<int, std::vector<Correspondence>> out;
  for_each_record(in, [&](const std::vector<std::string>& cells, std::size_t line) {
    const long long frame = int_cell(cells, h.at("frame"), line, "frame");
    if (frame < 1 || frame > INT32_MAX) throw InvariantViolation(line, "frame must be >= 1");
    out[static_cast<int>(frame)].push_back(correspondence_record(h, cells, line));
  });
  return out;
}

std::vector<Correspondence> read_correspondence_list(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError(1, "missing header row");
  const Header h(header_line, {"src_x", "src_y", "dst_x", "dst_y"});
  std::vector<Correspondence> out;
  for_each_record(in, [&](const std::vector<std::string>& cells, std::size_t line) {
    out.push_back(correspondence_record(h, cells, line));
  });
  return out;
}

std::vector<Correspondence> load_correspondence_list(const fs::path& path) {
  auto in = open_input(path);
  return read_correspondence_list(in);
}

std::vector<Point2> read_points(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError(1, "missing header row");
  const Header h(header_line, {"x", "y"});
  std::vector<Point2> out;
  for_each_record(in, [&](const std::vector<std::string>& cells, std::size_t line) {
    out.push_back({number_cell(cells, h.at("x"), line, "x"), number_cell(cells, h.at("y"), line, "y")});
  });
  return out;
}

std::vector<Point2> load_points(const fs::path& path) {
  auto in = open_input(path);
  return read_points(in);
}

std::map<int, std::vector<Correspondence>> load_correspondences(const fs::path& path) {
  auto in = open_input(path);
  return read_correspondences(in);
}

void write_correspondences(std::ostream& out, const std::map<int, std::vector<Correspondence>>& per_frame) {
  out << "frame,src_x,src_y,dst_x,dst_y,d1,d2\n";
  for (const auto& [frame, list] : per_frame)
    for (const auto& c : list) {
      out << frame << ',' << format_shortest(c.src.x) << ',' << format_shortest(c.src.y) << ','
          << format_shortest(c.dst.x) << ',' << format_shortest(c.dst.y) << ',';
      if (c.d1) out << format_shortest(*c.d1);
      out << ',';
      if (c.d2) out << format_shortest(*c.d2);
      out << '\n';
    }
  if (!out) throw IoFailure("failed writing correspondences");
}

// ---------------------------------------------------------------------------

std::vector<ProbeSample> read_probe(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError(1, "missing header row");
  const Header h(header_line, {"t", "x", "y", "speed_kmh"});
  std::vector<ProbeSample> out;
  for_each_record(in, [&](const std::vector<std::string>& cells, std::size_t line) {
    ProbeSample s;
    s.t = number_cell(cells, h.at("t"), line, "t");
    s.p = {number_cell(cells, h.at("x"), line, "x"), number_cell(cells, h.at("y"), line, "y")};
    s.speed_kmh = number_cell(cells, h.at("speed_kmh"), line, "speed_kmh");
    out.push_back(s);
  });
  return out;
}

std::vector<ProbeSample> load_probe(const fs::path& path) {
  auto in = open_input(path);
  return read_probe(in);
}

std::vector<CandidatePoint> read_candidate(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError(1, "missing header row");
  const Header h(header_line, {"frame", "x", "y", "speed_kmh"});
  std::vector<std::pair<long long, CandidatePoint>> rows;
  for_each_record(in, [&](const std::vector<std::string>& cells, std::size_t line) {
    const long long frame = int_cell(cells, h.at("frame"), line, "frame");
    CandidatePoint c;
    c.p = {number_cell(cells, h.at("x"), line, "x"), number_cell(cells, h.at("y"), line, "y")};
    c.speed_kmh = number_cell(cells, h.at("speed_kmh"), line, "speed_kmh");
    if (!rows.empty() && frame <= rows.back().first) throw InvariantViolation(line, "frames must be strictly increasing");
    rows.emplace_back(frame, c);
  });
  std::vector<CandidatePoint> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.second);
  return out;
}

std::vector<CandidatePoint> load_candidate(const fs::path& path) {
  auto in = open_input(path);
  return read_candidate(in);
}

void write_comparison_report(std::ostream& out, std::span<const GroupReport> groups) {
  out << "group,positional_deviation_m,speed_difference_kmh,length_m,duration_s\n";
  for (const auto& g : groups) {
    out << g.label << ',' << mean_sd_cell(g.deviation, 3) << ',';
    if (g.speed_diff) out << mean_sd_cell(*g.speed_diff, 3);
    out << ',' << format_fixed(g.length_m, 2) << ',' << format_fixed(g.duration_s, 2) << '\n';
  }
  if (!out) throw IoFailure("failed writing comparison report");
}

// ---------------------------------------------------------------------------

void write_campaign_csv(std::ostream& out, std::span<const CampaignRow> rows) {
  out << "snn_ratio,downscale,threshold,keypoints,hea,miou,mean_time_ms,trials\n";
  for (const auto& r : rows) {
    out << format_shortest(r.cell.snn_ratio) << ',' << format_shortest(r.cell.downscale) << ','
        << format_shortest(r.cell.threshold) << ',' << r.cell.keypoints << ',' << format_fixed(r.hea, 6) << ','
        << format_fixed(r.miou, 6) << ',';
    if (r.mean_time_ms) out << format_fixed(*r.mean_time_ms, 3);
    out << ',' << r.trials << '\n';
  }
  if (!out) throw IoFailure("failed writing campaign results");
}

// ---------------------------------------------------------------------------

void SessionMeta::validate() const {
  if (drone_id < 1 || drone_id > 10) throw ConfigError("drone_id must lie in 1..10");
  if (fps.num <= 0 || fps.den <= 0) throw ConfigError("frame rate must be positive");
  if (start_ms < 0) throw ConfigError("start time must be non-negative");
}

std::int64_t parse_clock(std::string_view text) {
  text = trim(text);
  if (const auto t = text.find('T'); t != std::string_view::npos) text = text.substr(t + 1);
  // drop a trailing zone designator such as "+09:00" or "Z"
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (const auto plus = text.find('+'); plus != std::string_view::npos) text = text.substr(0, plus);

  auto bad = [&] { return ConfigError("bad clock time '" + std::string(text) + "', expected hh:mm:ss[.fff]"); };
  if (text.size() < 8 || text[2] != ':' || text[5] != ':') throw bad();
  const auto hh = parse_int(text.substr(0, 2));
  const auto mm = parse_int(text.substr(3, 2));
  const auto ss = parse_int(text.substr(6, 2));
  if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 59 || *hh < 0 || *mm < 0 || *ss < 0) throw bad();
  std::int64_t ms = 0;
  if (text.size() > 8) {
    if (text[8] != '.' || text.size() == 9) throw bad();
    std::string frac(text.substr(9));
    if (frac.find_first_not_of("0123456789") != std::string::npos) throw bad();
    frac.resize(3, '0');
    ms = *parse_int(frac);
  }
  return ((*hh * 60 + *mm) * 60 + *ss) * 1000 + ms;
}

std::string format_clock(std::int64_t ms) {
  constexpr std::int64_t day = 24LL * 3600 * 1000;
  ms %= day;
  if (ms < 0) ms += day;
  std::array<char, 16> buf{};
  std::snprintf(buf.data(), buf.size(), "%02lld:%02lld:%02lld.%03lld", static_cast<long long>(ms / 3'600'000),
                static_cast<long long>(ms / 60'000 % 60), static_cast<long long>(ms / 1000 % 60),
                static_cast<long long>(ms % 1000));
  return buf.data();
}

std::string frame_to_timestamp(int frame, const SessionMeta& meta) {
  if (frame < 1) throw Error("frame numbers start at 1");
  if (meta.fps.num <= 0 || meta.fps.den <= 0) throw ConfigError("frame rate must be positive");
  const auto offset_ms = static_cast<std::int64_t>(frame - 1) * meta.fps.den * 1000 / meta.fps.num;
  return format_clock(meta.start_ms + offset_ms);
}

// ---------------------------------------------------------------------------

std::span<const std::string_view> songdo_columns() {
  static constexpr std::array<std::string_view, 17> cols = {
      "Vehicle_ID", "Local_Time",     "Drone_ID",      "Ortho_X",       "Ortho_Y",
      "Local_X",    "Local_Y",        "Latitude",      "Longitude",     "Vehicle_Length",
      "Vehicle_Width", "Vehicle_Class", "Vehicle_Speed", "Vehicle_Acceleration", "Road_Section",
      "Lane_Number", "Visibility"};
  return cols;
}

std::vector<ExportRow> prepare_export(std::vector<ExportRow> rows, std::size_t min_points) {
  std::map<int, std::size_t> counts;
  for (const auto& r : rows) ++counts[r.vehicle_id];
  std::erase_if(rows, [&](const ExportRow& r) { return counts[r.vehicle_id] < min_points; });
  std::stable_sort(rows.begin(), rows.end(), [](const ExportRow& a, const ExportRow& b) {
    return std::pair(a.vehicle_id, a.frame) < std::pair(b.vehicle_id, b.frame);
  });
  return rows;
}

void write_songdo(std::ostream& out, std::span<const ExportRow> rows) {
  const auto kept = prepare_export(std::vector<ExportRow>(rows.begin(), rows.end()));
  const auto cols = songdo_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  auto opt = [](const std::optional<double>& v, int digits) { return v ? format_fixed(*v, digits) : std::string(); };
  std::size_t line = 1;
  for (const auto& r : kept) {
    ++line;
    if (r.vehicle_class < 0 || r.vehicle_class >= 4) throw InvariantViolation(line, "vehicle class outside 0..3");
    if (r.visibility != 0 && r.visibility != 1) throw InvariantViolation(line, "visibility must be 0 or 1");
    out << r.vehicle_id << ',' << r.local_time << ',' << r.drone_id << ',' << format_fixed(r.ortho_x, 1) << ','
        << format_fixed(r.ortho_y, 1) << ',' << format_fixed(r.local_x, 2) << ',' << format_fixed(r.local_y, 2) << ','
        << format_fixed(r.latitude, 7) << ',' << format_fixed(r.longitude, 7) << ',' << opt(r.length_m, 2) << ','
        << opt(r.width_m, 2) << ',' << r.vehicle_class << ',' << opt(r.speed_kmh, 1) << ','
        << opt(r.acceleration, 2) << ',' << r.road_section.value_or("") << ','
        << (r.lane ? std::to_string(*r.lane) : std::string()) << ',' << r.visibility << '\n';
  }
  if (!out) throw IoFailure("failed writing export");
}

void export_songdo(std::span<const ExportRow> rows, const fs::path& destination) {
  std::ostringstream buf;
  write_songdo(buf, rows);
  write_text_file(destination, buf.str());
}

std::vector<ExportRow> read_songdo(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError(1, "missing header row");
  const auto header = split_csv_line(header_line);
  const auto cols = songdo_columns();
  if (header.size() != cols.size() || !std::equal(cols.begin(), cols.end(), header.begin()))
    throw ParseError(1, "header does not match the export schema");
  std::vector<ExportRow> out;
  for_each_record(in, [&](const std::vector<std::string>& c, std::size_t line) {
    if (c.size() != cols.size()) throw ParseError(line, "expected " + std::to_string(cols.size()) + " fields");
    ExportRow r;
    r.vehicle_id = static_cast<int>(int_cell(c, 0, line, "Vehicle_ID"));
    r.local_time = c[1];
    r.drone_id = static_cast<int>(int_cell(c, 2, line, "Drone_ID"));
    r.ortho_x = number_cell(c, 3, line, "Ortho_X");
    r.ortho_y = number_cell(c, 4, line, "Ortho_Y");
    r.local_x = number_cell(c, 5, line, "Local_X");
    r.local_y = number_cell(c, 6, line, "Local_Y");
    r.latitude = number_cell(c, 7, line, "Latitude");
    r.longitude = number_cell(c, 8, line, "Longitude");
    r.length_m = optional_number(c, 9, line, "Vehicle_Length");
    r.width_m = optional_number(c, 10, line, "Vehicle_Width");
    r.vehicle_class = static_cast<int>(int_cell(c, 11, line, "Vehicle_Class"));
    r.speed_kmh = optional_number(c, 12, line, "Vehicle_Speed");
    r.acceleration = optional_number(c, 13, line, "Vehicle_Acceleration");
    if (!is_blank(c[14])) r.road_section = c[14];
    if (!is_blank(c[15])) r.lane = static_cast<int>(int_cell(c, 15, line, "Lane_Number"));
    r.visibility = static_cast<int>(int_cell(c, 16, line, "Visibility"));
    if (r.vehicle_class < 0 || r.vehicle_class >= 4) throw InvariantViolation(line, "vehicle class outside 0..3");
    if (r.visibility != 0 && r.visibility != 1) throw InvariantViolation(line, "visibility must be 0 or 1");
    out.push_back(std::move(r));
  });
  return out;
}

std::string songdo_filename(const SessionMeta& meta) {
  return meta.date + "_" + meta.intersection + "_" + meta.session + ".csv";
}

// ---------------------------------------------------------------------------

std::string read_text_file(const fs::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoFailure("failed reading '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view data) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  auto out = open_output(path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.close();
  if (!out) throw IoFailure("failed writing '" + path.string() + "'");
}

}  // namespace aerotraj
