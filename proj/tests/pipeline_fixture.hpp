#pragma once

// Small synthetic two-video session written to disk for the command tests.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace aerotraj::fixtures {

namespace fs = std::filesystem;

inline void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

/// One track row in normalized coordinates from a pixel-space box.
inline std::string track_row(int frame, int id, double cx, double cy, double w, double h, int cls, double score) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", frame, id, cx / 3840.0, cy / 2160.0,
                w / 3840.0, h / 2160.0, cls, score);
  return buf;
}

inline constexpr const char* kTrackHeader = "frame,id,cx,cy,w,h,class,score\n";

/// Vehicle 1 drives along +x at 20 px per frame with a 180x80 box, vehicle 2
/// has only 10 frames, vehicle 3 is a parked bus and vehicle 4 only ever has
/// low-confidence detections. `drift` px per frame is camera motion along x.
inline std::string session_tracks(double y_offset, double drift) {
  std::ostringstream s;
  s << kTrackHeader;
  for (int k = 1; k <= 60; ++k) {
    const double dx = drift * (k - 1);
    s << track_row(k, 1, 600 + 20.0 * (k - 1) + dx, 1000 + y_offset, 180, 80, 0, 0.9);
    if (k <= 10) s << track_row(k, 2, 3000 + dx, 400 + y_offset, 90, 200, 2, 0.8);
    if (k <= 40) s << track_row(k, 3, 2000 + dx, 1500 + y_offset, 120, 100, 1, k % 3 == 0 ? 0.6 : 0.7);
    if (k <= 20) s << track_row(k, 4, 300, 300, 50, 50, 3, 0.2);
  }
  return s.str();
}

inline constexpr const char* kSidecar = R"({"frame_width": 3840, "frame_height": 2160, "fps": "30000/1001", "num_frames": 60})";

inline constexpr const char* kRegistry = R"({
  "intersections": {
    "A": {"master_to_ortho": [1, 0, 1000, 0, 1, 2000, 0, 0, 1],
          "geo_local": [0.02725, 0, -150.5, 0, -0.02725, 300.25],
          "geo_wgs": [2.5e-7, 0, 37.38, 0, -2e-7, 126.65]}
  },
  "videos": {
    "A_1": {"intersection": "A"},
    "A_2": {"intersection": "A", "ref_to_master": [1, 0, 10, 0, 1, -5, 0, 0, 1]}
  }
})";

inline constexpr const char* kSegmentation = R"([
  {"section": "N_G", "lane": 1, "polygon": [[1000, 2950], [9000, 2950], [9000, 3000], [1000, 3000]]},
  {"section": "N_G", "lane": 2, "polygon": [[1000, 3000], [9000, 3000], [9000, 3100], [1000, 3100]]}
])";

/// Homography log for the second video, undoing its drift of 0.5 px per frame.
inline std::string shifted_log() {
  std::ostringstream s;
  s << "# frame h00 h01 h02 h10 h11 h12 h20 h21 h22\n";
  for (int k = 1; k <= 60; ++k) s << k << " 1 0 " << -0.5 * (k - 1) << " 0 1 0 0 0 1\n";
  return s.str();
}

/// Writes the session and a pipeline config into `dir`; returns the config path.
inline fs::path write_pipeline_session(const fs::path& dir) {
  write(dir / "a1_tracks.csv", session_tracks(0.0, 0.0));
  write(dir / "a2_tracks.csv", session_tracks(40.0, 0.5));
  write(dir / "sidecar.json", kSidecar);
  write(dir / "registry.json", kRegistry);
  write(dir / "segmentation.json", kSegmentation);
  write(dir / "a2_homographies.txt", shifted_log());
  write(dir / "pipeline.json", R"({
  "pipeline": {
    "registry": "registry.json",
    "segmentation": "segmentation.json",
    "date": "2022-10-04",
    "intersection": "A",
    "session": "AM1",
    "videos": [
      {"name": "A_1", "tracks": "a1_tracks.csv", "sidecar": "sidecar.json", "drone_id": 1, "start_time": "08:00:00.000"},
      {"name": "A_2", "tracks": "a2_tracks.csv", "sidecar": "sidecar.json", "homographies": "a2_homographies.txt",
       "drone_id": 2, "start_time": "08:00:00.500"}
    ]
  }
})");
  return dir / "pipeline.json";
}

}  // namespace aerotraj::fixtures
