#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace mmda {

constexpr int kIgnoreLabel = -1;

enum class DomainTag : std::uint8_t { source = 0, target = 1 };

struct Calibration {
  double fx = 100.0;
  double fy = 100.0;
  double cx = 32.0;
  double cy = 32.0;
  // World-to-camera: p_cam = rot * p + trans. rot is row-major.
  std::array<double, 9> rot{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> trans{0, 0, 0};

  bool rotation_orthonormal(double tol = 1e-9) const;
  std::array<double, 3> to_camera(const std::array<double, 3>& p) const;
};

/// One synchronized image + point-cloud sample with per-point labels.
struct Frame {
  std::uint64_t id = 0;
  DomainTag domain = DomainTag::source;
  int height = 0;
  int width = 0;
  std::vector<double> image;  // height*width*3 row-major RGB in [0,1]
  std::vector<std::array<double, 3>> points;
  std::vector<int> labels;  // class id or kIgnoreLabel, aligned with points
  Calibration calib;

  // Generator provenance, consumed only by test oracles: whether the point
  // landed inside the camera image and at which cell.
  std::vector<std::uint8_t> cam_visible;
  std::vector<int> pixel_row;
  std::vector<int> pixel_col;

  std::size_t num_points() const { return points.size(); }
};

}  // namespace mmda
