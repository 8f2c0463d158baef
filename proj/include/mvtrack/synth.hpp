#pragma once

#include "mvtrack/metrics.hpp"
#include "mvtrack/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <vector>

namespace mvtrack {

// Axis-aligned region of the ground plane seen by one camera.
struct ViewWindow {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool intersects(const ViewWindow& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
};

struct SynthConfig {
  int num_identities = 8;
  int num_cameras = 3;
  int num_frames = 200;
  double plane_size = 100.0;
  std::vector<ViewWindow> windows;  // empty: default_windows()
  double window_side = 0.6;         // default window side, fraction of the plane
  double window_radius = 0.2;       // default window centers' distance from the plane center
  int identity_dim = 8;
  double view_noise = 0.05;
  double miss_rate = 0.02;
  double view_mix = 0.2;   // A_v = I + view_mix * G_v / sqrt(d)
  double view_bias = 0.1;  // b_v = view_bias * g_v / sqrt(d)
  bool orthogonal_latents = false;
  double speed = 0.8;  // plane units per frame

  int image_width = 640;
  int image_height = 480;
  double person_width = 4.0;
  double person_height = 10.0;

  bool with_crops = false;
  int crop_size = 8;
  int crop_patch = 2;
  double pattern_scale = 0.3;
  double crop_view_mix = 0.0;  // share of the view distortion seen in crop textures
  double camera_shift = 0.015;
  double pixel_noise = 0.05;
  double illumination_jitter = 0.0;  // per-detection brightness noise

  std::uint64_t seed = 7;

  void validate() const;
};

// Windows placed evenly on a circle around the plane center.
std::vector<ViewWindow> default_windows(int num_cameras, double plane_size, double side = 0.6,
                                        double radius = 0.2);

struct ViewTransform {
  Eigen::MatrixXd matrix;  // d x d
  Eigen::VectorXd offset;  // d
};

struct Scenario {
  SynthConfig config;
  Scene scene;
  TrackingResult truth;  // every in-window identity, including missed detections
  std::vector<Eigen::VectorXd> latents;
  std::vector<ViewTransform> views;
  std::vector<ViewWindow> windows;
  std::vector<Eigen::Vector3d> camera_colors;  // per-channel crop offsets (equal channels)
};

Scenario generate(const SynthConfig& cfg);

// Crops a random sub-window of `crop_area` of the camera image, drops boxes
// whose centers leave it and rescales the rest back to full resolution.
Scenario perturb_misalign(const Scenario& s, int camera, double crop_area, std::uint64_t seed);

// Removes every detection of the given cameras; ground truth is kept.
Scenario perturb_malfunction(const Scenario& s, const std::set<int>& cameras);

// Fraction of (identity, frame) truth entries visible in at least two cameras.
double multi_view_fraction(const Scenario& s);

}  // namespace mvtrack
