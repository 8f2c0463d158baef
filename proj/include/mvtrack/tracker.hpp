#pragma once

#include "mvtrack/kalman.hpp"
#include "mvtrack/types.hpp"

#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mvtrack {

enum class TrackState { Tentative, Confirmed, Deleted };

struct TrackerConfig {
  int n_init = 3;
  int max_age = 30;
  int gallery_size = 100;
  double cosine_gate = 0.4;
  double motion_gate = kGateChi2_4dof;
  int max_detections = 10;
  KalmanConfig kalman;

  void validate() const;
};

struct Tracklet {
  int local_id = 0;
  int camera = 0;
  std::optional<int> global_id;
  KalmanState kalman;
  std::deque<std::vector<double>> gallery;  // view-specific features, newest last
  std::vector<double> last_agnostic;
  TrackState state = TrackState::Tentative;
  int hits = 0;
  int age = 0;  // frames since the last match
  int born_at = 0;
  int confirmed_at = -1;
  int last_frame = 0;
  BoundingBox last_box;
  int detection_index = -1;  // index into this frame's detections, -1 if unmatched
  // Observations made while tentative, reported once the tracklet confirms.
  std::vector<std::pair<int, BoundingBox>> backlog;

  bool matched_now() const { return age == 0; }
};

// Tracking-by-detection inside one camera: appearance (max cosine over a
// gallery of view-specific features) gated by the Kalman motion model, one
// global assignment per frame.
class SingleViewTracker {
 public:
  explicit SingleViewTracker(int camera, TrackerConfig cfg = {});

  // Advances to `frame`. All detections must belong to this camera and frame
  // and carry embeddings. Returns the tracklets that are still alive.
  const std::vector<Tracklet>& step(int frame, std::span<const Detection> detections);

  const std::vector<Tracklet>& active() const { return tracks_; }
  int camera() const { return camera_; }
  const TrackerConfig& config() const { return cfg_; }

  void set_global_id(int local_id, int global_id);

 private:
  int camera_;
  TrackerConfig cfg_;
  int next_local_id_ = 1;
  std::vector<Tracklet> tracks_;
};

}  // namespace mvtrack
