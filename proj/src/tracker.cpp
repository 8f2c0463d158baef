#include "mvtrack/tracker.hpp"

#include "mvtrack/assignment.hpp"
#include "mvtrack/error.hpp"

#include <algorithm>
#include <string>

namespace mvtrack {

void TrackerConfig::validate() const {
  if (n_init < 1) throw InvalidArgument("n_init must be >= 1");
  if (max_age < 1) throw InvalidArgument("max_age must be >= 1");
  if (gallery_size < 1) throw InvalidArgument("gallery_size must be >= 1");
  if (!(cosine_gate >= -1.0 && cosine_gate <= 1.0)) {
    throw InvalidArgument("cosine_gate must lie in [-1, 1]");
  }
  if (!(motion_gate > 0.0)) throw InvalidArgument("motion_gate must be positive");
  if (max_detections < 1) throw InvalidArgument("max_detections must be >= 1");
}

SingleViewTracker::SingleViewTracker(int camera, TrackerConfig cfg)
    : camera_(camera), cfg_(std::move(cfg)) {
  cfg_.validate();
}

void SingleViewTracker::set_global_id(int local_id, int global_id) {
  for (auto& t : tracks_) {
    if (t.local_id == local_id) {
      t.global_id = global_id;
      return;
    }
  }
  throw InvalidArgument("no live tracklet with local id " + std::to_string(local_id));
}

const std::vector<Tracklet>& SingleViewTracker::step(int frame,
                                                     std::span<const Detection> detections) {
  for (const auto& d : detections) {
    if (d.frame != frame || d.camera != camera_) {
      throw InvalidArgument("tracker for camera " + std::to_string(camera_) + " at frame " +
                            std::to_string(frame) + " received a detection from camera " +
                            std::to_string(d.camera) + " frame " + std::to_string(d.frame));
    }
    if (!d.embedding) throw InvalidArgument("tracker input detections need embeddings");
    d.box.validate();
  }
  if (static_cast<int>(detections.size()) > cfg_.max_detections) {
    throw InvalidArgument("frame holds " + std::to_string(detections.size()) +
                          " detections, more than the configured maximum of " +
                          std::to_string(cfg_.max_detections));
  }

  for (auto& t : tracks_) {
    t.kalman = kf_predict(t.kalman, cfg_.kalman);
    t.detection_index = -1;
  }

  const int nt = static_cast<int>(tracks_.size());
  const int nd = static_cast<int>(detections.size());
  Eigen::MatrixXd similarity(nt, nd);
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < nd; ++j) {
      const auto& feature = detections[j].embedding->specific;
      double best = -1.0;
      for (const auto& g : tracks_[i].gallery) best = std::max(best, cosine_similarity(g, feature));
      similarity(i, j) = best;
    }
  }
  CostMatrix cost = similarity_to_cost(similarity, cfg_.cosine_gate);
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < nd; ++j) {
      if (mahalanobis(tracks_[i].kalman, detections[j].box, cfg_.kalman) > cfg_.motion_gate) {
        cost(i, j) = kInfeasible;
      }
    }
  }
  const Matching matching = solve_assignment(cost);

  std::vector<char> det_used(nd, 0);
  std::vector<char> track_used(nt, 0);
  for (const auto& [i, j] : matching.pairs) {
    Tracklet& t = tracks_[i];
    const Detection& d = detections[j];
    t.kalman = kf_update(t.kalman, d.box, cfg_.kalman);
    t.gallery.push_back(d.embedding->specific);
    while (static_cast<int>(t.gallery.size()) > cfg_.gallery_size) t.gallery.pop_front();
    t.last_agnostic = d.embedding->agnostic;
    t.hits += 1;
    t.age = 0;
    t.last_frame = frame;
    t.last_box = d.box;
    t.detection_index = j;
    if (t.state == TrackState::Tentative) {
      if (t.hits >= cfg_.n_init) {
        t.state = TrackState::Confirmed;
        t.confirmed_at = frame;
      } else {
        t.backlog.emplace_back(frame, d.box);
      }
    }
    det_used[j] = 1;
    track_used[i] = 1;
  }

  for (int i = 0; i < nt; ++i) {
    if (track_used[i]) continue;
    Tracklet& t = tracks_[i];
    t.age += 1;
    // A tentative tracklet that misses a frame never confirms.
    if (t.state == TrackState::Tentative || t.age > cfg_.max_age) t.state = TrackState::Deleted;
  }
  std::erase_if(tracks_, [](const Tracklet& t) { return t.state == TrackState::Deleted; });

  for (int j = 0; j < nd; ++j) {
    if (det_used[j]) continue;
    const Detection& d = detections[j];
    Tracklet t;
    t.local_id = next_local_id_++;
    t.camera = camera_;
    t.kalman = kf_init(d.box, cfg_.kalman);
    t.gallery.push_back(d.embedding->specific);
    t.last_agnostic = d.embedding->agnostic;
    t.hits = 1;
    t.age = 0;
    t.born_at = frame;
    t.last_frame = frame;
    t.last_box = d.box;
    t.detection_index = j;
    if (cfg_.n_init <= 1) {
      t.state = TrackState::Confirmed;
      t.confirmed_at = frame;
    } else {
      t.backlog.emplace_back(frame, d.box);
    }
    tracks_.push_back(std::move(t));
  }
  return tracks_;
}

}  // namespace mvtrack
