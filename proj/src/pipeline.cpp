#include "mvtrack/pipeline.hpp"

#include "mvtrack/error.hpp"

#include <set>
#include <stdexcept>
#include <tuple>

namespace mvtrack {

TrackingResult run_tracking(const Scene& scene, const PipelineConfig& cfg) {
  return run_tracking_detailed(scene, cfg).global;
}

PipelineOutput run_tracking_detailed(const Scene& scene, const PipelineConfig& cfg) {
  scene.validate();
  cfg.tracker.validate();
  cfg.cross_view.validate();
  std::vector<SingleViewTracker> trackers;
  for (int v = 0; v < scene.num_cameras; ++v) trackers.emplace_back(v, cfg.tracker);
  GlobalBank bank;
  PipelineOutput out;
  std::set<std::tuple<int, int, int>> emitted;  // (frame, camera, id)

  for (const auto& f : scene.frames) {
    std::vector<std::vector<ViewTracklet>> per_camera(scene.num_cameras);
    std::vector<std::vector<const Tracklet*>> sources(scene.num_cameras);
    for (int v = 0; v < scene.num_cameras; ++v) {
      const auto& live = trackers[v].step(f.frame, f.cameras[v]);
      for (const auto& t : live) {
        if (t.state != TrackState::Confirmed || !t.matched_now()) continue;
        per_camera[v].push_back(ViewTracklet{v, t.local_id, t.last_agnostic, t.global_id});
        sources[v].push_back(&t);
      }
    }

    const CrossViewResult assoc = associate_views(per_camera, bank, f.frame, cfg.cross_view);
    bank = assoc.bank;
    const auto ids = resolve_conflicts(per_camera, assoc);

    for (int v = 0; v < scene.num_cameras; ++v) {
      std::set<int> seen;
      for (std::size_t k = 0; k < per_camera[v].size(); ++k) {
        const int gid = ids[v][k];
        if (!seen.insert(gid).second) {
          throw std::logic_error("two tracklets of one camera share a global id");
        }
        const Tracklet& t = *sources[v][k];
        if (t.confirmed_at == f.frame) {
          for (const auto& [frame, box] : t.backlog) {
            if (emitted.insert({frame, v, gid}).second) out.global.records.push_back(TrackRecord{frame, v, gid, box});
            out.local.records.push_back(TrackRecord{frame, v, t.local_id, box});
          }
        }
        if (emitted.insert({f.frame, v, gid}).second) {
          out.global.records.push_back(TrackRecord{f.frame, v, gid, t.last_box});
        }
        out.local.records.push_back(TrackRecord{f.frame, v, t.local_id, t.last_box});
      }
      for (std::size_t k = 0; k < per_camera[v].size(); ++k) {
        trackers[v].set_global_id(per_camera[v][k].local_id, ids[v][k]);
      }
    }
  }
  out.global.sort();
  out.local.sort();
  return out;
}

}  // namespace mvtrack
