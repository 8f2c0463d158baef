#pragma once

#include "mvtrack/cross_view.hpp"
#include "mvtrack/metrics.hpp"
#include "mvtrack/tracker.hpp"
#include "mvtrack/types.hpp"

namespace mvtrack {

struct PipelineConfig {
  TrackerConfig tracker;
  CrossViewConfig cross_view;
};

// Per-camera tracking, then cross-view association at every frame. Boxes of
// confirmed tracklets are reported under their global ids, including the
// frames observed while the tracklet was still tentative.
TrackingResult run_tracking(const Scene& scene, const PipelineConfig& cfg = {});

struct PipelineOutput {
  TrackingResult global;  // ids after cross-view association
  TrackingResult local;   // same boxes under each camera's own tracklet ids
};

PipelineOutput run_tracking_detailed(const Scene& scene, const PipelineConfig& cfg = {});

}  // namespace mvtrack
