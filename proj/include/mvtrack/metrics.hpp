#pragma once

#include "mvtrack/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mvtrack {

struct TrackRecord {
  int frame = 0;
  int camera = 0;
  int id = 0;
  BoundingBox box;

  friend bool operator==(const TrackRecord&, const TrackRecord&) = default;
};

// Output tracklets (or ground truth): ids are unique within one (frame, camera).
struct TrackingResult {
  std::vector<TrackRecord> records;

  TrackingResult only_camera(int camera) const;
  int max_camera() const;  // -1 when empty
  void sort();             // by (frame, camera, id)
};

// Per-frame correspondence as (gt index, pred index) pairs: minimum total
// 1 - IoU over cells with IoU >= threshold.
std::vector<std::pair<int, int>> match_frame(const std::vector<BoundingBox>& gt,
                                             const std::vector<BoundingBox>& pred,
                                             double iou_threshold);

struct MotaResult {
  double mota = 0.0;
  long false_positives = 0;
  long false_negatives = 0;
  long id_switches = 0;
  long gt_count = 0;
  long matches = 0;
};

// Counts pooled over cameras; an identity switch is a change of the matched
// prediction id between consecutive matched frames of one GT identity.
MotaResult mota(const TrackingResult& gt, const TrackingResult& pred, double iou_threshold = 0.5);

struct IdScores {
  double idp = 0.0;
  double idr = 0.0;
  double idf1 = 0.0;
  long idtp = 0;
  long idfp = 0;
  long idfn = 0;
};

// Identities are (camera, id) keys, so the optimal GT-to-prediction matching
// measures over-time consistency inside each camera.
IdScores id_scores(const TrackingResult& gt, const TrackingResult& pred, double iou_threshold = 0.5);

struct HotaResult {
  double hota = 0.0;
  double det_a = 0.0;
  double ass_a = 0.0;
};

// Thresholds used by hota(): 0.05, 0.10, ..., 0.95.
std::vector<double> hota_thresholds();
HotaResult hota(const TrackingResult& gt, const TrackingResult& pred);

struct CrossViewCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long gt_pairs = 0;
};

// Same-identity pairs over every frame and unordered camera pair.
CrossViewCounts cross_view_counts(const TrackingResult& gt, const TrackingResult& pred,
                                  int num_cameras, double iou_threshold = 0.5);

struct CrossViewScores {
  double aidp = 0.0;
  double aidr = 0.0;
  double aidf1 = 0.0;
  CrossViewCounts counts;
};

CrossViewScores cross_view_scores(const TrackingResult& gt, const TrackingResult& pred,
                                  int num_cameras, double iou_threshold = 0.5);
double mhaa(const TrackingResult& gt, const TrackingResult& pred, int num_cameras,
            double iou_threshold = 0.5);

// (A, F) = (mean(MOTA, MHAA), mean(IDF1, AIDF1)), on whatever scale the inputs use.
std::pair<double, double> overall(double idf1, double aidf1, double mota, double mhaa);

struct MetricReport {
  std::optional<double> idp, idr, idf1, mota, hota;
  std::optional<double> aidp, aidr, aidf1, mhaa;
  std::optional<double> overall_a, overall_f;
  long fp = 0, fn = 0, idsw = 0, idtp = 0, idfp = 0, idfn = 0;
  long cross_tp = 0, cross_fp = 0, cross_fn = 0;
};

// Full suite; metrics whose denominators are empty stay unset.
MetricReport evaluate(const TrackingResult& gt, const TrackingResult& pred, int num_cameras,
                      double iou_threshold = 0.5);

// One-decimal percentage with halves rounded up, e.g. 0.5885 -> "58.9"; "n/a" when unset.
std::string format_percent(std::optional<double> fraction);
std::string format_one_decimal(double value);

}  // namespace mvtrack
