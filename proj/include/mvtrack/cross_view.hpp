#pragma once

#include <map>
#include <optional>
#include <vector>

namespace mvtrack {

struct CrossViewConfig {
  double merge_threshold = 0.5;
  double bank_threshold = 0.6;

  void validate() const;
};

// Latest view-agnostic embedding per global identity. Entries are never
// evicted and identifiers are never reused.
class GlobalBank {
 public:
  struct Entry {
    std::vector<double> agnostic;
    int last_seen = 0;
  };

  const std::map<int, Entry>& entries() const { return entries_; }
  int next_id() const { return next_id_; }
  int mint() { return next_id_++; }
  void write(int global_id, std::vector<double> agnostic, int frame);

 private:
  std::map<int, Entry> entries_;
  int next_id_ = 1;
};

// One confirmed tracklet observed at the current frame.
struct ViewTracklet {
  int camera = 0;
  int local_id = 0;
  std::vector<double> agnostic;
  std::optional<int> global_id;
};

struct CrossViewResult {
  // Members of each cluster as (camera, position in that camera's list).
  std::vector<std::vector<std::pair<int, int>>> clusters;
  std::vector<int> cluster_ids;  // global id per cluster
  GlobalBank bank;
};

// Pairwise bipartite matching over every camera pair, union into clusters,
// cut the weakest link of any cluster that holds two tracklets of one camera,
// then match clusters against the bank (reuse above bank_threshold, else mint).
CrossViewResult associate_views(const std::vector<std::vector<ViewTracklet>>& per_camera,
                                const GlobalBank& bank, int frame, const CrossViewConfig& cfg);

// Overwrites every tracklet's global id with its cluster's id. Returns the new
// ids in the shape of `per_camera`.
std::vector<std::vector<int>> resolve_conflicts(std::vector<std::vector<ViewTracklet>>& per_camera,
                                                const CrossViewResult& association);

}  // namespace mvtrack
