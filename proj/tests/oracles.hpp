#pragma once

// Brute-force reference evaluations and random instance generators shared by
// the unit tests and the acceptance runner. Nothing here calls the library's
// solvers, so agreement is a real cross-check.

#include "mvtrack/assignment.hpp"
#include "mvtrack/metrics.hpp"
#include "mvtrack/random.hpp"
#include "mvtrack/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using mvtrack::BoundingBox;
using mvtrack::TrackingResult;
using mvtrack::TrackRecord;

struct BruteMatching {
  int cardinality = 0;
  double cost = 0.0;
  std::vector<std::pair<int, int>> pairs;
};

// Every partial matching, scored by (max cardinality, min cost, lexicographic
// pairs). Costs are summed in row order, so dyadic inputs compare exactly.
inline BruteMatching brute_assignment(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows()), m = static_cast<int>(c.cols());
  BruteMatching best;
  bool have = false;
  std::vector<char> used(m, 0);
  std::vector<std::pair<int, int>> cur;
  std::function<void(int, double)> rec = [&](int row, double cost) {
    if (row == n) {
      const int k = static_cast<int>(cur.size());
      bool better = !have || k > best.cardinality ||
                    (k == best.cardinality && (cost < best.cost ||
                                               (cost == best.cost && cur < best.pairs)));
      if (better) {
        best = {k, cost, cur};
        have = true;
      }
      return;
    }
    for (int j = 0; j < m; ++j) {
      if (used[j] || std::isinf(c(row, j))) continue;
      used[j] = 1;
      cur.emplace_back(row, j);
      rec(row + 1, cost + c(row, j));
      cur.pop_back();
      used[j] = 0;
    }
    rec(row + 1, cost);
  };
  rec(0, 0.0);
  return best;
}

inline double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.left + a.width, b.left + b.width) - std::max(a.left, b.left);
  const double h = std::min(a.top + a.height, b.top + b.height) - std::max(a.top, b.top);
  if (w <= 0 || h <= 0) return 0.0;
  const double inter = w * h;
  return inter / (a.width * a.height + b.width * b.height - inter);
}

using Slice = std::map<std::pair<int, int>, std::vector<TrackRecord>>;  // (camera, frame)

inline Slice slices(const TrackingResult& r) {
  Slice s;
  for (const auto& rec : r.records) s[{rec.camera, rec.frame}].push_back(rec);
  return s;
}

// IDTP maximized over every injective map between GT and predicted identities
// of the same camera (identities in different cameras never co-occur).
inline long brute_idtp(const TrackingResult& gt, const TrackingResult& pred, double thr) {
  std::set<int> cams;
  for (const auto& r : gt.records) cams.insert(r.camera);
  long total = 0;
  for (int cam : cams) {
    std::vector<int> gids, pids;
    for (const auto& r : gt.records) {
      if (r.camera == cam) gids.push_back(r.id);
    }
    for (const auto& r : pred.records) {
      if (r.camera == cam) pids.push_back(r.id);
    }
    std::sort(gids.begin(), gids.end());
    gids.erase(std::unique(gids.begin(), gids.end()), gids.end());
    std::sort(pids.begin(), pids.end());
    pids.erase(std::unique(pids.begin(), pids.end()), pids.end());

    auto score = [&](const std::map<int, int>& assign) {
      long tp = 0;
      for (const auto& g : gt.records) {
        if (g.camera != cam) continue;
        auto it = assign.find(g.id);
        if (it == assign.end()) continue;
        for (const auto& p : pred.records) {
          if (p.camera == cam && p.frame == g.frame && p.id == it->second &&
              box_iou(g.box, p.box) >= thr) {
            ++tp;
            break;
          }
        }
      }
      return tp;
    };
    long best = 0;
    std::map<int, int> assign;
    std::vector<char> used(pids.size(), 0);
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == gids.size()) {
        best = std::max(best, score(assign));
        return;
      }
      rec(k + 1);
      for (std::size_t j = 0; j < pids.size(); ++j) {
        if (used[j]) continue;
        used[j] = 1;
        assign[gids[k]] = pids[j];
        rec(k + 1);
        assign.erase(gids[k]);
        used[j] = 0;
      }
    };
    rec(0);
    total += best;
  }
  return total;
}

struct BruteHota {
  double hota = 0.0, det_a = 0.0, ass_a = 0.0;
};

// Per threshold: per-slice matching by brute force, then TPA/FNA/FPA counted
// summed per identity pair.
inline BruteHota brute_hota(const TrackingResult& gt, const TrackingResult& pred) {
  const Slice gs = slices(gt), ps = slices(pred);
  std::set<std::pair<int, int>> keys;
  for (const auto& [k, v] : gs) keys.insert(k);
  for (const auto& [k, v] : ps) keys.insert(k);
  std::map<std::pair<int, int>, long> glen, plen;
  for (const auto& r : gt.records) ++glen[{r.camera, r.id}];
  for (const auto& r : pred.records) ++plen[{r.camera, r.id}];

  BruteHota out;
  for (int a = 1; a <= 19; ++a) {
    const double alpha = a / 20.0;
    // (gt key, pred key) of every true positive
    std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> tps;
    for (const auto& key : keys) {
      static const std::vector<TrackRecord> none;
      const auto& g = gs.count(key) ? gs.at(key) : none;
      const auto& p = ps.count(key) ? ps.at(key) : none;
      Eigen::MatrixXd c(g.size(), p.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < p.size(); ++j) {
          const double o = box_iou(g[i].box, p[j].box);
          c(i, j) = o >= alpha ? 1.0 - o : std::numeric_limits<double>::infinity();
        }
      }
      for (const auto& [i, j] : brute_assignment(c).pairs) {
        tps.push_back({{key.first, g[i].id}, {key.first, p[j].id}});
      }
    }
    const double tp = static_cast<double>(tps.size());
    const double fn = static_cast<double>(gt.records.size()) - tp;
    const double fp = static_cast<double>(pred.records.size()) - tp;
    const double det = tp / (tp + fn + fp);
    // Group true positives by identity pair; summing groups in key order keeps
    // the float result independent of slice order.
    std::map<std::pair<std::pair<int, int>, std::pair<int, int>>, long> groups;
    for (const auto& t : tps) ++groups[t];
    double ass = 0.0;
    for (const auto& [t, n] : groups) {
      const double tpa = static_cast<double>(n);
      const double fna = static_cast<double>(glen[t.first]) - tpa;
      const double fpa = static_cast<double>(plen[t.second]) - tpa;
      ass += tpa * (tpa / (tpa + fna + fpa));
    }
    if (!tps.empty()) ass /= tp;
    out.det_a += det;
    out.ass_a += ass;
    out.hota += std::sqrt(det * ass);
  }
  out.det_a /= 19.0;
  out.ass_a /= 19.0;
  out.hota /= 19.0;
  return out;
}

// Small random GT and noisy predictions: identities wander, predictions
// jitter, drop, swap ids and add clutter. Continuous jitter keeps optimal
// per-frame matchings unique.
struct SmallInstance {
  TrackingResult gt, pred;
  int cameras = 1;
};

inline SmallInstance random_instance(mvtrack::Rng& rng, int max_ids, int max_cams, int max_frames) {
  SmallInstance s;
  const int ids = 1 + static_cast<int>(rng.below(max_ids));
  s.cameras = 1 + static_cast<int>(rng.below(max_cams));
  const int frames = 1 + static_cast<int>(rng.below(max_frames));
  const double keep = rng.uniform(0.5, 1.0);
  const double swap = rng.uniform(0.0, 0.4);
  const double jitter = rng.uniform(0.0, 8.0);
  for (int cam = 0; cam < s.cameras; ++cam) {
    std::vector<double> x(ids), y(ids);
    for (int i = 0; i < ids; ++i) {
      x[i] = rng.uniform(0, 120);
      y[i] = rng.uniform(0, 120);
    }
    for (int f = 0; f < frames; ++f) {
      std::vector<int> used;
      for (int i = 0; i < ids; ++i) {
        x[i] += rng.uniform(-6, 6);
        y[i] += rng.uniform(-6, 6);
        if (rng.uniform() > 0.8) continue;
        const BoundingBox b{x[i], y[i], 20, 40};
        s.gt.records.push_back({f, cam, i + 1, b});
        if (rng.uniform() > keep) continue;
        int pid = i + 1;
        if (rng.uniform() < swap) pid = 1 + static_cast<int>(rng.below(ids + 1));
        if (std::find(used.begin(), used.end(), pid) != used.end()) continue;
        used.push_back(pid);
        s.pred.records.push_back(
            {f, cam, pid, {b.left + rng.uniform(-jitter, jitter), b.top + rng.uniform(-jitter, jitter),
                           20 + rng.uniform(-jitter, jitter) * 0.5, 40}});
      }
      if (rng.uniform() < 0.3) {
        const int pid = 100 + static_cast<int>(rng.below(3));
        if (std::find(used.begin(), used.end(), pid) == used.end()) {
          s.pred.records.push_back({f, cam, pid, {rng.uniform(0, 120), rng.uniform(0, 120), 20, 40}});
        }
      }
    }
  }
  if (s.gt.records.empty()) s.gt.records.push_back({0, 0, 1, {0, 0, 20, 40}});
  return s;
}

}  // namespace oracle
