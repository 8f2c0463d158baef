#include "mvtrack/metrics.hpp"

#include "mvtrack/assignment.hpp"
#include "mvtrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

namespace mvtrack {

TrackingResult TrackingResult::only_camera(int camera) const {
  TrackingResult out;
  for (const auto& r : records) {
    if (r.camera == camera) out.records.push_back(r);
  }
  return out;
}

int TrackingResult::max_camera() const {
  int m = -1;
  for (const auto& r : records) m = std::max(m, r.camera);
  return m;
}

void TrackingResult::sort() {
  std::sort(records.begin(), records.end(), [](const TrackRecord& a, const TrackRecord& b) {
    return std::tie(a.frame, a.camera, a.id) < std::tie(b.frame, b.camera, b.id);
  });
}

namespace {

using SliceKey = std::pair<int, int>;  // (camera, frame)
using Slices = std::map<SliceKey, std::vector<const TrackRecord*>>;

Slices slice(const TrackingResult& r) {
  Slices out;
  for (const auto& rec : r.records) out[{rec.camera, rec.frame}].push_back(&rec);
  return out;
}

std::vector<BoundingBox> boxes(const std::vector<const TrackRecord*>& recs) {
  std::vector<BoundingBox> out;
  out.reserve(recs.size());
  for (const auto* r : recs) out.push_back(r->box);
  return out;
}

// Visits every (camera, frame) slice present in either input, in order.
template <typename Fn>
void for_each_slice(const Slices& gt, const Slices& pred, Fn&& fn) {
  static const std::vector<const TrackRecord*> none;
  std::vector<SliceKey> keys;
  for (const auto& [k, v] : gt) keys.push_back(k);
  for (const auto& [k, v] : pred) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  for (const auto& k : keys) {
    auto g = gt.find(k);
    auto p = pred.find(k);
    fn(k, g == gt.end() ? none : g->second, p == pred.end() ? none : p->second);
  }
}

}  // namespace

std::vector<std::pair<int, int>> match_frame(const std::vector<BoundingBox>& gt,
                                             const std::vector<BoundingBox>& pred,
                                             double iou_threshold) {
  CostMatrix cost(static_cast<int>(gt.size()), static_cast<int>(pred.size()));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      const double o = iou(gt[i], pred[j]);
      cost(static_cast<int>(i), static_cast<int>(j)) = o >= iou_threshold ? 1.0 - o : kInfeasible;
    }
  }
  return solve_assignment(cost).pairs;
}

MotaResult mota(const TrackingResult& gt, const TrackingResult& pred, double iou_threshold) {
  MotaResult r;
  std::map<std::pair<int, int>, int> last_match;  // (camera, gt id) -> pred id
  for_each_slice(slice(gt), slice(pred), [&](const SliceKey& key, const auto& g, const auto& p) {
    const auto pairs = match_frame(boxes(g), boxes(p), iou_threshold);
    r.gt_count += static_cast<long>(g.size());
    r.matches += static_cast<long>(pairs.size());
    r.false_negatives += static_cast<long>(g.size() - pairs.size());
    r.false_positives += static_cast<long>(p.size() - pairs.size());
    for (const auto& [gi, pi] : pairs) {
      const auto id_key = std::make_pair(key.first, g[gi]->id);
      auto it = last_match.find(id_key);
      if (it != last_match.end() && it->second != p[pi]->id) ++r.id_switches;
      last_match[id_key] = p[pi]->id;
    }
  });
  if (r.gt_count == 0) throw UndefinedMetric("MOTA undefined without ground-truth boxes");
  r.mota = 1.0 - static_cast<double>(r.false_positives + r.false_negatives + r.id_switches) /
                     static_cast<double>(r.gt_count);
  return r;
}

IdScores id_scores(const TrackingResult& gt, const TrackingResult& pred, double iou_threshold) {
  using IdKey = std::pair<int, int>;  // (camera, id)
  std::map<IdKey, int> gt_index, pred_index;
  for (const auto& r : gt.records) gt_index.emplace(IdKey{r.camera, r.id}, 0);
  for (const auto& r : pred.records) pred_index.emplace(IdKey{r.camera, r.id}, 0);
  int k = 0;
  for (auto& [key, idx] : gt_index) idx = k++;
  k = 0;
  for (auto& [key, idx] : pred_index) idx = k++;

  const long total_gt = static_cast<long>(gt.records.size());
  const long total_pred = static_cast<long>(pred.records.size());
  if (total_gt == 0) throw UndefinedMetric("ID scores undefined without ground-truth boxes");

  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(gt_index.size()),
                                                  static_cast<Eigen::Index>(pred_index.size()));
  for_each_slice(slice(gt), slice(pred), [&](const SliceKey& key, const auto& g, const auto& p) {
    for (const auto* a : g) {
      for (const auto* b : p) {
        if (iou(a->box, b->box) >= iou_threshold) {
          overlap(gt_index.at({key.first, a->id}), pred_index.at({key.first, b->id})) += 1.0;
        }
      }
    }
  });

  IdScores s;
  if (overlap.size() > 0) {
    const Matching m = solve_assignment(CostMatrix(Eigen::MatrixXd(-overlap)));
    for (const auto& [i, j] : m.pairs) s.idtp += static_cast<long>(overlap(i, j));
  }
  s.idfn = total_gt - s.idtp;
  s.idfp = total_pred - s.idtp;
  s.idr = static_cast<double>(s.idtp) / static_cast<double>(total_gt);
  s.idp = total_pred > 0 ? static_cast<double>(s.idtp) / static_cast<double>(total_pred) : 0.0;
  s.idf1 = 2.0 * static_cast<double>(s.idtp) / static_cast<double>(total_gt + total_pred);
  return s;
}

std::vector<double> hota_thresholds() {
  std::vector<double> a;
  for (int k = 1; k <= 19; ++k) a.push_back(k / 20.0);
  return a;
}

HotaResult hota(const TrackingResult& gt, const TrackingResult& pred) {
  using IdKey = std::pair<int, int>;
  if (gt.records.empty()) throw UndefinedMetric("HOTA undefined without ground-truth boxes");
  std::map<IdKey, long> gt_len, pred_len;
  for (const auto& r : gt.records) ++gt_len[{r.camera, r.id}];
  for (const auto& r : pred.records) ++pred_len[{r.camera, r.id}];
  const Slices gs = slice(gt), ps = slice(pred);

  HotaResult out;
  const auto alphas = hota_thresholds();
  for (double alpha : alphas) {
    long tp = 0;
    std::map<std::pair<IdKey, IdKey>, long> pair_tp;
    for_each_slice(gs, ps, [&](const SliceKey& key, const auto& g, const auto& p) {
      for (const auto& [gi, pi] : match_frame(boxes(g), boxes(p), alpha)) {
        ++tp;
        ++pair_tp[{IdKey{key.first, g[gi]->id}, IdKey{key.first, p[pi]->id}}];
      }
    });
    const long fn = static_cast<long>(gt.records.size()) - tp;
    const long fp = static_cast<long>(pred.records.size()) - tp;
    const double det_a = static_cast<double>(tp) / static_cast<double>(tp + fn + fp);
    double ass_a = 0.0;
    if (tp > 0) {
      for (const auto& [ids, n] : pair_tp) {
        const double tpa = static_cast<double>(n);
        const double denom = static_cast<double>(gt_len[ids.first] + pred_len[ids.second]) - tpa;
        ass_a += tpa * (tpa / denom);
      }
      ass_a /= static_cast<double>(tp);
    }
    out.det_a += det_a;
    out.ass_a += ass_a;
    out.hota += std::sqrt(det_a * ass_a);
  }
  const double n = static_cast<double>(alphas.size());
  out.det_a /= n;
  out.ass_a /= n;
  out.hota /= n;
  return out;
}

CrossViewCounts cross_view_counts(const TrackingResult& gt, const TrackingResult& pred,
                                  int num_cameras, double iou_threshold) {
  if (num_cameras < 2) throw UndefinedMetric("cross-view metrics need at least two cameras");
  // frame -> camera -> (gt ids present, pred id -> matched gt id or -1)
  struct View {
    std::vector<int> gt_ids;
    std::map<int, int> pred_to_gt;
  };
  std::map<int, std::map<int, View>> frames;
  for_each_slice(slice(gt), slice(pred), [&](const SliceKey& key, const auto& g, const auto& p) {
    View& view = frames[key.second][key.first];
    for (const auto* r : g) view.gt_ids.push_back(r->id);
    for (const auto* r : p) view.pred_to_gt[r->id] = -1;
    for (const auto& [gi, pi] : match_frame(boxes(g), boxes(p), iou_threshold)) {
      view.pred_to_gt[p[pi]->id] = g[gi]->id;
    }
  });

  CrossViewCounts c;
  for (const auto& [frame, cams] : frames) {
    for (auto u = cams.begin(); u != cams.end(); ++u) {
      for (auto v = std::next(u); v != cams.end(); ++v) {
        std::vector<int> a = u->second.gt_ids, b = v->second.gt_ids;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<int> common;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
        const long gt_pairs = static_cast<long>(common.size());

        long pred_pairs = 0, tp = 0;
        for (const auto& [pid, gid_u] : u->second.pred_to_gt) {
          auto it = v->second.pred_to_gt.find(pid);
          if (it == v->second.pred_to_gt.end()) continue;
          ++pred_pairs;
          if (gid_u >= 0 && gid_u == it->second) ++tp;
        }
        c.gt_pairs += gt_pairs;
        c.tp += tp;
        c.fp += pred_pairs - tp;
        c.fn += gt_pairs - tp;
      }
    }
  }
  return c;
}

CrossViewScores cross_view_scores(const TrackingResult& gt, const TrackingResult& pred,
                                  int num_cameras, double iou_threshold) {
  CrossViewScores s;
  s.counts = cross_view_counts(gt, pred, num_cameras, iou_threshold);
  const auto& c = s.counts;
  if (c.gt_pairs == 0) throw UndefinedMetric("no ground-truth cross-view pairs");
  const double tp = static_cast<double>(c.tp);
  s.aidp = c.tp + c.fp > 0 ? tp / static_cast<double>(c.tp + c.fp) : 0.0;
  s.aidr = tp / static_cast<double>(c.tp + c.fn);
  s.aidf1 = 2.0 * tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
  return s;
}

double mhaa(const TrackingResult& gt, const TrackingResult& pred, int num_cameras,
            double iou_threshold) {
  const CrossViewCounts c = cross_view_counts(gt, pred, num_cameras, iou_threshold);
  if (c.gt_pairs == 0) throw UndefinedMetric("MHAA undefined without ground-truth cross-view pairs");
  return std::max(0.0, 1.0 - static_cast<double>(c.fp + c.fn) / static_cast<double>(c.gt_pairs));
}

std::pair<double, double> overall(double idf1, double aidf1, double mota_value, double mhaa_value) {
  return {0.5 * (mota_value + mhaa_value), 0.5 * (idf1 + aidf1)};
}

MetricReport evaluate(const TrackingResult& gt, const TrackingResult& pred, int num_cameras,
                      double iou_threshold) {
  MetricReport rep;
  if (!gt.records.empty()) {
    const MotaResult m = mota(gt, pred, iou_threshold);
    const IdScores ids = id_scores(gt, pred, iou_threshold);
    rep.mota = m.mota;
    rep.fp = m.false_positives;
    rep.fn = m.false_negatives;
    rep.idsw = m.id_switches;
    rep.idp = ids.idp;
    rep.idr = ids.idr;
    rep.idf1 = ids.idf1;
    rep.idtp = ids.idtp;
    rep.idfp = ids.idfp;
    rep.idfn = ids.idfn;
    rep.hota = hota(gt, pred).hota;
  }
  if (num_cameras >= 2) {
    const CrossViewCounts c = cross_view_counts(gt, pred, num_cameras, iou_threshold);
    rep.cross_tp = c.tp;
    rep.cross_fp = c.fp;
    rep.cross_fn = c.fn;
    if (c.gt_pairs > 0) {
      const CrossViewScores s = cross_view_scores(gt, pred, num_cameras, iou_threshold);
      rep.aidp = s.aidp;
      rep.aidr = s.aidr;
      rep.aidf1 = s.aidf1;
      rep.mhaa = mhaa(gt, pred, num_cameras, iou_threshold);
    }
  }
  if (rep.idf1 && rep.aidf1 && rep.mota && rep.mhaa) {
    const auto [a, f] = overall(*rep.idf1, *rep.aidf1, *rep.mota, *rep.mhaa);
    rep.overall_a = a;
    rep.overall_f = f;
  }
  return rep;
}

std::string format_one_decimal(double value) {
  // Half-up on the decimal digit; the epsilon absorbs binary representation
  // error of values such as 58.85.
  const double scaled = std::floor(value * 10.0 + 0.5 + 1e-9);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", scaled / 10.0);
  return buf;
}

std::string format_percent(std::optional<double> fraction) {
  if (!fraction) return "n/a";
  return format_one_decimal(*fraction * 100.0);
}

}  // namespace mvtrack
