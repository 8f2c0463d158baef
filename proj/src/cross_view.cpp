#include "mvtrack/cross_view.hpp"

#include "mvtrack/assignment.hpp"
#include "mvtrack/error.hpp"
#include "mvtrack/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace mvtrack {

void CrossViewConfig::validate() const {
  if (!(merge_threshold >= -1.0 && merge_threshold <= 1.0) ||
      !(bank_threshold >= -1.0 && bank_threshold <= 1.0)) {
    throw InvalidArgument("cross-view thresholds must lie in [-1, 1]");
  }
}

void GlobalBank::write(int global_id, std::vector<double> agnostic, int frame) {
  if (global_id <= 0 || global_id >= next_id_) {
    throw InvalidArgument("bank write for an identifier that was never minted");
  }
  entries_[global_id] = Entry{std::move(agnostic), frame};
}

namespace {

struct Node {
  int camera;
  int index;  // position within the camera list
  int local_id;
};

struct Link {
  int a;
  int b;
  double similarity;
};

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

std::vector<std::vector<int>> components(int n, const std::vector<Link>& links) {
  DisjointSets sets(n);
  for (const auto& l : links) sets.unite(l.a, l.b);
  std::vector<std::vector<int>> groups(n);
  for (int i = 0; i < n; ++i) groups[sets.find(i)].push_back(i);
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  return groups;
}

std::vector<double> pooled_direction(const std::vector<std::vector<double>>& vectors) {
  std::vector<double> out(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (std::size_t k = 0; k < v.size(); ++k) out[k] += v[k] / norm;
  }
  for (double& x : out) x /= static_cast<double>(vectors.size());
  return out;
}

}  // namespace

CrossViewResult associate_views(const std::vector<std::vector<ViewTracklet>>& per_camera,
                                const GlobalBank& bank, int frame, const CrossViewConfig& cfg) {
  cfg.validate();
  std::vector<Node> nodes;
  std::vector<std::vector<int>> node_of(per_camera.size());
  for (std::size_t v = 0; v < per_camera.size(); ++v) {
    for (std::size_t i = 0; i < per_camera[v].size(); ++i) {
      node_of[v].push_back(static_cast<int>(nodes.size()));
      nodes.push_back(Node{static_cast<int>(v), static_cast<int>(i), per_camera[v][i].local_id});
    }
  }
  // Canonical order keys make the partition independent of input order.
  auto key = [&](int n) { return std::make_pair(nodes[n].camera, nodes[n].local_id); };

  std::vector<Link> links;
  for (std::size_t u = 0; u < per_camera.size(); ++u) {
    for (std::size_t v = u + 1; v < per_camera.size(); ++v) {
      const auto& a = per_camera[u];
      const auto& b = per_camera[v];
      if (a.empty() || b.empty()) continue;
      Eigen::MatrixXd sim(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
          sim(i, j) = cosine_similarity(a[i].agnostic, b[j].agnostic);
        }
      }
      const Matching m = solve_assignment(similarity_to_cost(sim, cfg.merge_threshold));
      for (const auto& [i, j] : m.pairs) links.push_back(Link{node_of[u][i], node_of[v][j], sim(i, j)});
    }
  }

  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<int>> groups = components(n, links);
  for (;;) {
    int bad = -1;
    for (std::size_t g = 0; g < groups.size() && bad < 0; ++g) {
      std::vector<int> cams;
      for (int m : groups[g]) cams.push_back(nodes[m].camera);
      std::sort(cams.begin(), cams.end());
      if (std::adjacent_find(cams.begin(), cams.end()) != cams.end()) bad = static_cast<int>(g);
    }
    if (bad < 0) break;
    DisjointSets sets(n);
    for (const auto& l : links) sets.unite(l.a, l.b);
    const int root = sets.find(groups[bad].front());
    int weakest = -1;
    for (std::size_t l = 0; l < links.size(); ++l) {
      if (sets.find(links[l].a) != root) continue;
      if (weakest < 0) {
        weakest = static_cast<int>(l);
        continue;
      }
      const Link& cur = links[l];
      const Link& best = links[weakest];
      const auto cur_key = std::minmax(key(cur.a), key(cur.b));
      const auto best_key = std::minmax(key(best.a), key(best.b));
      if (cur.similarity < best.similarity ||
          (cur.similarity == best.similarity && cur_key > best_key)) {
        weakest = static_cast<int>(l);
      }
    }
    links.erase(links.begin() + weakest);
    groups = components(n, links);
  }

  for (auto& g : groups) {
    std::sort(g.begin(), g.end(), [&](int x, int y) { return key(x) < key(y); });
  }
  std::sort(groups.begin(), groups.end(),
            [&](const auto& x, const auto& y) { return key(x.front()) < key(y.front()); });

  CrossViewResult result;
  result.bank = bank;
  std::vector<int> bank_ids;
  for (const auto& [id, entry] : bank.entries()) bank_ids.push_back(id);

  const int nc = static_cast<int>(groups.size());
  Eigen::MatrixXd sim(nc, static_cast<Eigen::Index>(bank_ids.size()));
  for (int c = 0; c < nc; ++c) {
    for (std::size_t e = 0; e < bank_ids.size(); ++e) {
      double best = -1.0;
      const auto& stored = bank.entries().at(bank_ids[e]).agnostic;
      for (int m : groups[c]) {
        const auto& f = per_camera[nodes[m].camera][nodes[m].index].agnostic;
        if (f.size() == stored.size()) best = std::max(best, cosine_similarity(f, stored));
      }
      sim(c, static_cast<Eigen::Index>(e)) = best;
    }
  }
  const Matching reuse = solve_assignment(similarity_to_cost(sim, cfg.bank_threshold));

  result.cluster_ids.assign(nc, 0);
  for (const auto& [c, e] : reuse.pairs) result.cluster_ids[c] = bank_ids[e];
  for (int c = 0; c < nc; ++c) {
    if (result.cluster_ids[c] == 0) result.cluster_ids[c] = result.bank.mint();
  }
  for (int c = 0; c < nc; ++c) {
    std::vector<std::vector<double>> members;
    std::vector<std::pair<int, int>> where;
    for (int m : groups[c]) {
      members.push_back(per_camera[nodes[m].camera][nodes[m].index].agnostic);
      where.emplace_back(nodes[m].camera, nodes[m].index);
    }
    result.bank.write(result.cluster_ids[c], pooled_direction(members), frame);
    result.clusters.push_back(std::move(where));
  }
  return result;
}

std::vector<std::vector<int>> resolve_conflicts(std::vector<std::vector<ViewTracklet>>& per_camera,
                                                const CrossViewResult& association) {
  std::vector<std::vector<int>> ids(per_camera.size());
  for (std::size_t v = 0; v < per_camera.size(); ++v) ids[v].assign(per_camera[v].size(), 0);
  for (std::size_t c = 0; c < association.clusters.size(); ++c) {
    for (const auto& [cam, idx] : association.clusters[c]) {
      per_camera[cam][idx].global_id = association.cluster_ids[c];
      ids[cam][idx] = association.cluster_ids[c];
    }
  }
  return ids;
}

}  // namespace mvtrack
