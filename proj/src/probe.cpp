#include "mvtrack/error.hpp"
#include "mvtrack/random.hpp"
#include "mvtrack/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>

namespace mvtrack {

std::vector<const Detection*> balanced_probe_set(const Scene& scene) {
  std::set<int> cameras;
  std::map<int, std::map<int, std::vector<const Detection*>>> by_identity;  // label -> camera -> dets
  for (const auto& f : scene.frames) {
    for (const auto& cam : f.cameras) {
      for (const auto& d : cam) {
        cameras.insert(d.camera);
        if (d.label > 0) by_identity[d.label][d.camera].push_back(&d);
      }
    }
  }
  std::vector<const Detection*> out;
  for (const auto& [label, per_camera] : by_identity) {
    if (per_camera.size() != cameras.size()) continue;
    std::size_t k = SIZE_MAX;
    for (const auto& [cam, dets] : per_camera) k = std::min(k, dets.size());
    for (const auto& [cam, dets] : per_camera) {
      for (std::size_t j = 0; j < k; ++j) out.push_back(dets[j * dets.size() / k]);
    }
  }
  return out;
}

double camera_probe(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                    double held_out_fraction, std::uint64_t seed) {
  if (features.size() != labels.size()) throw InvalidArgument("camera_probe: one label per sample");
  if (!(held_out_fraction > 0.0 && held_out_fraction < 1.0)) {
    throw InvalidArgument("held-out fraction must lie in (0, 1)");
  }
  if (features.empty()) throw InvalidArgument("camera_probe: no samples");
  const std::size_t dim = features.front().size();
  for (const auto& f : features) {
    if (f.size() != dim) throw InvalidArgument("camera_probe: inconsistent feature sizes");
  }
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));
  if (by_class.size() < 2) throw InvalidArgument("camera_probe needs at least two classes");
  for (const auto& [label, members] : by_class) {
    if (members.size() < 10) throw InvalidArgument("camera_probe needs >= 10 samples per class");
  }

  // Stratified split: each class keeps the same held-out share.
  Rng rng(derive_seed(seed, 0x70726f6265ULL));
  std::vector<int> train_idx, test_idx, train_y, test_y;
  int k = 0;
  for (auto& [label, members] : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    const auto held = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::floor(held_out_fraction * members.size() + 0.5)), 1, members.size() - 1);
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < held ? test_idx : train_idx).push_back(members[i]);
      (i < held ? test_y : train_y).push_back(k);
    }
    ++k;
  }
  const int classes = k;
  const auto d = static_cast<Eigen::Index>(dim);

  auto matrix = [&](const std::vector<int>& idx) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), d);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (Eigen::Index c = 0; c < d; ++c) x(static_cast<Eigen::Index>(r), c) = features[idx[r]][c];
    }
    return x;
  };
  Eigen::MatrixXd x_train = matrix(train_idx);
  Eigen::MatrixXd x_test = matrix(test_idx);
  // Standardize with training statistics.
  const Eigen::RowVectorXd mean = x_train.colwise().mean();
  Eigen::RowVectorXd sd = ((x_train.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index c = 0; c < d; ++c) sd(c) = sd(c) > 1e-12 ? sd(c) : 1.0;
  x_train = ((x_train.rowwise() - mean).array().rowwise() / sd.array()).matrix();
  x_test = ((x_test.rowwise() - mean).array().rowwise() / sd.array()).matrix();

  const auto n = x_train.rows();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) y(i, train_y[i]) = 1.0;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, classes);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(classes);
  constexpr int kEpochs = 200;
  constexpr double kLr = 0.1;
  for (int epoch = 0; epoch < kEpochs; ++epoch) {
    Eigen::MatrixXd logits = (x_train * w).rowwise() + b;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = logits.row(i).maxCoeff();
      logits.row(i) = (logits.row(i).array() - top).exp().matrix();
      logits.row(i) /= logits.row(i).sum();
    }
    const Eigen::MatrixXd err = (logits - y) / static_cast<double>(n);
    w -= kLr * x_train.transpose() * err;
    b -= kLr * err.colwise().sum();
  }

  const Eigen::MatrixXd scores = (x_test * w).rowwise() + b;
  int correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < classes; ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    correct += best == test_y[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

}  // namespace mvtrack
