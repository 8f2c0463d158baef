#include "mvtrack/objective.hpp"

#include "mvtrack/error.hpp"
#include "mvtrack/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mvtrack {

bool MaskPlan::is_masked(int patch) const {
  return std::binary_search(masked.begin(), masked.end(), patch);
}

int masked_patch_count(const PatchGrid& grid, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("mask ratio must lie in [0, 1)");
  const int m = grid.patch_count();
  const int count = static_cast<int>(std::floor(rho * m + 0.5));
  return std::min(count, m - 1);
}

MaskPlan sample_shared_mask(const PatchGrid& grid, double rho, std::int64_t frame,
                            std::uint64_t seed) {
  const int m = grid.patch_count();
  const int count = masked_patch_count(grid, rho);
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(frame), 0x6d61736bULL));

  // Partial Fisher-Yates: the first `count` slots become the masked set.
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - i)));
    std::swap(order[i], order[j]);
  }
  MaskPlan plan;
  plan.grid = grid;
  plan.rho = rho;
  plan.masked.assign(order.begin(), order.begin() + count);
  plan.visible.assign(order.begin() + count, order.end());
  std::sort(plan.masked.begin(), plan.masked.end());
  std::sort(plan.visible.begin(), plan.visible.end());
  return plan;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split_features(const Eigen::MatrixXd& features) {
  if (features.cols() % 2 != 0) {
    throw InvalidArgument("feature width must be even, got " + std::to_string(features.cols()));
  }
  const Eigen::Index half = features.cols() / 2;
  return {features.leftCols(half), features.rightCols(half)};
}

namespace {

std::vector<int> quantize(std::span<const double> x, int bins) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<int> q(x.size(), 0);
  if (hi <= lo) return q;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int b = static_cast<int>(std::floor((x[i] - lo) / (hi - lo) * bins));
    q[i] = std::clamp(b, 0, bins - 1);
  }
  return q;
}

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

}  // namespace

double nmi_scalar(std::span<const double> x, std::span<const double> y, int bins) {
  if (x.size() != y.size()) {
    throw InvalidArgument("nmi_loss: batch sizes differ (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw InvalidArgument("nmi_loss needs at least two samples");
  if (bins < 2) throw InvalidArgument("nmi_loss needs at least two bins");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw InvalidArgument("nmi_loss: non-finite input");
    }
  }

  const std::vector<int> qx = quantize(x, bins);
  const std::vector<int> qy = quantize(y, bins);
  const double n = static_cast<double>(x.size());
  std::vector<double> px(bins, 0.0), py(bins, 0.0), pxy(static_cast<std::size_t>(bins * bins), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    px[qx[i]] += 1.0;
    py[qy[i]] += 1.0;
    pxy[static_cast<std::size_t>(qx[i] * bins + qy[i])] += 1.0;
  }
  const double hx = entropy(px, n);
  const double hy = entropy(py, n);
  if (hx <= 0.0 || hy <= 0.0) return 0.0;
  const double mi = hx + hy - entropy(pxy, n);
  return std::clamp(mi / std::sqrt(hx * hy), 0.0, 1.0);
}

double nmi_loss(const Eigen::MatrixXd& agnostic, const Eigen::MatrixXd& specific, int bins) {
  if (agnostic.rows() != specific.rows()) {
    throw InvalidArgument("nmi_loss: batch sizes differ");
  }
  const Eigen::VectorXd x = agnostic.rowwise().mean();
  const Eigen::VectorXd y = specific.rowwise().mean();
  return nmi_scalar(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                    std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), bins);
}

double smooth_l1(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw InvalidArgument("smooth_l1: shape mismatch");
  }
  if (pred.size() == 0) return 0.0;
  const Eigen::ArrayXXd d = (pred - target).array().abs();
  const Eigen::ArrayXXd per = (d < 1.0).select(0.5 * d.square(), d - 0.5);
  return per.sum() / static_cast<double>(pred.size());
}

Eigen::MatrixXd smooth_l1_grad(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw InvalidArgument("smooth_l1: shape mismatch");
  }
  const Eigen::ArrayXXd d = (pred - target).array();
  const Eigen::ArrayXXd g = (d.abs() < 1.0).select(d, d.sign());
  return (g / static_cast<double>(std::max<Eigen::Index>(pred.size(), 1))).matrix();
}

double masked_mse(const Eigen::MatrixXd& predicted, const PatchTensor& original,
                  const MaskPlan& plan) {
  if (!(original.grid == plan.grid)) throw InvalidArgument("masked_mse: grid mismatch");
  if (predicted.rows() != static_cast<Eigen::Index>(plan.masked.size()) ||
      predicted.cols() != original.values.cols()) {
    throw InvalidArgument("masked_mse: prediction shape does not match the mask plan");
  }
  if (plan.masked.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < plan.masked.size(); ++k) {
    sum += (predicted.row(static_cast<Eigen::Index>(k)) - original.values.row(plan.masked[k]))
               .squaredNorm();
  }
  return sum / static_cast<double>(predicted.size());
}

double masked_mse(const PatchTensor& recon, const PatchTensor& original, const MaskPlan& plan) {
  if (!(recon.grid == plan.grid) || !(original.grid == plan.grid) ||
      recon.values.rows() != original.values.rows() ||
      recon.values.cols() != original.values.cols()) {
    throw InvalidArgument("masked_mse: grid mismatch");
  }
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(plan.masked.size()), recon.values.cols());
  for (std::size_t k = 0; k < plan.masked.size(); ++k) {
    rows.row(static_cast<Eigen::Index>(k)) = recon.values.row(plan.masked[k]);
  }
  return masked_mse(rows, original, plan);
}

LossReport total_loss(double sep, double distill, double recon, const LossWeights& weights) {
  for (double v : {sep, distill, recon}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument("loss components must be finite and non-negative");
    }
  }
  LossReport r;
  r.sep = sep;
  r.distill = distill;
  r.recon = recon;
  r.weights = weights;
  r.total = weights.sep * sep + weights.distill * distill + weights.recon * recon;
  return r;
}

}  // namespace mvtrack
