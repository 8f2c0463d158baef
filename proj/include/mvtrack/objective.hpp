#pragma once

#include "mvtrack/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mvtrack {

// Masked / visible patch indices shared by every detection of one timestep.
struct MaskPlan {
  PatchGrid grid;
  double rho = 0.0;
  std::vector<int> masked;   // sorted
  std::vector<int> visible;  // sorted complement

  int visible_count() const { return static_cast<int>(visible.size()); }
  bool is_masked(int patch) const;
};

// Number of masked patches: round(rho * M), halves rounding up, never all of M.
int masked_patch_count(const PatchGrid& grid, double rho);

// Uniform choice without replacement, a pure function of (frame, seed).
MaskPlan sample_shared_mask(const PatchGrid& grid, double rho, std::int64_t frame,
                            std::uint64_t seed);

// Columns [0, E/2) are view-agnostic, [E/2, E) view-specific.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split_features(const Eigen::MatrixXd& features);

// Normalized mutual information between the per-row means of two batches,
// each quantized into `bins` equal-width bins over its own min-max range.
// MI / sqrt(H(X) H(Y)); 0 when either entropy vanishes.
double nmi_loss(const Eigen::MatrixXd& agnostic, const Eigen::MatrixXd& specific, int bins = 8);
double nmi_scalar(std::span<const double> x, std::span<const double> y, int bins = 8);

double smooth_l1(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);
// d smooth_l1 / d pred.
Eigen::MatrixXd smooth_l1_grad(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

// Mean squared error over the masked patches only.
double masked_mse(const PatchTensor& recon, const PatchTensor& original, const MaskPlan& plan);
// `predicted` holds one row per masked patch, in plan.masked order.
double masked_mse(const Eigen::MatrixXd& predicted, const PatchTensor& original,
                  const MaskPlan& plan);

struct LossWeights {
  double sep = 1.0;
  double distill = 1.0;
  double recon = 1.0;
};

struct LossReport {
  double sep = 0.0;
  double distill = 0.0;
  double recon = 0.0;
  double total = 0.0;
  LossWeights weights;
};

LossReport total_loss(double sep, double distill, double recon, const LossWeights& weights = {});

}  // namespace mvtrack
