#pragma once

#include "mvtrack/objective.hpp"
#include "mvtrack/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace mvtrack {

// Full-scale encoder sizes, kept for reference only.
inline constexpr int kReferenceEmbedDim = 768;
inline constexpr int kReferenceDistillDim = 512;
inline constexpr int kReferenceTeacherDim = 1024;

struct ToyTrainConfig {
  int embed_dim = 32;    // E, split into two halves
  int distill_dim = 16;  // Ed
  int teacher_dim = 16;  // Et
  double rho = 0.75;
  double lr = 1.0;
  int epochs = 50;
  int batch_frames = 1;
  std::uint64_t seed = 7;
  std::uint64_t teacher_seed = 11;
  LossWeights weights;
  bool normalize_targets = true;  // per-patch normalized reconstruction targets
  double encoder_init = 0.01;
  double pixel_center = 0.5;  // subtracted from pixels before encoder and teacher
  int nmi_bins = 8;

  int half() const { return embed_dim / 2; }
  void validate() const;
};

struct ToyEncoderParams {
  Eigen::MatrixXd w_enc;                  // P x E
  Eigen::MatrixXd w_q, w_k, w_v, w_o;     // E/2 x E/2
  Eigen::MatrixXd mask_token;             // 1 x E/2
  Eigen::MatrixXd w_dist;                 // E/2 x Ed
  Eigen::MatrixXd w_rec;                  // (E/2 + Ed + pos) x P
  Eigen::MatrixXd w_proj;                 // Ed x Et
  double pixel_center = 0.0;              // fixed input shift, not trained

  static ToyEncoderParams init(int patch_dim, const ToyTrainConfig& cfg);
  static ToyEncoderParams zeros_like(const ToyEncoderParams& p);

  // Visits every parameter block in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    f("w_enc", w_enc);
    f("w_q", w_q);
    f("w_k", w_k);
    f("w_v", w_v);
    f("w_o", w_o);
    f("mask_token", mask_token);
    f("w_dist", w_dist);
    f("w_rec", w_rec);
    f("w_proj", w_proj);
  }
  template <typename F>
  void for_each(F&& f) const {
    f("w_enc", w_enc);
    f("w_q", w_q);
    f("w_k", w_k);
    f("w_v", w_v);
    f("w_o", w_o);
    f("mask_token", mask_token);
    f("w_dist", w_dist);
    f("w_rec", w_rec);
    f("w_proj", w_proj);
  }

  bool all_finite() const;
  int embed_dim() const { return static_cast<int>(w_enc.cols()); }
  int patch_dim() const { return static_cast<int>(w_enc.rows()); }
};

struct EncodedDetection {
  EmbeddingPair pooled;           // (g_a, mean f_s) over visible patches
  Eigen::MatrixXd agnostic;       // MVis x E/2
  Eigen::MatrixXd specific;       // MVis x E/2
};

EncodedDetection encode(const Detection& det, const MaskPlan& plan, const ToyEncoderParams& params);

// Fixed random projection with orthonormal columns (rows when Et > P).
Eigen::MatrixXd teacher_projection(int patch_dim, int teacher_dim, std::uint64_t teacher_seed);
Eigen::MatrixXd teacher_features(const Detection& det, const Eigen::MatrixXd& projection,
                                 double pixel_center = 0.0);

// One attention layer over every detection of a timestep; rows in, rows out.
Eigen::MatrixXd cross_view_mix(const Eigen::MatrixXd& pooled, const ToyEncoderParams& params);

// Sine/cosine code of a patch's (row, col) position.
int positional_dim();
Eigen::RowVectorXd positional_code(const PatchGrid& grid, int patch);

// One row per masked patch, in plan.masked order.
Eigen::MatrixXd reconstruct(const Eigen::RowVectorXd& g_hat, const Eigen::MatrixXd& f_hat_s,
                            const MaskPlan& plan, const ToyEncoderParams& params);

// Per-patch standardized pixel values (zero mean, unit variance per patch).
Eigen::MatrixXd normalized_targets(const Eigen::MatrixXd& values);

// Loss on one timestep's detections with gradients of the differentiable
// terms. The separation term is a histogram statistic and contributes value only.
struct FrameLoss {
  LossReport report;
  ToyEncoderParams grad;
};

FrameLoss frame_loss(std::span<const Detection* const> dets, const MaskPlan& plan,
                     const ToyEncoderParams& params, const Eigen::MatrixXd& teacher,
                     const ToyTrainConfig& cfg, bool with_gradient = true);

struct TrainResult {
  ToyEncoderParams params;
  std::vector<LossReport> curve;  // mean per-frame loss of every epoch
};

// Plain gradient descent, one step per `batch_frames` timesteps.
TrainResult train(const Scene& scene, const ToyTrainConfig& cfg);
TrainResult train(const Scene& scene, const ToyTrainConfig& cfg, ToyEncoderParams start);

// Replaces every crop-bearing detection's embedding by the unmasked encoding.
void embed_scene(Scene& scene, const ToyEncoderParams& params);

// Detections picked so that every labeled identity contributes the same
// number of samples to each camera that has detections; identity then carries
// no camera information. Frame-ordered picks, evenly spaced.
std::vector<const Detection*> balanced_probe_set(const Scene& scene);

// Held-out accuracy of a multinomial logistic regression predicting `labels`.
double camera_probe(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                    double held_out_fraction = 0.3, std::uint64_t seed = 7);

}  // namespace mvtrack
