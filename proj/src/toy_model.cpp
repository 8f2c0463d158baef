#include "mvtrack/toy_model.hpp"

#include "mvtrack/error.hpp"
#include "mvtrack/random.hpp"

#include <cmath>
#include <numbers>

namespace mvtrack {

void ToyTrainConfig::validate() const {
  if (embed_dim < 2 || embed_dim % 2 != 0) throw InvalidArgument("embedding dimension must be even and >= 2");
  if (distill_dim < 1 || teacher_dim < 1) throw InvalidArgument("head dimensions must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("mask ratio must lie in [0, 1)");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("learning rate must be finite and >= 0");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batch_frames < 1) throw InvalidArgument("batch_frames must be >= 1");
  if (nmi_bins < 2) throw InvalidArgument("nmi_bins must be >= 2");
  if (!(encoder_init >= 0.0)) throw InvalidArgument("encoder_init must be >= 0");
}

namespace {

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, stddev);
  }
  return m;
}

void require_crop(const Detection& det) {
  if (!det.crop) throw InvalidArgument("detection has no crop");
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd a(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double top = s.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (s.row(i).array() - top).exp().matrix();
    a.row(i) = e / e.sum();
  }
  return a;
}

}  // namespace

ToyEncoderParams ToyEncoderParams::init(int patch_dim, const ToyTrainConfig& cfg) {
  cfg.validate();
  if (patch_dim < 1) throw InvalidArgument("patch dimension must be positive");
  Rng rng(derive_seed(cfg.seed, 0x696e6974ULL));
  const int h = cfg.half();
  const double sh = 1.0 / std::sqrt(static_cast<double>(h));
  const int rec_in = h + cfg.distill_dim + positional_dim();
  ToyEncoderParams p;
  p.w_enc = gaussian(rng, patch_dim, cfg.embed_dim, cfg.encoder_init);
  p.w_q = gaussian(rng, h, h, sh);
  p.w_k = gaussian(rng, h, h, sh);
  p.w_v = gaussian(rng, h, h, sh);
  p.w_o = gaussian(rng, h, h, sh);
  p.mask_token = gaussian(rng, 1, h, 0.02);
  p.w_dist = gaussian(rng, h, cfg.distill_dim, sh);
  p.w_rec = gaussian(rng, rec_in, patch_dim, 1.0 / std::sqrt(static_cast<double>(rec_in)));
  p.w_proj = gaussian(rng, cfg.distill_dim, cfg.teacher_dim, 1.0 / std::sqrt(static_cast<double>(cfg.distill_dim)));
  p.pixel_center = cfg.pixel_center;
  return p;
}

ToyEncoderParams ToyEncoderParams::zeros_like(const ToyEncoderParams& p) {
  ToyEncoderParams z = p;
  z.for_each([](const char*, Eigen::MatrixXd& m) { m.setZero(); });
  return z;
}

bool ToyEncoderParams::all_finite() const {
  bool ok = true;
  for_each([&](const char*, const Eigen::MatrixXd& m) { ok = ok && m.allFinite(); });
  return ok;
}

EncodedDetection encode(const Detection& det, const MaskPlan& plan, const ToyEncoderParams& params) {
  require_crop(det);
  const PatchTensor& crop = *det.crop;
  if (!(crop.grid == plan.grid)) throw InvalidArgument("mask plan does not match the crop grid");
  if (crop.values.cols() != params.patch_dim()) throw InvalidArgument("crop patch size does not match the encoder");
  const Eigen::MatrixXd features =
      (gather_rows(crop.values, plan.visible).array() - params.pixel_center).matrix() * params.w_enc;
  auto [fa, fs] = split_features(features);
  EncodedDetection out;
  const Eigen::RowVectorXd ga = fa.colwise().mean();
  const Eigen::RowVectorXd gs = fs.colwise().mean();
  out.pooled.agnostic.assign(ga.data(), ga.data() + ga.size());
  out.pooled.specific.assign(gs.data(), gs.data() + gs.size());
  out.agnostic = std::move(fa);
  out.specific = std::move(fs);
  return out;
}

Eigen::MatrixXd teacher_projection(int patch_dim, int teacher_dim, std::uint64_t teacher_seed) {
  if (patch_dim < 1 || teacher_dim < 1) throw InvalidArgument("teacher dimensions must be positive");
  Rng rng(derive_seed(teacher_seed, 0x7465616368ULL));
  const int big = std::max(patch_dim, teacher_dim);
  const int small = std::min(patch_dim, teacher_dim);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, big, small, 1.0));
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // q has orthonormal columns; transpose when the teacher is wider than a patch.
  return patch_dim >= teacher_dim ? q : Eigen::MatrixXd(q.transpose());
}

Eigen::MatrixXd teacher_features(const Detection& det, const Eigen::MatrixXd& projection, double pixel_center) {
  require_crop(det);
  if (det.crop->values.cols() != projection.rows()) throw InvalidArgument("teacher projection size mismatch");
  return (det.crop->values.array() - pixel_center).matrix() * projection;
}

Eigen::MatrixXd cross_view_mix(const Eigen::MatrixXd& pooled, const ToyEncoderParams& params) {
  if (pooled.rows() == 0) throw InvalidArgument("cross_view_mix needs at least one detection");
  const double scale = 1.0 / std::sqrt(static_cast<double>(pooled.cols()));
  const Eigen::MatrixXd q = pooled * params.w_q;
  const Eigen::MatrixXd k = pooled * params.w_k;
  const Eigen::MatrixXd v = pooled * params.w_v;
  const Eigen::MatrixXd a = row_softmax(q * k.transpose() * scale);
  return a * v * params.w_o;
}

int positional_dim() { return 8; }

Eigen::RowVectorXd positional_code(const PatchGrid& grid, int patch) {
  const int r = patch / grid.cols();
  const int c = patch % grid.cols();
  const double ur = (r + 0.5) / grid.rows();
  const double uc = (c + 0.5) / grid.cols();
  Eigen::RowVectorXd code(positional_dim());
  for (int f = 0; f < 2; ++f) {
    const double w = std::numbers::pi * (f + 1);
    code(4 * f + 0) = std::sin(w * ur);
    code(4 * f + 1) = std::cos(w * ur);
    code(4 * f + 2) = std::sin(w * uc);
    code(4 * f + 3) = std::cos(w * uc);
  }
  return code;
}

namespace {

Eigen::MatrixXd recon_inputs(const Eigen::RowVectorXd& g_hat, const Eigen::MatrixXd& f_hat_s, const MaskPlan& plan) {
  const Eigen::Index h = g_hat.size();
  const Eigen::Index ed = f_hat_s.cols();
  Eigen::MatrixXd in(static_cast<Eigen::Index>(plan.masked.size()), h + ed + positional_dim());
  for (std::size_t j = 0; j < plan.masked.size(); ++j) {
    const int p = plan.masked[j];
    const auto row = static_cast<Eigen::Index>(j);
    in.row(row).head(h) = g_hat;
    in.row(row).segment(h, ed) = f_hat_s.row(p);
    in.row(row).tail(positional_dim()) = positional_code(plan.grid, p);
  }
  return in;
}

}  // namespace

Eigen::MatrixXd reconstruct(const Eigen::RowVectorXd& g_hat, const Eigen::MatrixXd& f_hat_s, const MaskPlan& plan,
                            const ToyEncoderParams& params) {
  if (f_hat_s.rows() != plan.grid.patch_count()) throw InvalidArgument("f_hat_s needs one row per patch");
  const Eigen::MatrixXd in = recon_inputs(g_hat, f_hat_s, plan);
  if (in.cols() != params.w_rec.rows()) throw InvalidArgument("reconstruction head size mismatch");
  return in * params.w_rec;
}

Eigen::MatrixXd normalized_targets(const Eigen::MatrixXd& values) {
  Eigen::MatrixXd out(values.rows(), values.cols());
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    const double mean = values.row(r).mean();
    const double var = (values.row(r).array() - mean).square().mean();
    out.row(r) = (values.row(r).array() - mean) / std::sqrt(var + 1e-6);
  }
  return out;
}

FrameLoss frame_loss(std::span<const Detection* const> dets, const MaskPlan& plan, const ToyEncoderParams& params,
                     const Eigen::MatrixXd& teacher, const ToyTrainConfig& cfg, bool with_gradient) {
  const auto n = static_cast<Eigen::Index>(dets.size());
  if (n == 0) throw InvalidArgument("frame_loss needs at least one detection");
  const Eigen::Index h = params.w_q.rows();
  const Eigen::Index ed = params.w_dist.cols();
  const int m = plan.grid.patch_count();
  const auto mv = static_cast<Eigen::Index>(plan.visible.size());
  const auto mm = static_cast<Eigen::Index>(plan.masked.size());

  std::vector<Eigen::MatrixXd> visible(n), fs(n), u(n), d(n), z(n), tf(n), rin(n), pred(n), target(n);
  Eigen::MatrixXd g(n, h), s_bar(n, h);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Detection& det = *dets[i];
    require_crop(det);
    if (!(det.crop->grid == plan.grid)) throw InvalidArgument("mask plan does not match the crop grid");
    visible[i] = (gather_rows(det.crop->values, plan.visible).array() - params.pixel_center).matrix();
    const Eigen::MatrixXd f = visible[i] * params.w_enc;
    g.row(i) = f.leftCols(h).colwise().mean();
    fs[i] = f.rightCols(h);
    s_bar.row(i) = fs[i].colwise().mean();
    u[i].resize(m, h);
    for (Eigen::Index j = 0; j < mv; ++j) u[i].row(plan.visible[j]) = fs[i].row(j);
    for (Eigen::Index j = 0; j < mm; ++j) u[i].row(plan.masked[j]) = params.mask_token;
    d[i] = u[i] * params.w_dist;
    z[i] = d[i] * params.w_proj;
    tf[i] = teacher_features(det, teacher, params.pixel_center);
    const Eigen::MatrixXd all_targets = cfg.normalize_targets ? normalized_targets(det.crop->values) : det.crop->values;
    target[i] = gather_rows(all_targets, plan.masked);
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(h));
  const Eigen::MatrixXd q = g * params.w_q;
  const Eigen::MatrixXd k = g * params.w_k;
  const Eigen::MatrixXd v = g * params.w_v;
  const Eigen::MatrixXd a = row_softmax(q * k.transpose() * scale);
  const Eigen::MatrixXd c = a * v;
  const Eigen::MatrixXd g_hat = c * params.w_o;

  double distill = 0.0;
  double recon_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    distill += smooth_l1(z[i], tf[i]);
    if (mm > 0) {
      rin[i] = recon_inputs(g_hat.row(i), d[i], plan);
      pred[i] = rin[i] * params.w_rec;
      recon_sum += (pred[i] - target[i]).squaredNorm();
    }
  }
  distill /= static_cast<double>(n);
  const double recon_count = static_cast<double>(n * mm * params.w_rec.cols());
  const double recon = mm > 0 ? recon_sum / recon_count : 0.0;
  const double sep = n >= 2 ? nmi_loss(g, s_bar, cfg.nmi_bins) : 0.0;

  if (!std::isfinite(sep)) throw NumericError("non-finite separation loss");
  if (!std::isfinite(distill)) throw NumericError("non-finite distillation loss");
  if (!std::isfinite(recon)) throw NumericError("non-finite reconstruction loss");

  FrameLoss out;
  out.report = total_loss(sep, distill, recon, cfg.weights);
  if (!with_gradient) return out;

  ToyEncoderParams& gr = out.grad;
  gr = ToyEncoderParams::zeros_like(params);
  Eigen::MatrixXd d_g_hat = Eigen::MatrixXd::Zero(n, h);
  std::vector<Eigen::MatrixXd> d_d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::MatrixXd d_z = cfg.weights.distill * smooth_l1_grad(z[i], tf[i]) / static_cast<double>(n);
    gr.w_proj += d[i].transpose() * d_z;
    d_d[i] = d_z * params.w_proj.transpose();
    if (mm > 0) {
      const Eigen::MatrixXd d_pred = (cfg.weights.recon * 2.0 / recon_count) * (pred[i] - target[i]);
      gr.w_rec += rin[i].transpose() * d_pred;
      const Eigen::MatrixXd d_in = d_pred * params.w_rec.transpose();
      d_g_hat.row(i) += d_in.leftCols(h).colwise().sum();
      for (Eigen::Index j = 0; j < mm; ++j) d_d[i].row(plan.masked[j]) += d_in.row(j).segment(h, ed);
    }
  }

  // Attention backward.
  gr.w_o = c.transpose() * d_g_hat;
  const Eigen::MatrixXd d_c = d_g_hat * params.w_o.transpose();
  const Eigen::MatrixXd d_a = d_c * v.transpose();
  const Eigen::MatrixXd d_v = a.transpose() * d_c;
  const Eigen::VectorXd inner = (a.array() * d_a.array()).rowwise().sum();
  const Eigen::MatrixXd d_s = (a.array() * (d_a.colwise() - inner).array()).matrix() * scale;
  const Eigen::MatrixXd d_q = d_s * k;
  const Eigen::MatrixXd d_k = d_s.transpose() * q;
  gr.w_q = g.transpose() * d_q;
  gr.w_k = g.transpose() * d_k;
  gr.w_v = g.transpose() * d_v;
  const Eigen::MatrixXd d_g = d_q * params.w_q.transpose() + d_k * params.w_k.transpose() + d_v * params.w_v.transpose();

  for (Eigen::Index i = 0; i < n; ++i) {
    gr.w_dist += u[i].transpose() * d_d[i];
    const Eigen::MatrixXd d_u = d_d[i] * params.w_dist.transpose();
    Eigen::MatrixXd d_f(mv, 2 * h);
    for (Eigen::Index j = 0; j < mv; ++j) {
      d_f.row(j).head(h) = d_g.row(i) / static_cast<double>(mv);
      d_f.row(j).tail(h) = d_u.row(plan.visible[j]);
    }
    for (Eigen::Index j = 0; j < mm; ++j) gr.mask_token += d_u.row(plan.masked[j]);
    gr.w_enc += visible[i].transpose() * d_f;
  }
  return out;
}

void embed_scene(Scene& scene, const ToyEncoderParams& params) {
  for (auto& f : scene.frames) {
    for (auto& cam : f.cameras) {
      for (auto& det : cam) {
        if (!det.crop) continue;
        MaskPlan plan = sample_shared_mask(det.crop->grid, 0.0, det.frame, 0);
        det.embedding = encode(det, plan, params).pooled;
      }
    }
  }
}

}  // namespace mvtrack
