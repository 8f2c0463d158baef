#include "mvtrack/error.hpp"
#include "mvtrack/random.hpp"
#include "mvtrack/toy_model.hpp"

#include <cmath>
#include <string>

namespace mvtrack {

namespace {

struct TrainFrames {
  std::vector<int> frames;
  std::vector<std::vector<const Detection*>> dets;
  PatchGrid grid;
  int patch_dim = 0;
};

TrainFrames collect(const Scene& scene) {
  scene.validate();
  if (scene.num_cameras < 2) throw InvalidArgument("training needs at least two cameras");
  TrainFrames out;
  bool first = true;
  for (const auto& f : scene.frames) {
    std::vector<const Detection*> dets;
    for (const auto& cam : f.cameras) {
      for (const auto& d : cam) {
        if (!d.crop) throw InvalidArgument("training needs a crop for every detection");
        if (first) {
          out.grid = d.crop->grid;
          out.patch_dim = static_cast<int>(d.crop->values.cols());
          first = false;
        } else if (!(d.crop->grid == out.grid) || d.crop->values.cols() != out.patch_dim) {
          throw InvalidArgument("all crops must share one patch grid");
        }
        dets.push_back(&d);
      }
    }
    if (dets.empty()) continue;
    out.frames.push_back(f.frame);
    out.dets.push_back(std::move(dets));
  }
  if (out.frames.empty()) throw InvalidArgument("training scene has no detections");
  return out;
}

}  // namespace

TrainResult train(const Scene& scene, const ToyTrainConfig& cfg) {
  cfg.validate();
  const TrainFrames data = collect(scene);
  return train(scene, cfg, ToyEncoderParams::init(data.patch_dim, cfg));
}

TrainResult train(const Scene& scene, const ToyTrainConfig& cfg, ToyEncoderParams start) {
  cfg.validate();
  const TrainFrames data = collect(scene);
  if (start.patch_dim() != data.patch_dim || start.embed_dim() != cfg.embed_dim) {
    throw InvalidArgument("initial parameters do not match the scene and configuration");
  }
  const Eigen::MatrixXd teacher = teacher_projection(data.patch_dim, cfg.teacher_dim, cfg.teacher_seed);
  TrainResult result;
  result.params = std::move(start);
  ToyEncoderParams& params = result.params;

  // One mask per frame for the whole run: masks are a function of (frame, seed).
  const std::uint64_t mask_seed = derive_seed(cfg.seed, 0x6d61736bULL);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossReport mean;
    mean.weights = cfg.weights;
    ToyEncoderParams acc = ToyEncoderParams::zeros_like(params);
    int pending = 0;
    auto apply = [&] {
      const double step = cfg.lr / pending;
      std::vector<Eigen::MatrixXd*> dst;
      std::vector<const Eigen::MatrixXd*> src;
      params.for_each([&](const char*, Eigen::MatrixXd& w) { dst.push_back(&w); });
      acc.for_each([&](const char*, Eigen::MatrixXd& w) { src.push_back(&w); });
      for (std::size_t b = 0; b < dst.size(); ++b) *dst[b] -= step * *src[b];
      acc.for_each([](const char*, Eigen::MatrixXd& w) { w.setZero(); });
      pending = 0;
      if (!params.all_finite()) {
        throw NumericError("non-finite parameters after update in epoch " + std::to_string(epoch));
      }
    };
    for (std::size_t t = 0; t < data.frames.size(); ++t) {
      const MaskPlan plan = sample_shared_mask(data.grid, cfg.rho, data.frames[t], mask_seed);
      FrameLoss fl;
      try {
        fl = frame_loss(data.dets[t], plan, params, teacher, cfg, true);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", frame " +
                           std::to_string(data.frames[t]));
      }
      mean.sep += fl.report.sep;
      mean.distill += fl.report.distill;
      mean.recon += fl.report.recon;
      std::vector<Eigen::MatrixXd*> dst;
      std::vector<const Eigen::MatrixXd*> src;
      acc.for_each([&](const char*, Eigen::MatrixXd& w) { dst.push_back(&w); });
      fl.grad.for_each([&](const char*, Eigen::MatrixXd& w) { src.push_back(&w); });
      for (std::size_t b = 0; b < dst.size(); ++b) *dst[b] += *src[b];
      if (++pending == cfg.batch_frames) apply();
    }
    if (pending > 0) apply();
    const double count = static_cast<double>(data.frames.size());
    result.curve.push_back(total_loss(mean.sep / count, mean.distill / count, mean.recon / count, cfg.weights));
  }
  return result;
}

}  // namespace mvtrack
