#include "mvtrack/synth.hpp"

#include "mvtrack/error.hpp"
#include "mvtrack/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace mvtrack {

void SynthConfig::validate() const {
  if (num_cameras < 1) throw InvalidArgument("need at least one camera");
  if (num_identities < 0 || num_frames < 0) throw InvalidArgument("negative scenario size");
  if (identity_dim < 1) throw InvalidArgument("identity_dim must be positive");
  if (!(miss_rate >= 0.0 && miss_rate <= 1.0)) throw InvalidArgument("miss_rate must lie in [0, 1]");
  if (!(view_noise >= 0.0) || !(pixel_noise >= 0.0)) throw InvalidArgument("noise must be >= 0");
  if (orthogonal_latents && num_identities > identity_dim) {
    throw InvalidArgument("orthogonal latents need num_identities <= identity_dim");
  }
  if (!windows.empty()) {
    if (static_cast<int>(windows.size()) != num_cameras) {
      throw InvalidArgument("one window per camera is required");
    }
    bool overlap = num_cameras < 2;
    for (int u = 0; u < num_cameras; ++u) {
      if (!(windows[u].width() > 0.0 && windows[u].height() > 0.0)) {
        throw InvalidArgument("camera windows must have positive extent");
      }
      for (int v = u + 1; v < num_cameras; ++v) overlap = overlap || windows[u].intersects(windows[v]);
    }
    if (!overlap) throw InvalidArgument("at least one pair of camera windows must overlap");
  }
  if (!(window_side > 0.0 && window_side <= 1.0)) throw InvalidArgument("window_side must lie in (0, 1]");
  if (!(window_radius >= 0.0)) throw InvalidArgument("window_radius must be >= 0");
  if (with_crops) PatchGrid::make(crop_size, crop_size, crop_patch, crop_patch);
}

std::vector<ViewWindow> default_windows(int num_cameras, double plane_size, double side, double radius_fraction) {
  std::vector<ViewWindow> out;
  const double half = 0.5 * side * plane_size;
  const double radius = num_cameras > 1 ? radius_fraction * plane_size : 0.0;
  for (int v = 0; v < num_cameras; ++v) {
    const double angle = 2.0 * std::numbers::pi * v / std::max(num_cameras, 1);
    const double cx = 0.5 * plane_size + radius * std::cos(angle);
    const double cy = 0.5 * plane_size + radius * std::sin(angle);
    out.push_back(ViewWindow{cx - half, cy - half, cx + half, cy + half});
  }
  return out;
}

namespace {

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

struct Walker {
  double x, y, vx, vy;
  double width_scale, height_scale;
};

void reflect(double& p, double& v, double hi) {
  if (p < 0.0) {
    p = -p;
    v = -v;
  }
  if (p >= hi) {
    p = 2.0 * hi - p - 1e-9;
    v = -v;
  }
  p = std::clamp(p, 0.0, std::nextafter(hi, 0.0));
}

}  // namespace

Scenario generate(const SynthConfig& cfg) {
  cfg.validate();
  Scenario s;
  s.config = cfg;
  s.windows = cfg.windows.empty() ? default_windows(cfg.num_cameras, cfg.plane_size, cfg.window_side, cfg.window_radius)
                                     : cfg.windows;
  const int d = cfg.identity_dim;
  const int n = cfg.num_identities;
  const int cams = cfg.num_cameras;

  // Independent streams keep each factor stable when another one changes.
  Rng latent_rng(derive_seed(cfg.seed, 1));
  Rng view_rng(derive_seed(cfg.seed, 2));
  Rng motion_rng(derive_seed(cfg.seed, 3));
  Rng detect_rng(derive_seed(cfg.seed, 4));
  Rng crop_rng(derive_seed(cfg.seed, 5));

  if (cfg.orthogonal_latents) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(latent_rng, d, d));
    const Eigen::MatrixXd q = qr.householderQ();
    for (int i = 0; i < n; ++i) s.latents.push_back(q.col(i));
  } else {
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd z = gaussian_matrix(latent_rng, d, 1);
      s.latents.push_back(z.normalized());
    }
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (int v = 0; v < cams; ++v) {
    ViewTransform t;
    t.matrix = Eigen::MatrixXd::Identity(d, d) + cfg.view_mix * inv_sqrt_d * gaussian_matrix(view_rng, d, d);
    t.offset = cfg.view_bias * inv_sqrt_d * gaussian_matrix(view_rng, d, 1);
    s.views.push_back(std::move(t));
  }

  // Crop appearance: identity texture lives in the per-channel zero-mean
  // pixel pattern of a patch, the camera in a uniform brightness offset.
  const int pixels = cfg.crop_patch * cfg.crop_patch;
  const int patch_dim = pixels * 3;
  Eigen::MatrixXd texture = gaussian_matrix(view_rng, patch_dim, d) * inv_sqrt_d;
  for (int ch = 0; ch < 3; ++ch) {
    for (int c = 0; c < d; ++c) {
      double mean = 0.0;
      for (int k = 0; k < pixels; ++k) mean += texture(k * 3 + ch, c);
      mean /= pixels;
      for (int k = 0; k < pixels; ++k) texture(k * 3 + ch, c) -= mean;
    }
  }
  // Cameras differ in exposure: brightness offsets spread over [-shift, shift].
  for (int v = 0; v < cams; ++v) {
    const double o = cams > 1 ? cfg.camera_shift * (2.0 * v / (cams - 1) - 1.0) : 0.0;
    s.camera_colors.push_back(Eigen::Vector3d::Constant(o));
  }

  std::vector<Walker> walkers;
  for (int i = 0; i < n; ++i) {
    Walker w;
    w.x = motion_rng.uniform(0.1, 0.9) * cfg.plane_size;
    w.y = motion_rng.uniform(0.1, 0.9) * cfg.plane_size;
    const double heading = motion_rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double speed = cfg.speed * motion_rng.uniform(0.4, 1.0);
    w.vx = speed * std::cos(heading);
    w.vy = speed * std::sin(heading);
    w.width_scale = motion_rng.uniform(0.85, 1.15);
    w.height_scale = motion_rng.uniform(0.85, 1.15);
    walkers.push_back(w);
  }

  const PatchGrid grid = cfg.with_crops
                             ? PatchGrid::make(cfg.crop_size, cfg.crop_size, cfg.crop_patch, cfg.crop_patch)
                             : PatchGrid{};
  s.scene = Scene::empty(cams, 0, cfg.num_frames);
  for (int t = 0; t < cfg.num_frames; ++t) {
    if (t > 0) {
      for (auto& w : walkers) {
        w.vx += motion_rng.normal(0.0, 0.05 * cfg.speed);
        w.vy += motion_rng.normal(0.0, 0.05 * cfg.speed);
        const double sp = std::hypot(w.vx, w.vy);
        if (sp > 1.5 * cfg.speed) {
          w.vx *= 1.5 * cfg.speed / sp;
          w.vy *= 1.5 * cfg.speed / sp;
        }
        w.x += w.vx;
        w.y += w.vy;
        reflect(w.x, w.vx, cfg.plane_size);
        reflect(w.y, w.vy, cfg.plane_size);
      }
    }
    for (int v = 0; v < cams; ++v) {
      const ViewWindow& win = s.windows[v];
      const double sx = cfg.image_width / win.width();
      const double sy = cfg.image_height / win.height();
      for (int i = 0; i < n; ++i) {
        const Walker& w = walkers[i];
        const double coin = detect_rng.uniform();
        if (!win.contains(w.x, w.y)) continue;
        const double bw = cfg.person_width * w.width_scale * sx;
        const double bh = cfg.person_height * w.height_scale * sy;
        const BoundingBox box{(w.x - win.x0) * sx - 0.5 * bw, (w.y - win.y0) * sy - 0.5 * bh, bw, bh};
        const int label = i + 1;
        s.truth.records.push_back(TrackRecord{t, v, label, box});
        if (coin < cfg.miss_rate) continue;

        Detection det;
        det.frame = t;
        det.camera = v;
        det.box = box;
        det.confidence = 1.0;
        det.label = label;
        Eigen::VectorXd seen = s.views[v].matrix * s.latents[i];
        Eigen::VectorXd raw = seen + s.views[v].offset;
        for (int k = 0; k < d; ++k) raw(k) += detect_rng.normal(0.0, cfg.view_noise);
        std::vector<double> emb(raw.data(), raw.data() + d);
        det.embedding = EmbeddingPair{emb, emb};

        if (cfg.with_crops) {
          PatchTensor crop;
          crop.grid = grid;
          crop.channels = 3;
          const int m = grid.patch_count();
          crop.values.resize(m, patch_dim);
          const double light = crop_rng.normal(0.0, cfg.illumination_jitter);
          const Eigen::VectorXd look = s.latents[i] + cfg.crop_view_mix * (seen - s.latents[i]);
          const Eigen::VectorXd pattern = cfg.pattern_scale * (texture * look);
          for (int p = 0; p < m; ++p) {
            const double shade = 0.05 * (static_cast<double>(p / grid.cols()) / std::max(grid.rows() - 1, 1) - 0.5);
            for (int k = 0; k < pixels; ++k) {
              for (int ch = 0; ch < 3; ++ch) {
                const double value = 0.5 + light + shade + s.camera_colors[v](ch) + pattern(k * 3 + ch) +
                                     crop_rng.normal(0.0, cfg.pixel_noise);
                crop.values(p, k * 3 + ch) = std::clamp(value, 0.0, 1.0);
              }
            }
          }
          det.crop = std::move(crop);
        }
        s.scene.frames[t].cameras[v].push_back(std::move(det));
      }
    }
  }
  return s;
}

Scenario perturb_misalign(const Scenario& s, int camera, double crop_area, std::uint64_t seed) {
  if (!(crop_area > 0.0 && crop_area <= 1.0)) {
    throw InvalidArgument("crop area must lie in (0, 1]");
  }
  if (camera < 0 || camera >= s.scene.num_cameras) throw InvalidArgument("camera out of range");
  Scenario out = s;
  const double side = std::sqrt(crop_area);
  const double width = s.config.image_width;
  const double height = s.config.image_height;
  const double sub_w = width * side;
  const double sub_h = height * side;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(camera), 0x6d6973ULL));
  const double ox = rng.uniform(0.0, width - sub_w);
  const double oy = rng.uniform(0.0, height - sub_h);
  const double kx = width / sub_w;
  const double ky = height / sub_h;

  auto inside = [&](const BoundingBox& b) {
    return b.center_x() >= ox && b.center_x() <= ox + sub_w && b.center_y() >= oy &&
           b.center_y() <= oy + sub_h;
  };
  auto remap = [&](const BoundingBox& b) {
    return BoundingBox{(b.left - ox) * kx, (b.top - oy) * ky, b.width * kx, b.height * ky};
  };

  for (auto& f : out.scene.frames) {
    auto& dets = f.cameras[camera];
    std::erase_if(dets, [&](const Detection& d) { return !inside(d.box); });
    for (auto& d : dets) d.box = remap(d.box);
  }
  std::erase_if(out.truth.records,
                [&](const TrackRecord& r) { return r.camera == camera && !inside(r.box); });
  for (auto& r : out.truth.records) {
    if (r.camera == camera) r.box = remap(r.box);
  }

  ViewWindow& win = out.windows[camera];
  const ViewWindow old = win;
  win.x0 = old.x0 + ox / width * old.width();
  win.y0 = old.y0 + oy / height * old.height();
  win.x1 = win.x0 + side * old.width();
  win.y1 = win.y0 + side * old.height();
  return out;
}

Scenario perturb_malfunction(const Scenario& s, const std::set<int>& cameras) {
  for (int c : cameras) {
    if (c < 0 || c >= s.scene.num_cameras) throw InvalidArgument("camera out of range");
  }
  Scenario out = s;
  for (auto& f : out.scene.frames) {
    for (int c : cameras) f.cameras[c].clear();
  }
  return out;
}

double multi_view_fraction(const Scenario& s) {
  std::map<std::pair<int, int>, int> views;  // (frame, id) -> camera count
  for (const auto& r : s.truth.records) ++views[{r.frame, r.id}];
  if (views.empty()) return 0.0;
  long multi = 0;
  for (const auto& [key, count] : views) multi += count >= 2 ? 1 : 0;
  return static_cast<double>(multi) / static_cast<double>(views.size());
}

}  // namespace mvtrack
