#include "mvtrack/types.hpp"

#include "mvtrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvtrack {

bool BoundingBox::valid() const {
  return std::isfinite(left) && std::isfinite(top) && std::isfinite(width) &&
         std::isfinite(height) && width > 0.0 && height > 0.0;
}

void BoundingBox::validate() const {
  if (!valid()) {
    throw InvalidArgument("bounding box must be finite with positive extent");
  }
}

PatchGrid PatchGrid::make(int image_height, int image_width, int patch_height, int patch_width) {
  if (image_height <= 0 || image_width <= 0 || patch_height <= 0 || patch_width <= 0) {
    throw InvalidArgument("patch grid dimensions must be positive");
  }
  if (image_height % patch_height != 0 || image_width % patch_width != 0) {
    throw InvalidArgument("patch size must divide the image size");
  }
  return PatchGrid{image_height, image_width, patch_height, patch_width};
}

void PatchTensor::validate() const {
  if (values.rows() != grid.patch_count() || values.cols() != patch_dim()) {
    throw InvalidArgument("patch tensor shape does not match its grid");
  }
  if (!values.allFinite()) {
    throw InvalidArgument("patch tensor contains non-finite values");
  }
}

EmbeddingPair EmbeddingPair::split(std::span<const double> full) {
  if (full.size() % 2 != 0) {
    throw InvalidArgument("embedding dimension must be even, got " + std::to_string(full.size()));
  }
  const std::size_t half = full.size() / 2;
  EmbeddingPair pair;
  pair.agnostic.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(half));
  pair.specific.assign(full.begin() + static_cast<std::ptrdiff_t>(half), full.end());
  return pair;
}

std::vector<double> EmbeddingPair::concatenated() const {
  std::vector<double> out(agnostic);
  out.insert(out.end(), specific.begin(), specific.end());
  return out;
}

std::size_t Scene::detection_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) {
    for (const auto& cam : f.cameras) n += cam.size();
  }
  return n;
}

Scene Scene::empty(int num_cameras, int first, int count) {
  Scene s;
  s.num_cameras = num_cameras;
  s.frames.resize(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    s.frames[static_cast<std::size_t>(i)].frame = first + i;
    s.frames[static_cast<std::size_t>(i)].cameras.resize(static_cast<std::size_t>(num_cameras));
  }
  return s;
}

void Scene::validate() const {
  if (num_cameras < 1) throw InvalidArgument("scene needs at least one camera");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (f.frame != first_frame() + static_cast<int>(i)) {
      throw InvalidArgument("scene frames must be contiguous");
    }
    if (static_cast<int>(f.cameras.size()) != num_cameras) {
      throw InvalidArgument("every frame must hold one detection list per camera");
    }
    for (int v = 0; v < num_cameras; ++v) {
      for (const auto& d : f.cameras[static_cast<std::size_t>(v)]) {
        if (d.frame != f.frame || d.camera != v) {
          throw InvalidArgument("detection filed under the wrong frame or camera");
        }
      }
    }
  }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw InvalidArgument("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left, b.left);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace mvtrack
