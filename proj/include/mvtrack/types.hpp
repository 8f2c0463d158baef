#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace mvtrack {

// Pixel box in MOT convention: top-left corner plus extent.
struct BoundingBox {
  double left = 0.0;
  double top = 0.0;
  double width = 1.0;
  double height = 1.0;

  double right() const { return left + width; }
  double bottom() const { return top + height; }
  double center_x() const { return left + 0.5 * width; }
  double center_y() const { return top + 0.5 * height; }
  double area() const { return width * height; }

  bool valid() const;
  // Throws InvalidArgument unless valid().
  void validate() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Crop layout: an H x W image cut into non-overlapping h x w patches.
struct PatchGrid {
  int image_height = 224;
  int image_width = 224;
  int patch_height = 16;
  int patch_width = 16;

  // Throws InvalidArgument when the patch size does not tile the image.
  static PatchGrid make(int image_height, int image_width, int patch_height, int patch_width);

  int rows() const { return image_height / patch_height; }
  int cols() const { return image_width / patch_width; }
  int patch_count() const { return rows() * cols(); }

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

// M patches, each flattened to P = h * w * channels values in [0, 1].
struct PatchTensor {
  PatchGrid grid;
  int channels = 3;
  Eigen::MatrixXd values;  // M x P, row-major patch order

  int patch_dim() const { return grid.patch_height * grid.patch_width * channels; }
  void validate() const;
};

// Encoder output split into the view-agnostic and view-specific halves.
struct EmbeddingPair {
  std::vector<double> agnostic;
  std::vector<double> specific;

  int total_dim() const { return static_cast<int>(agnostic.size() + specific.size()); }

  // Splits a full embedding [agnostic | specific]; throws on odd length.
  static EmbeddingPair split(std::span<const double> full);
  std::vector<double> concatenated() const;

  friend bool operator==(const EmbeddingPair&, const EmbeddingPair&) = default;
};

struct Detection {
  int frame = 0;
  int camera = 0;
  BoundingBox box;
  double confidence = 1.0;
  int label = -1;  // ground-truth identity, -1 when unknown
  std::optional<PatchTensor> crop;
  std::optional<EmbeddingPair> embedding;
};

// Synchronized detection sets of all V cameras at one time index.
struct FrameDetections {
  int frame = 0;
  std::vector<std::vector<Detection>> cameras;  // size V
};

struct Scene {
  int num_cameras = 0;
  std::vector<FrameDetections> frames;  // contiguous frame indices

  int first_frame() const { return frames.empty() ? 0 : frames.front().frame; }
  int num_frames() const { return static_cast<int>(frames.size()); }
  std::size_t detection_count() const;

  // Builds an empty scene covering [first, first + count) with V cameras.
  static Scene empty(int num_cameras, int first, int count);
  // Throws InvalidArgument when frames are not contiguous or camera lists are missized.
  void validate() const;
};

// Cosine of the angle between a and b; 0 when either norm is 0.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace mvtrack
