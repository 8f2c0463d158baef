#pragma once

#include "mvtrack/types.hpp"

#include <vector>

namespace testing {

// Unit vector along axis `k` of an n-dimensional space.
inline std::vector<double> axis(int n, int k) {
  std::vector<double> v(n, 0.0);
  v[k % n] = 1.0;
  return v;
}

inline mvtrack::Detection make_detection(int frame, int camera, mvtrack::BoundingBox box,
                                         std::vector<double> agnostic, std::vector<double> specific,
                                         int label = -1) {
  mvtrack::Detection d;
  d.frame = frame;
  d.camera = camera;
  d.box = box;
  d.label = label;
  d.embedding = mvtrack::EmbeddingPair{std::move(agnostic), std::move(specific)};
  return d;
}

}  // namespace testing
