#pragma once

#include <vector>

#include "mmt/geometry.hpp"

// Pose-error metrics: ADD, ADD-S, and area-under-curve aggregation.

namespace mmt {

// Transform from the ground-truth to the estimated model frame plus the
// vertex set it is evaluated on.
struct GroundTruthDelta {
  Pose transform;              // estimated-from-ground-truth model frame
  std::vector<Vec3> vertices;  // evaluation mesh vertices, n >= 1
};

GroundTruthDelta make_delta(const Pose& estimate, const Pose& ground_truth,
                            const std::vector<Vec3>& vertices);

// ADD-S cost is O(n²); larger vertex sets are subsampled by a deterministic
// stride to this bound.
constexpr int kMaxMetricVertices = 2000;

std::vector<Vec3> subsample_vertices(const std::vector<Vec3>& vertices,
                                     int max_count = kMaxMetricVertices);

// Mean distance between corresponding vertices.
double add_error(const GroundTruthDelta& delta);

// Mean distance to the closest transformed vertex; <= add_error.
double adds_error(const GroundTruthDelta& delta);

struct ErrorSeries {
  std::vector<double> errors;  // per-frame, meters, >= 0
  double threshold = 0.1;      // meters, > 0
};

// (1/m) sum max(1 - e_i/e_t, 0), in [0, 1].
double auc_score(const ErrorSeries& series);

// 20 * auc_score with threshold 0.2 * d, d the largest vertex distance.
double opt_auc(const std::vector<double>& errors, double largest_distance);

}  // namespace mmt
