#include "mmt/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "mmt/kernels/kernels.hpp"

namespace mmt {

GroundTruthDelta make_delta(const Pose& estimate, const Pose& ground_truth,
                            const std::vector<Vec3>& vertices) {
  return {estimate.inverse() * ground_truth, subsample_vertices(vertices)};
}

std::vector<Vec3> subsample_vertices(const std::vector<Vec3>& vertices,
                                     int max_count) {
  if (int(vertices.size()) <= max_count) return vertices;
  std::vector<Vec3> out;
  out.reserve(max_count);
  for (int i = 0; i < max_count; ++i)
    out.push_back(vertices[std::size_t(i) * vertices.size() / max_count]);
  return out;
}

double add_error(const GroundTruthDelta& delta) {
  if (delta.vertices.empty())
    throw std::invalid_argument("add_error: empty vertex set");
  const Mat3& R = delta.transform.R;
  const Vec3& t = delta.transform.t;
  double sum = 0.0;
  for (const Vec3& v : delta.vertices) {
    const Vec3 w = R * v + t;
    const double dx = v.x() - w.x();
    const double dy = v.y() - w.y();
    const double dz = v.z() - w.z();
    sum += std::sqrt((dx * dx + dy * dy) + dz * dz);
  }
  return sum / double(delta.vertices.size());
}

double adds_error(const GroundTruthDelta& delta) {
  if (delta.vertices.empty())
    throw std::invalid_argument("adds_error: empty vertex set");
  const std::size_t n = delta.vertices.size();
  std::vector<double> xs(n), ys(n), zs(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec3 w = delta.transform.R * delta.vertices[j] + delta.transform.t;
    xs[j] = w.x();
    ys[j] = w.y();
    zs[j] = w.z();
  }
  double sum = 0.0;
  for (const Vec3& v : delta.vertices) {
    const auto best = kernels::argmin_sq_dist(v.x(), v.y(), v.z(), xs.data(),
                                              ys.data(), zs.data(), n);
    sum += std::sqrt(best.value);
  }
  return sum / double(n);
}

double auc_score(const ErrorSeries& series) {
  if (series.errors.empty())
    throw std::invalid_argument("auc_score: no frames");
  if (series.threshold <= 0.0)
    throw std::invalid_argument("auc_score: threshold must be > 0");
  double sum = 0.0;
  for (double e : series.errors)
    sum += std::max(1.0 - e / series.threshold, 0.0);
  return sum / double(series.errors.size());
}

double opt_auc(const std::vector<double>& errors, double largest_distance) {
  if (largest_distance <= 0.0)
    throw std::invalid_argument("opt_auc: largest vertex distance must be > 0");
  return 20.0 * auc_score({errors, 0.2 * largest_distance});
}

}  // namespace mmt
