#include "mmt/selfcheck.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "mmt/depth_modality.hpp"
#include "mmt/kernels/kernels.hpp"
#include "mmt/metrics.hpp"
#include "mmt/region_modality.hpp"
#include "mmt/texture_modality.hpp"

namespace mmt::selfcheck {

namespace {

constexpr double kFdStep = 1e-6;

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Pose pose;
  pose.R = rotation_exp(Vec3(uni(rng), uni(rng), uni(rng)));
  pose.t = Vec3(0.15 * uni(rng), 0.15 * uni(rng), 0.8 + 0.4 * uni(rng));
  return pose;
}

Intrinsics test_camera() {
  Intrinsics k;
  k.fx = 600.0;
  k.fy = 615.0;
  k.px = 320.0;
  k.py = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

// Central finite differences of f over the 6 variation components.
template <typename F>
Vec6 fd_gradient(const F& f) {
  Vec6 g;
  for (int i = 0; i < 6; ++i) {
    Vec6 plus = Vec6::Zero(), minus = Vec6::Zero();
    plus[i] = kFdStep;
    minus[i] = -kFdStep;
    g[i] = (f(Variation::from_vec6(plus)) - f(Variation::from_vec6(minus))) /
           (2.0 * kFdStep);
  }
  return g;
}

double relative_gradient_error(const Vec6& analytic, const Vec6& fd) {
  const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-9);
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

double max_texture_gradient_error(int configs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> n_matches(3, 40);
  const Intrinsics k = test_camera();

  double worst = 0.0;
  for (int trial = 0; trial < configs; ++trial) {
    const Pose pose = random_pose(rng);
    TextureParams params;
    params.sigma_schedule = {1.0 + 9.0 * std::abs(uni(rng))};
    params.tukey_c = 20.0;

    std::vector<Match> matches(n_matches(rng));
    for (auto& m : matches) {
      m.model_point = Vec3(0.08 * uni(rng), 0.08 * uni(rng), 0.08 * uni(rng));
      const Vec3 p_camera = pose * m.model_point;
      // Mix of inliers and Tukey-saturated outliers.
      const double noise = uni(rng) < 0.7 ? 6.0 : 60.0;
      m.observed = project(p_camera, k) + Vec2(noise * uni(rng), noise * uni(rng));
    }

    const NormalEquations ne =
        texture_normal_equations(matches, pose, k, params, 0);

    // Log-PDF with the weights frozen at theta = 0, evaluated independently.
    const double sigma = params.sigma_schedule[0];
    const auto log_pdf = [&](const Variation& theta) {
      const Pose varied = apply_variation(pose, theta);
      double sum = 0.0;
      for (const auto& m : matches) {
        if (m.weight == 0.0) continue;
        const Vec2 e = m.observed - project(varied * m.model_point, k);
        sum += -m.weight / (2.0 * sigma * sigma) * e.squaredNorm();
      }
      return sum;
    };
    worst = std::max(worst,
                     relative_gradient_error(ne.g, fd_gradient(log_pdf)));
  }
  return worst;
}

double max_region_gradient_error(int configs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> n_lines(4, 40);
  const Intrinsics k = test_camera();

  double worst = 0.0;
  for (int trial = 0; trial < configs; ++trial) {
    const Pose pose = random_pose(rng);
    RegionModalityConfig config;

    std::vector<CorrespondenceLine> lines(n_lines(rng));
    for (auto& line : lines) {
      line.model_point =
          Vec3(0.08 * uni(rng), 0.08 * uni(rng), 0.08 * uni(rng));
      line.center = project(pose * line.model_point, k);
      const double angle = std::numbers::pi * uni(rng);
      line.normal2d = Vec2(std::cos(angle), std::sin(angle));
      line.mean_px = 4.0 * uni(rng);
      line.sigma2_px = 0.5 + 4.0 * std::abs(uni(rng));
      line.informative = true;
    }

    const NormalEquations ne = region_normal_equations(lines, pose, k, config);

    const auto log_pdf = [&](const Variation& theta) {
      const Pose varied = apply_variation(pose, theta);
      double sum = 0.0;
      for (const auto& line : lines) {
        const double r =
            line.normal2d.dot(project(varied * line.model_point, k) -
                              line.center) -
            line.mean_px;
        sum += -r * r / (2.0 * line.sigma2_px);
      }
      return sum;
    };
    worst = std::max(worst,
                     relative_gradient_error(ne.g, fd_gradient(log_pdf)));
  }
  return worst;
}

double max_depth_gradient_error(int configs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> n_corrs(4, 40);

  double worst = 0.0;
  for (int trial = 0; trial < configs; ++trial) {
    const Pose pose = random_pose(rng);
    DepthModalityConfig config;
    config.sigma_schedule = {0.002 + 0.02 * std::abs(uni(rng))};

    std::vector<DepthCorrespondence> corrs(n_corrs(rng));
    for (auto& c : corrs) {
      c.model_point = Vec3(0.08 * uni(rng), 0.08 * uni(rng), 0.08 * uni(rng));
      c.model_normal = Vec3(uni(rng), uni(rng), uni(rng)).normalized();
      c.measured = pose * c.model_point +
                   0.01 * Vec3(uni(rng), uni(rng), uni(rng));
    }

    const NormalEquations ne = depth_normal_equations(corrs, pose, config, 0);

    // Plane model: normals frozen at theta = 0.
    const double sigma = config.sigma_schedule[0];
    const auto log_pdf = [&](const Variation& theta) {
      const Pose varied = apply_variation(pose, theta);
      double sum = 0.0;
      for (const auto& c : corrs) {
        const Vec3 n = pose.R * c.model_normal;
        const double r = n.dot(c.measured - varied * c.model_point);
        sum += -r * r / (2.0 * sigma * sigma);
      }
      return sum;
    };
    worst = std::max(worst,
                     relative_gradient_error(ne.g, fd_gradient(log_pdf)));
  }
  return worst;
}

double max_tukey_consistency_error(double c) {
  double worst = 0.0;
  for (double r = 2e-6; r < 10.0 * c; r *= 1.01) {
    const double w = tukey_weight(r, c);
    const double expected = r < c ? tukey(r, c) : 0.0;
    worst = std::max(worst, std::abs(w * r * r - expected));
  }
  // Unit values at the cutoff and beyond.
  worst = std::max(worst, std::abs(tukey(0.0, c)));
  worst = std::max(worst, std::abs(tukey(c, c) - c * c / 6.0));
  worst = std::max(worst, std::abs(tukey(2.0 * c, c) - c * c / 6.0));
  worst = std::max(worst, std::abs(tukey_weight(c, c)));
  worst = std::max(worst, std::abs(tukey_weight(10.0 * c, c)));
  return worst;
}

int metric_oracle_mismatches(int instances, int vertices, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  int mismatches = 0;
  for (int trial = 0; trial < instances; ++trial) {
    GroundTruthDelta delta;
    delta.transform.R = rotation_exp(Vec3(uni(rng), uni(rng), uni(rng)));
    delta.transform.t = 0.05 * Vec3(uni(rng), uni(rng), uni(rng));
    delta.vertices.resize(vertices);
    for (auto& v : delta.vertices)
      v = 0.1 * Vec3(uni(rng), uni(rng), uni(rng));

    // Brute-force double loops, independent of the metric implementations.
    const Mat3& R = delta.transform.R;
    const Vec3& t = delta.transform.t;
    double add_sum = 0.0;
    double adds_sum = 0.0;
    for (const Vec3& v : delta.vertices) {
      const Vec3 w = R * v + t;
      const double dx = v.x() - w.x();
      const double dy = v.y() - w.y();
      const double dz = v.z() - w.z();
      add_sum += std::sqrt((dx * dx + dy * dy) + dz * dz);

      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& u : delta.vertices) {
        const Vec3 wu = R * u + t;
        const double ex = v.x() - wu.x();
        const double ey = v.y() - wu.y();
        const double ez = v.z() - wu.z();
        const double d2 = (ex * ex + ey * ey) + ez * ez;
        if (d2 < best) best = d2;
      }
      adds_sum += std::sqrt(best);
    }
    const double add_oracle = add_sum / double(vertices);
    const double adds_oracle = adds_sum / double(vertices);

    const double add = add_error(delta);
    const double adds = adds_error(delta);
    if (add != add_oracle || adds != adds_oracle || adds > add) ++mismatches;
  }
  return mismatches;
}

int kernel_equivalence_mismatches(std::uint64_t seed) {
  namespace kn = mmt::kernels;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);

  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 700;

    std::vector<std::uint64_t> query(4), db(4 * n);
    for (auto& w : query) w = rng();
    for (auto& w : db) w = rng();
    std::vector<std::uint32_t> ham_ref(n), ham_alt(n);
    kn::scalar::hamming256_batch(query.data(), db.data(), n, ham_ref.data());

    std::vector<double> xs(n), ys(n), zs(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = uni(rng);
      ys[i] = uni(rng);
      zs[i] = uni(rng);
    }
    const double qx = uni(rng), qy = uni(rng), qz = uni(rng);
    std::vector<double> d2_ref(n), d2_alt(n);
    kn::scalar::sq_dist_batch(qx, qy, qz, xs.data(), ys.data(), zs.data(), n,
                              d2_ref.data());

#if defined(__x86_64__) || defined(_M_X64)
    if (kn::backend_available(kn::Backend::kAvx2)) {
      kn::avx2::hamming256_batch(query.data(), db.data(), n, ham_alt.data());
      if (ham_alt != ham_ref) ++mismatches;
      kn::avx2::sq_dist_batch(qx, qy, qz, xs.data(), ys.data(), zs.data(), n,
                              d2_alt.data());
      if (d2_alt != d2_ref) ++mismatches;
    }
#endif
#if defined(__aarch64__)
    if (kn::backend_available(kn::Backend::kNeon)) {
      kn::neon::hamming256_batch(query.data(), db.data(), n, ham_alt.data());
      if (ham_alt != ham_ref) ++mismatches;
      kn::neon::sq_dist_batch(qx, qy, qz, xs.data(), ys.data(), zs.data(), n,
                              d2_alt.data());
      if (d2_alt != d2_ref) ++mismatches;
    }
#endif
  }
  return mismatches;
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  std::vector<CheckResult> results;
  auto add = [&results](const std::string& name, bool passed,
                        const std::string& detail) {
    results.push_back({name, passed, detail});
  };
  auto fmt = [](double v) {
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << v;
    return out.str();
  };

  const double tex = max_texture_gradient_error(100, seed);
  add("texture gradient vs finite differences", tex < 1e-4,
      "max relative error " + fmt(tex));
  const double reg = max_region_gradient_error(100, seed + 1);
  add("region gradient vs finite differences", reg < 1e-4,
      "max relative error " + fmt(reg));
  const double dep = max_depth_gradient_error(100, seed + 2);
  add("depth gradient vs finite differences", dep < 1e-4,
      "max relative error " + fmt(dep));
  const double tuk = max_tukey_consistency_error(20.0);
  add("tukey/IRLS consistency", tuk < 1e-12, "max deviation " + fmt(tuk));
  const int metric = metric_oracle_mismatches(50, 100, seed + 3);
  add("metric brute-force oracle", metric == 0,
      std::to_string(metric) + " mismatches");
  const int kern = kernel_equivalence_mismatches(seed + 4);
  add("kernel backend equivalence", kern == 0,
      std::to_string(kern) + " mismatches");
  return results;
}

}  // namespace mmt::selfcheck
