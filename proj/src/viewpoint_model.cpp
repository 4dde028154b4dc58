#include "mmt/viewpoint_model.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <stdexcept>
#include <thread>

namespace mmt {

BodyClass body_class_from_string(const std::string& name) {
  if (name == "MAIN") return BodyClass::kMain;
  if (name == "FIXED") return BodyClass::kFixed;
  if (name == "SAME_REGION") return BodyClass::kSameRegion;
  if (name == "MOVABLE") return BodyClass::kMovable;
  throw std::invalid_argument("unknown body class: " + name);
}

std::string to_string(BodyClass cls) {
  switch (cls) {
    case BodyClass::kMain: return "MAIN";
    case BodyClass::kFixed: return "FIXED";
    case BodyClass::kSameRegion: return "SAME_REGION";
    case BodyClass::kMovable: return "MOVABLE";
  }
  return "?";
}

std::vector<Vec3> icosphere_directions(int subdivisions) {
  const TriangleMesh sphere = make_sphere(1.0, subdivisions);
  return sphere.vertices;
}

Pose look_at_origin(const Vec3& direction, double distance) {
  const Vec3 d = direction.normalized();
  const Vec3 position = d * distance;     // camera center, model frame
  const Vec3 forward = -d;                // camera z axis
  const Vec3 up_hint = std::abs(d.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  const Vec3 right = up_hint.cross(forward).normalized();
  const Vec3 down = forward.cross(right);
  Pose pose;
  pose.R.row(0) = right;
  pose.R.row(1) = down;
  pose.R.row(2) = forward;
  pose.t = -(pose.R * position);
  return pose;
}

// ---- contour tracing ---------------------------------------------------------

namespace {

constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

inline int direction_index(const Eigen::Vector2i& from,
                           const Eigen::Vector2i& to) {
  const int dx = to.x() - from.x();
  const int dy = to.y() - from.y();
  for (int i = 0; i < 8; ++i)
    if (kDx[i] == dx && kDy[i] == dy) return i;
  return 0;
}

}  // namespace

std::vector<std::vector<Eigen::Vector2i>> trace_contours(
    const RenderedFrame& frame, std::uint8_t id) {
  const auto& mask = frame.body_id;
  const int w = mask.width(), h = mask.height();
  auto in_mask = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && mask(x, y) == id;
  };
  auto is_boundary = [&](int x, int y) {
    return in_mask(x, y) &&
           (!in_mask(x - 1, y) || !in_mask(x + 1, y) || !in_mask(x, y - 1) ||
            !in_mask(x, y + 1));
  };

  std::vector<std::vector<Eigen::Vector2i>> contours;
  ImageU8 visited(w, h, 0);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Seeds are boundary pixels entered from the west.
      if (!is_boundary(x, y) || visited(x, y) || in_mask(x - 1, y)) continue;

      std::vector<Eigen::Vector2i> contour;
      const Eigen::Vector2i start(x, y);
      Eigen::Vector2i current = start;
      Eigen::Vector2i backtrack(x - 1, y);
      const Eigen::Vector2i first_backtrack = backtrack;
      visited(x, y) = 1;
      contour.push_back(start);

      const std::size_t max_steps = std::size_t(w) * h * 4 + 16;
      for (std::size_t step = 0; step < max_steps; ++step) {
        const int enter = direction_index(current, backtrack);
        Eigen::Vector2i next = current;
        bool found = false;
        for (int i = 1; i <= 8; ++i) {
          const int dir = (enter + i) % 8;
          const Eigen::Vector2i cand(current.x() + kDx[dir],
                                     current.y() + kDy[dir]);
          if (in_mask(cand.x(), cand.y())) {
            next = cand;
            found = true;
            break;
          }
          backtrack = cand;
        }
        if (!found) break;  // isolated pixel
        if (next == start && backtrack == first_backtrack) break;  // closed
        current = next;
        visited(current.x(), current.y()) = 1;
        contour.push_back(current);
      }
      contours.push_back(std::move(contour));
    }
  }
  return contours;
}

Vec2 contour_normal(const std::vector<Eigen::Vector2i>& contour,
                    std::size_t index, const RenderedFrame& frame,
                    std::uint8_t id) {
  const std::size_t n = contour.size();
  if (n < 3) return Vec2::Zero();
  const std::size_t span = n >= 5 ? 2 : 1;
  const auto& ahead = contour[(index + span) % n];
  const auto& behind = contour[(index + n - span) % n];
  const Vec2 tangent(double(ahead.x() - behind.x()),
                     double(ahead.y() - behind.y()));
  if (tangent.squaredNorm() < 1e-12) return Vec2::Zero();
  Vec2 normal(tangent.y(), -tangent.x());
  normal.normalize();

  // Orient outward: the mask must not lie 1.5 px along the normal.
  const auto& p = contour[index];
  const int qx = int(std::lround(p.x() + 1.5 * normal.x()));
  const int qy = int(std::lround(p.y() + 1.5 * normal.y()));
  if (frame.body_id.contains(qx, qy) && frame.body_id(qx, qy) == id)
    normal = -normal;
  return normal;
}

bool validate_contour_point(const Eigen::Vector2i& px, const Vec2& normal2d,
                            const RenderedFrame& frame,
                            const BodyClassMap& classes,
                            const ModelGenConfig& config) {
  const float depth_c = frame.depth(px.x(), px.y());
  const double footprint = double(depth_c) / config.focal_length;
  const double s_max =
      std::tan(config.max_surface_slope_deg * std::numbers::pi / 180.0);

  for (int j = 1; j <= config.validation_neighborhood_px; ++j) {
    const int qx = int(std::lround(px.x() + j * normal2d.x()));
    const int qy = int(std::lround(px.y() + j * normal2d.y()));
    if (!frame.body_id.contains(qx, qy)) continue;
    const std::uint8_t q_id = frame.body_id(qx, qy);
    if (q_id == 0) continue;  // free silhouette against background
    const auto it = classes.find(q_id);
    if (it == classes.end() || it->second == BodyClass::kMain) continue;
    if (it->second == BodyClass::kMovable ||
        it->second == BodyClass::kSameRegion)
      return false;
    // FIXED: reject view-dependent segments from elevated neighbor edges.
    if (double(frame.depth(qx, qy)) < double(depth_c) - s_max * footprint * j)
      return false;
  }
  return true;
}

FbDistances compute_fb_distances(const Eigen::Vector2i& px,
                                 const Vec2& normal2d,
                                 const RenderedFrame& frame,
                                 const BodyClassMap& classes,
                                 double focal_length, double cap) {
  const double footprint = double(frame.depth(px.x(), px.y())) / focal_length;
  auto region_of = [&](int x, int y) -> int {
    // -1 background/none, 0 main region (MAIN or SAME_REGION), 1 other
    if (!frame.body_id.contains(x, y)) return -1;
    const std::uint8_t id = frame.body_id(x, y);
    if (id == 0) return -1;
    const auto it = classes.find(id);
    if (it == classes.end()) return 1;
    return (it->second == BodyClass::kMain ||
            it->second == BodyClass::kSameRegion)
               ? 0
               : 1;
  };

  FbDistances result{cap, cap};
  const int max_steps = int(std::ceil(cap / std::max(footprint, 1e-9))) + 1;

  // Background: outward until interrupted by the main region itself or
  // another same-region area.
  for (int j = 1; j <= max_steps; ++j) {
    const int qx = int(std::lround(px.x() + j * normal2d.x()));
    const int qy = int(std::lround(px.y() + j * normal2d.y()));
    if (!frame.body_id.contains(qx, qy)) break;  // uninterrupted to border
    if (region_of(qx, qy) == 0) {
      result.background = std::min(cap, j * footprint);
      break;
    }
  }
  // Foreground: inward while traversing the main region or same-region
  // bodies; anything else interrupts.
  for (int j = 1; j <= max_steps; ++j) {
    const int qx = int(std::lround(px.x() - j * normal2d.x()));
    const int qy = int(std::lround(px.y() - j * normal2d.y()));
    if (!frame.body_id.contains(qx, qy)) break;
    if (region_of(qx, qy) != 0) {
      result.foreground = std::min(cap, j * footprint);
      break;
    }
  }
  return result;
}

// ---- generation --------------------------------------------------------------

namespace {

template <typename T>
std::vector<T> stratified_subsample(std::vector<T> items, int max_count) {
  if (int(items.size()) <= max_count) return items;
  std::vector<T> out;
  out.reserve(max_count);
  for (int i = 0; i < max_count; ++i)
    out.push_back(items[std::size_t(i) * items.size() / max_count]);
  return out;
}

Intrinsics virtual_camera(const ModelGenConfig& config) {
  Intrinsics k;
  k.fx = k.fy = config.focal_length;
  k.px = k.py = config.image_size / 2.0;
  k.width = k.height = config.image_size;
  return k;
}

void parallel_views(int n_views, int threads,
                    const std::function<void(int)>& fn) {
  threads = std::clamp(threads, 1, n_views);
  if (threads == 1) {
    for (int i = 0; i < n_views; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const int per = (n_views + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * per, end = std::min(n_views, begin + per);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

SparseViewpointModel generate_region_model(
    const std::shared_ptr<const TriangleMesh>& main,
    const std::vector<GenBody>& others, std::uint32_t region_id,
    const ModelGenConfig& config, int threads) {
  if (!main || main->vertices.empty())
    throw std::invalid_argument("generate_region_model: empty MAIN mesh");
  main->validate();

  std::vector<SceneBody> bodies;
  BodyClassMap classes;
  bodies.push_back({main, Pose::identity(), 1, 0, {}});
  classes[1] = BodyClass::kMain;
  for (std::size_t i = 0; i < others.size(); ++i) {
    others[i].mesh->validate();
    const auto id = std::uint8_t(2 + i);
    bodies.push_back({others[i].mesh, Pose::identity(), id, 0, {}});
    classes[id] = others[i].cls;
  }

  const Intrinsics k = virtual_camera(config);
  const auto directions = icosphere_directions(config.sphere_subdivisions);

  SparseViewpointModel model;
  model.kind = SparseViewpointModel::Kind::kRegion;
  model.region_id = region_id;
  model.config = config;
  {
    std::vector<GenBody> all;
    all.push_back({main, BodyClass::kMain});
    all.insert(all.end(), others.begin(), others.end());
    model.content_hash = model_content_hash(model.kind, region_id, all, config);
  }
  model.views.resize(directions.size());

  const int border_margin = config.validation_neighborhood_px + 1;

  parallel_views(int(directions.size()), threads, [&](int vi) {
    const Vec3& dir = directions[vi];
    const Pose pose = look_at_origin(dir, config.sphere_radius);
    std::vector<SceneBody> posed = bodies;
    for (auto& b : posed) b.pose = pose;
    const RenderedFrame frame = rasterize(posed, k);

    struct Candidate {
      Eigen::Vector2i px;
      Vec2 normal;
    };
    std::vector<Candidate> candidates;
    for (const auto& contour : trace_contours(frame, 1)) {
      for (std::size_t i = 0; i < contour.size(); ++i) {
        const auto& px = contour[i];
        if (px.x() < border_margin || px.y() < border_margin ||
            px.x() >= k.width - border_margin ||
            px.y() >= k.height - border_margin)
          continue;
        const Vec2 n2 = contour_normal(contour, i, frame, 1);
        if (n2.isZero()) continue;
        if (!validate_contour_point(px, n2, frame, classes, config)) continue;
        candidates.push_back({px, n2});
      }
    }
    candidates =
        stratified_subsample(std::move(candidates), config.max_points_per_view);

    ViewpointView& view = model.views[vi];
    view.orientation = dir;
    const Pose inv = pose.inverse();
    for (const auto& c : candidates) {
      const double depth = double(frame.depth(c.px.x(), c.px.y()));
      // The true silhouette edge lies half a pixel outside the boundary
      // pixel center; leaving this out biases the tracked depth.
      const Vec2 center = Vec2(c.px.x() + 0.5, c.px.y() + 0.5) + 0.5 * c.normal;
      ContourPoint cp;
      cp.point = inv * backproject(center, depth, k);
      cp.normal = inv.R * Vec3(c.normal.x(), c.normal.y(), 0.0);
      const FbDistances fb = compute_fb_distances(
          c.px, c.normal, frame, classes, config.focal_length,
          config.distance_cap);
      cp.foreground_distance = fb.foreground;
      cp.background_distance = fb.background;
      view.contour_points.push_back(cp);
    }
  });

  if (std::all_of(model.views.begin(), model.views.end(),
                  [](const ViewpointView& v) { return v.contour_points.empty(); }))
    throw std::runtime_error(
        "generate_region_model: no valid contour points in any view");
  return model;
}

SparseViewpointModel generate_depth_model(
    const std::shared_ptr<const TriangleMesh>& mesh,
    const ModelGenConfig& config, int threads) {
  if (!mesh || mesh->vertices.empty())
    throw std::invalid_argument("generate_depth_model: empty mesh");
  mesh->validate();

  const Intrinsics k = virtual_camera(config);
  const auto directions = icosphere_directions(config.sphere_subdivisions);

  SparseViewpointModel model;
  model.kind = SparseViewpointModel::Kind::kDepth;
  model.region_id = 0;
  model.config = config;
  model.content_hash = model_content_hash(
      model.kind, 0, {{mesh, BodyClass::kMain}}, config);
  model.views.resize(directions.size());

  parallel_views(int(directions.size()), threads, [&](int vi) {
    const Vec3& dir = directions[vi];
    const Pose pose = look_at_origin(dir, config.sphere_radius);
    const RenderedFrame frame =
        rasterize({{mesh, pose, 1, 0, {}}}, k);

    std::vector<Eigen::Vector2i> interior;
    for (int y = 0; y < k.height; ++y)
      for (int x = 0; x < k.width; ++x)
        if (frame.body_id(x, y) == 1) interior.emplace_back(x, y);
    interior =
        stratified_subsample(std::move(interior), config.max_points_per_view);

    ViewpointView& view = model.views[vi];
    view.orientation = dir;
    const Pose inv = pose.inverse();
    for (const auto& px : interior) {
      const double depth = double(frame.depth(px.x(), px.y()));
      const Vec2 center(px.x() + 0.5, px.y() + 0.5);
      const Vec3 p_cam = backproject(center, depth, k);
      Vec3 n_model = mesh->triangle_normal(frame.triangle_id(px.x(), px.y()));
      if ((pose.R * n_model).dot(p_cam) > 0.0) n_model = -n_model;
      view.surface_points.push_back({inv * p_cam, n_model});
    }
  });

  if (std::all_of(model.views.begin(), model.views.end(),
                  [](const ViewpointView& v) { return v.surface_points.empty(); }))
    throw std::runtime_error("generate_depth_model: no points in any view");
  return model;
}

const ViewpointView& closest_view(const SparseViewpointModel& model,
                                  const Pose& pose) {
  if (model.views.empty())
    throw std::invalid_argument("closest_view: empty model");
  const Vec3 camera_dir = (-(pose.R.transpose() * pose.t)).normalized();
  std::size_t best = 0;
  double best_dot = -2.0;
  for (std::size_t i = 0; i < model.views.size(); ++i) {
    const double d = model.views[i].orientation.dot(camera_dir);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return model.views[best];
}

// ---- serialization -----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'V', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

void put_vec3(std::ostream& out, const Vec3& v) {
  put(out, v.x());
  put(out, v.y());
  put(out, v.z());
}

Vec3 get_vec3(std::istream& in) {
  const double x = get<double>(in);
  const double y = get<double>(in);
  const double z = get<double>(in);
  return {x, y, z};
}

void put_config(std::ostream& out, const ModelGenConfig& c) {
  put<std::int32_t>(out, c.sphere_subdivisions);
  put(out, c.sphere_radius);
  put<std::int32_t>(out, c.image_size);
  put(out, c.focal_length);
  put<std::int32_t>(out, c.max_points_per_view);
  put(out, c.distance_cap);
  put<std::int32_t>(out, c.validation_neighborhood_px);
  put(out, c.max_surface_slope_deg);
}

ModelGenConfig get_config(std::istream& in) {
  ModelGenConfig c;
  c.sphere_subdivisions = get<std::int32_t>(in);
  c.sphere_radius = get<double>(in);
  c.image_size = get<std::int32_t>(in);
  c.focal_length = get<double>(in);
  c.max_points_per_view = get<std::int32_t>(in);
  c.distance_cap = get<double>(in);
  c.validation_neighborhood_px = get<std::int32_t>(in);
  c.max_surface_slope_deg = get<double>(in);
  return c;
}

}  // namespace

void save_model(const std::filesystem::path& path,
                const SparseViewpointModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model: " + path.string());
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, std::uint32_t(model.kind));
  put(out, model.region_id);
  put(out, model.content_hash);
  put_config(out, model.config);
  put(out, std::uint32_t(model.views.size()));
  const bool region = model.kind == SparseViewpointModel::Kind::kRegion;
  for (const auto& view : model.views) {
    put_vec3(out, view.orientation);
    if (region) {
      put(out, std::uint32_t(view.contour_points.size()));
      for (const auto& p : view.contour_points) {
        put_vec3(out, p.point);
        put_vec3(out, p.normal);
        put(out, p.foreground_distance);
        put(out, p.background_distance);
      }
    } else {
      put(out, std::uint32_t(view.surface_points.size()));
      for (const auto& p : view.surface_points) {
        put_vec3(out, p.point);
        put_vec3(out, p.normal);
      }
    }
  }
  if (!out) throw std::runtime_error("model write failed: " + path.string());
}

SparseViewpointModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read model: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad model magic: " + path.string());
  if (get<std::uint32_t>(in) != kVersion)
    throw std::runtime_error("unsupported model version: " + path.string());

  SparseViewpointModel model;
  model.kind = SparseViewpointModel::Kind(get<std::uint32_t>(in));
  model.region_id = get<std::uint32_t>(in);
  model.content_hash = get<std::uint64_t>(in);
  model.config = get_config(in);
  const auto n_views = get<std::uint32_t>(in);
  model.views.resize(n_views);
  const bool region = model.kind == SparseViewpointModel::Kind::kRegion;
  for (auto& view : model.views) {
    view.orientation = get_vec3(in);
    const auto n_points = get<std::uint32_t>(in);
    if (region) {
      view.contour_points.resize(n_points);
      for (auto& p : view.contour_points) {
        p.point = get_vec3(in);
        p.normal = get_vec3(in);
        p.foreground_distance = get<double>(in);
        p.background_distance = get<double>(in);
      }
    } else {
      view.surface_points.resize(n_points);
      for (auto& p : view.surface_points) {
        p.point = get_vec3(in);
        p.normal = get_vec3(in);
      }
    }
  }
  if (!in) throw std::runtime_error("truncated model file: " + path.string());
  return model;
}

std::uint64_t model_content_hash(SparseViewpointModel::Kind kind,
                                 std::uint32_t region_id,
                                 const std::vector<GenBody>& bodies,
                                 const ModelGenConfig& config) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  auto mix = [&hash](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ull;
    }
  };
  auto mix_value = [&mix](const auto& v) { mix(&v, sizeof(v)); };

  mix_value(std::uint32_t(kind));
  mix_value(region_id);
  mix_value(config.sphere_subdivisions);
  mix_value(config.sphere_radius);
  mix_value(config.image_size);
  mix_value(config.focal_length);
  mix_value(config.max_points_per_view);
  mix_value(config.distance_cap);
  mix_value(config.validation_neighborhood_px);
  mix_value(config.max_surface_slope_deg);
  for (const auto& body : bodies) {
    mix_value(std::uint32_t(body.cls));
    for (const auto& v : body.mesh->vertices) {
      mix_value(v.x());
      mix_value(v.y());
      mix_value(v.z());
    }
    for (const auto& t : body.mesh->triangles) mix(t.data(), sizeof(int) * 3);
  }
  return hash;
}

}  // namespace mmt
