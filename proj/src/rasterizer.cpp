#include "mmt/rasterizer.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

namespace mmt {

namespace {

struct ScreenVertex {
  Vec2 p;         // screen coordinates
  double inv_z;   // 1 / camera Z (affine in screen space)
  Vec2 uv_div_z;  // uv / z for perspective-correct interpolation
};

struct SetupTriangle {
  ScreenVertex v[3];
  int body_index;
  std::int32_t triangle_index;
};

struct ClipVertex {
  Vec3 p;  // camera frame
  Vec2 uv;
};

// Sutherland-Hodgman against z >= kNearPlane.
int clip_near(const ClipVertex in[3], ClipVertex out[4]) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.p.z() >= kNearPlane;
    const bool b_in = b.p.z() >= kNearPlane;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double s = (kNearPlane - a.p.z()) / (b.p.z() - a.p.z());
      out[n++] = {a.p + s * (b.p - a.p), a.uv + s * (b.uv - a.uv)};
    }
  }
  return n;
}

inline double edge_fn(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

// Top-left ownership for pixels exactly on an edge (y grows downward).
inline bool is_top_left(const Vec2& a, const Vec2& b) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

std::vector<SetupTriangle> setup_triangles(const std::vector<SceneBody>& bodies,
                                           const Intrinsics& k) {
  std::vector<SetupTriangle> setup;
  for (int bi = 0; bi < int(bodies.size()); ++bi) {
    const auto& body = bodies[bi];
    const auto& mesh = *body.mesh;
    const bool textured = mesh.has_texture();
    for (std::int32_t ti = 0; ti < std::int32_t(mesh.triangles.size()); ++ti) {
      const auto& tri = mesh.triangles[ti];
      ClipVertex cv[3];
      for (int j = 0; j < 3; ++j) {
        cv[j].p = body.pose * mesh.vertices[tri[j]];
        cv[j].uv = textured ? mesh.texcoords[tri[j]] : Vec2::Zero();
      }
      ClipVertex clipped[4];
      const int n = clip_near(cv, clipped);
      for (int j = 2; j < n; ++j) {
        const ClipVertex* poly[3] = {&clipped[0], &clipped[j - 1], &clipped[j]};
        SetupTriangle st;
        for (int c = 0; c < 3; ++c) {
          const Vec3& p = poly[c]->p;
          st.v[c].p = {p.x() / p.z() * k.fx + k.px,
                       p.y() / p.z() * k.fy + k.py};
          st.v[c].inv_z = 1.0 / p.z();
          st.v[c].uv_div_z = poly[c]->uv / p.z();
        }
        // Normalize winding so the signed area is positive (double-sided).
        if (edge_fn(st.v[0].p, st.v[1].p, st.v[2].p) < 0.0)
          std::swap(st.v[1], st.v[2]);
        st.body_index = bi;
        st.triangle_index = ti;
        setup.push_back(st);
      }
    }
  }
  return setup;
}

struct ShadeInfo {
  bool enabled = false;
  Lighting lighting;
};

void raster_rows(const std::vector<SetupTriangle>& tris,
                 const std::vector<SceneBody>& bodies, const Intrinsics& k,
                 const ShadeInfo& shade, RenderedFrame& frame, int y_begin,
                 int y_end) {
  for (const auto& st : tris) {
    const double area = edge_fn(st.v[0].p, st.v[1].p, st.v[2].p);
    if (area <= 0.0) continue;

    const double min_x = std::min({st.v[0].p.x(), st.v[1].p.x(), st.v[2].p.x()});
    const double max_x = std::max({st.v[0].p.x(), st.v[1].p.x(), st.v[2].p.x()});
    const double min_y = std::min({st.v[0].p.y(), st.v[1].p.y(), st.v[2].p.y()});
    const double max_y = std::max({st.v[0].p.y(), st.v[1].p.y(), st.v[2].p.y()});

    const int x0 = std::max(0, int(std::floor(min_x - 0.5)));
    const int x1 = std::min(k.width - 1, int(std::ceil(max_x - 0.5)));
    const int y0 = std::max(y_begin, int(std::floor(min_y - 0.5)));
    const int y1 = std::min(y_end - 1, int(std::ceil(max_y - 0.5)));
    if (x0 > x1 || y0 > y1) continue;

    const bool tl[3] = {is_top_left(st.v[0].p, st.v[1].p),
                        is_top_left(st.v[1].p, st.v[2].p),
                        is_top_left(st.v[2].p, st.v[0].p)};

    Rgb8 flat_color{};
    double shade_factor = 1.0;
    const SceneBody& body = bodies[st.body_index];
    const bool textured = body.mesh->has_texture();
    if (shade.enabled) {
      Vec3 n = body.pose.R * body.mesh->triangle_normal(st.triangle_index);
      // Orient the face normal toward the camera.
      const Vec3 any_point =
          body.pose * body.mesh->vertices[body.mesh->triangles
                                              [st.triangle_index][0]];
      if (n.dot(any_point) > 0.0) n = -n;
      shade_factor = shade.lighting.ambient +
                     shade.lighting.diffuse *
                         std::max(0.0, -n.dot(shade.lighting.direction_to_scene));
      shade_factor = std::min(shade_factor, 1.0);
    }

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        const double e0 = edge_fn(st.v[1].p, st.v[2].p, p);
        const double e1 = edge_fn(st.v[2].p, st.v[0].p, p);
        const double e2 = edge_fn(st.v[0].p, st.v[1].p, p);
        const bool inside = (e0 > 0.0 || (e0 == 0.0 && tl[1])) &&
                            (e1 > 0.0 || (e1 == 0.0 && tl[2])) &&
                            (e2 > 0.0 || (e2 == 0.0 && tl[0]));
        if (!inside) continue;

        const double b0 = e0 / area, b1 = e1 / area, b2 = e2 / area;
        const double inv_z =
            b0 * st.v[0].inv_z + b1 * st.v[1].inv_z + b2 * st.v[2].inv_z;
        const float z = float(1.0 / inv_z);
        float& depth = frame.depth(x, y);
        if (depth != 0.0f && z >= depth) continue;

        depth = z;
        frame.body_id(x, y) = body.body_id;
        frame.triangle_id(x, y) = st.triangle_index;
        if (shade.enabled) {
          Rgb8 base = body.base_color;
          if (textured) {
            const Vec2 uv_div_z = b0 * st.v[0].uv_div_z +
                                  b1 * st.v[1].uv_div_z + b2 * st.v[2].uv_div_z;
            const Vec2 uv = uv_div_z / inv_z;
            const auto& tex = *body.mesh->texture;
            const int tx = std::clamp(
                int(uv.x() * tex.width()), 0, tex.width() - 1);
            const int ty = std::clamp(
                int((1.0 - uv.y()) * tex.height()), 0, tex.height() - 1);
            base = tex(tx, ty);
          }
          frame.color(x, y) = Rgb8{
              std::uint8_t(std::lround(base.r * shade_factor)),
              std::uint8_t(std::lround(base.g * shade_factor)),
              std::uint8_t(std::lround(base.b * shade_factor))};
        }
      }
    }
  }
}

RenderedFrame rasterize_impl(const std::vector<SceneBody>& bodies,
                             const Intrinsics& k, const ShadeInfo& shade,
                             int threads) {
  if (k.width <= 0 || k.height <= 0)
    throw std::invalid_argument("rasterize: invalid image dimensions");
  std::set<std::uint8_t> ids;
  for (const auto& body : bodies) {
    if (body.body_id == 0 || !ids.insert(body.body_id).second)
      throw std::invalid_argument("rasterize: body_id must be unique and >= 1");
    if (!body.mesh) throw std::invalid_argument("rasterize: null mesh");
  }

  RenderedFrame frame;
  frame.depth = ImageF(k.width, k.height, 0.0f);
  frame.body_id = ImageU8(k.width, k.height, 0);
  frame.triangle_id = Image<std::int32_t>(k.width, k.height, -1);
  if (shade.enabled) {
    frame.color = ImageRgb8(k.width, k.height, shade.lighting.background);
  }

  const auto tris = setup_triangles(bodies, k);
  threads = std::clamp(threads, 1, k.height);
  if (threads == 1) {
    raster_rows(tris, bodies, k, shade, frame, 0, k.height);
  } else {
    std::vector<std::thread> pool;
    const int rows_per = (k.height + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int y0 = t * rows_per;
      const int y1 = std::min(k.height, y0 + rows_per);
      if (y0 >= y1) break;
      pool.emplace_back(raster_rows, std::cref(tris), std::cref(bodies),
                        std::cref(k), std::cref(shade), std::ref(frame), y0,
                        y1);
    }
    for (auto& th : pool) th.join();
  }
  return frame;
}

}  // namespace

RenderedFrame rasterize(const std::vector<SceneBody>& bodies,
                        const Intrinsics& k, int threads) {
  return rasterize_impl(bodies, k, ShadeInfo{}, threads);
}

RgbdFrame render_synthetic_rgbd(const std::vector<SceneBody>& bodies,
                                const Intrinsics& k, const Lighting& lighting,
                                const DepthNoiseConfig& noise, int threads) {
  for (const auto& body : bodies)
    if (body.mesh && !body.mesh->texcoords.empty() && !body.mesh->texture)
      throw std::runtime_error(
          "render_synthetic_rgbd: textured mesh without resolvable texture");

  RenderedFrame frame =
      rasterize_impl(bodies, k, ShadeInfo{true, lighting}, threads);

  RgbdFrame out{std::move(frame.color), std::move(frame.depth)};
  if (noise.sigma_m > 0.0 || noise.dropout_rate > 0.0) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, noise.sigma_m);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& d : out.depth.data()) {
      if (d == 0.0f) continue;
      if (noise.dropout_rate > 0.0 && uni(rng) < noise.dropout_rate) {
        d = 0.0f;
        continue;
      }
      if (noise.sigma_m > 0.0)
        d = float(std::max(0.0, double(d) + gauss(rng)));
    }
  }
  return out;
}

Vec3 backproject(const Vec2& pixel, double depth, const Intrinsics& k) {
  if (depth <= 0.0)
    throw std::invalid_argument("backproject: depth must be > 0");
  return {(pixel.x() - k.px) / k.fx * depth, (pixel.y() - k.py) / k.fy * depth,
          depth};
}

}  // namespace mmt
