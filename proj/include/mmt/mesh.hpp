#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "mmt/geometry.hpp"
#include "mmt/image.hpp"

namespace mmt {

// Triangle mesh in its body frame (meters). Texture coordinates, when
// present, are per vertex; loaders split shared vertices as needed.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec2> texcoords;               // empty or one per vertex
  std::shared_ptr<ImageRgb8> texture;        // nullptr when untextured

  bool has_texture() const { return texture != nullptr && !texcoords.empty(); }

  // Throws on out-of-range indices or triangles with area <= 1e-12 m².
  void validate() const;

  Vec3 triangle_normal(int tri) const;
  double max_vertex_distance() const;  // largest pairwise vertex distance
};

TriangleMesh load_obj(const std::filesystem::path& path);
TriangleMesh load_ply(const std::filesystem::path& path);
TriangleMesh load_mesh(const std::filesystem::path& path);  // by extension

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh,
              const std::filesystem::path& texture_png = {});

TriangleMesh merge_meshes(const std::vector<TriangleMesh>& meshes);

// --- procedural primitives (scenes and tests) --------------------------------

// Axis-aligned box centered at the origin, UV-mapped per face.
TriangleMesh make_box(double size_x, double size_y, double size_z);

// Box restricted to a z-slab [z0, z1]; side faces are split at the slab
// boundaries so the box can be partitioned into bands.
TriangleMesh make_box_band(double size_x, double size_y, double size_z,
                           double z0, double z1, bool include_bottom_cap,
                           bool include_top_cap);

// Cylinder with axis z, centered at origin. Side quads restricted to the
// angular range [angle0, angle1) (radians); caps optional.
TriangleMesh make_cylinder_sector(double radius, double height, int segments,
                                  double angle0, double angle1,
                                  bool include_caps);

TriangleMesh make_cylinder(double radius, double height, int segments);

// Icosphere.
TriangleMesh make_sphere(double radius, int subdivisions);

// Rectangle in the xy plane (z = 0) with normal (0,0,-1), so it faces a
// camera at the origin looking along +z when placed at positive z.
TriangleMesh make_quad(double size_x, double size_y);

}  // namespace mmt
