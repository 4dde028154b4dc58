#include "mmt/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mmt/png_io.hpp"

namespace mmt {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path,
                       const std::string& what) {
  throw std::runtime_error("mesh: " + what + ": " + path.string());
}

}  // namespace

void TriangleMesh::validate() const {
  const int n = int(vertices.size());
  if (!texcoords.empty() && texcoords.size() != vertices.size())
    throw std::runtime_error("mesh: texcoord count != vertex count");
  for (const auto& tri : triangles) {
    for (int idx : tri)
      if (idx < 0 || idx >= n)
        throw std::runtime_error("mesh: triangle index out of range");
    const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
    if (0.5 * e1.cross(e2).norm() <= 1e-12)
      throw std::runtime_error("mesh: degenerate triangle");
  }
}

Vec3 TriangleMesh::triangle_normal(int tri) const {
  const auto& t = triangles[tri];
  const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
  const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
  return e1.cross(e2).normalized();
}

double TriangleMesh::max_vertex_distance() const {
  double max_sq = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    for (std::size_t j = i + 1; j < vertices.size(); ++j)
      max_sq = std::max(max_sq, (vertices[i] - vertices[j]).squaredNorm());
  return std::sqrt(max_sq);
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) fail(path, "cannot open");

  std::vector<Vec3> positions;
  std::vector<Vec2> uvs;
  TriangleMesh mesh;
  std::map<std::pair<int, int>, int> corner_index;  // (v, vt) -> new index

  auto corner = [&](const std::string& token) {
    int v = 0, vt = -1;
    if (std::size_t slash = token.find('/'); slash == std::string::npos) {
      v = std::stoi(token);
    } else {
      v = std::stoi(token.substr(0, slash));
      const std::string rest = token.substr(slash + 1);
      if (std::size_t slash2 = rest.find('/');
          slash2 != 0 && !rest.empty() && rest[0] != '/')
        vt = std::stoi(slash2 == std::string::npos ? rest
                                                   : rest.substr(0, slash2));
    }
    // OBJ indices are 1-based; negative indices count from the end.
    v = v > 0 ? v - 1 : int(positions.size()) + v;
    if (vt != -1) vt = vt > 0 ? vt - 1 : int(uvs.size()) + vt;
    auto [it, inserted] =
        corner_index.try_emplace({v, vt}, int(mesh.vertices.size()));
    if (inserted) {
      mesh.vertices.push_back(positions.at(v));
      if (vt >= 0) mesh.texcoords.push_back(uvs.at(vt));
    }
    return it->second;
  };

  std::string line;
  std::filesystem::path texture_path;
  while (std::getline(file, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      double x, y, z;
      ss >> x >> y >> z;
      positions.emplace_back(x, y, z);
    } else if (tag == "vt") {
      double u, v;
      ss >> u >> v;
      uvs.emplace_back(u, v);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string token;
      while (ss >> token) face.push_back(corner(token));
      for (std::size_t i = 2; i < face.size(); ++i)
        mesh.triangles.push_back({face[0], int(face[i - 1]), int(face[i])});
    } else if (tag == "mtllib") {
      std::string rel;
      ss >> rel;
      // Minimal MTL support: first map_Kd found names the texture.
      std::ifstream mtl(path.parent_path() / rel);
      std::string mtl_line;
      while (mtl && std::getline(mtl, mtl_line)) {
        std::istringstream ms(mtl_line);
        std::string mtag, mval;
        ms >> mtag >> mval;
        if (mtag == "map_Kd" && !mval.empty()) {
          texture_path = path.parent_path() / mval;
          break;
        }
      }
    }
  }
  if (!mesh.texcoords.empty() && mesh.texcoords.size() != mesh.vertices.size())
    fail(path, "faces mix textured and untextured corners");
  if (!texture_path.empty() && !mesh.texcoords.empty())
    mesh.texture = std::make_shared<ImageRgb8>(read_png_rgb8(texture_path));
  mesh.validate();
  return mesh;
}

namespace {

struct PlyProperty {
  std::string type;
  std::string name;
  bool is_list = false;
  std::string count_type;
};

std::size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
    return 1;
  if (type == "short" || type == "ushort" || type == "int16" ||
      type == "uint16")
    return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw std::runtime_error("ply: unknown type " + type);
}

double read_binary_scalar(std::istream& in, const std::string& type) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), std::streamsize(scalar_size(type)));
  auto as = [&]<typename T>() {
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return double(v);
  };
  if (type == "char" || type == "int8") return as.operator()<std::int8_t>();
  if (type == "uchar" || type == "uint8") return as.operator()<std::uint8_t>();
  if (type == "short" || type == "int16") return as.operator()<std::int16_t>();
  if (type == "ushort" || type == "uint16")
    return as.operator()<std::uint16_t>();
  if (type == "int" || type == "int32") return as.operator()<std::int32_t>();
  if (type == "uint" || type == "uint32") return as.operator()<std::uint32_t>();
  if (type == "float" || type == "float32") return as.operator()<float>();
  return as.operator()<double>();
}

}  // namespace

TriangleMesh load_ply(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(path, "cannot open");

  std::string line;
  std::getline(file, line);
  if (line.rfind("ply", 0) != 0) fail(path, "not a PLY file");

  bool binary = false;
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
  };
  std::vector<Element> elements;

  while (std::getline(file, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt != "ascii")
        fail(path, "unsupported PLY format " + fmt);
    } else if (tag == "element") {
      Element e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (tag == "property") {
      PlyProperty p;
      std::string first;
      ss >> first;
      if (first == "list") {
        p.is_list = true;
        ss >> p.count_type >> p.type >> p.name;
      } else {
        p.type = first;
        ss >> p.name;
      }
      if (elements.empty()) fail(path, "property before element");
      elements.back().properties.push_back(p);
    } else if (tag == "end_header") {
      break;
    }
  }

  TriangleMesh mesh;
  for (const auto& element : elements) {
    for (std::size_t i = 0; i < element.count; ++i) {
      std::map<std::string, double> scalars;
      std::vector<int> list;
      for (const auto& prop : element.properties) {
        if (prop.is_list) {
          const std::size_t count = std::size_t(
              binary ? read_binary_scalar(file, prop.count_type)
                     : [&] { double v; file >> v; return v; }());
          list.resize(count);
          for (std::size_t j = 0; j < count; ++j)
            list[j] = int(binary ? read_binary_scalar(file, prop.type)
                                 : [&] { double v; file >> v; return v; }());
        } else {
          scalars[prop.name] = binary
                                   ? read_binary_scalar(file, prop.type)
                                   : [&] { double v; file >> v; return v; }();
        }
      }
      if (element.name == "vertex") {
        mesh.vertices.emplace_back(scalars.at("x"), scalars.at("y"),
                                   scalars.at("z"));
      } else if (element.name == "face") {
        for (std::size_t j = 2; j < list.size(); ++j)
          mesh.triangles.push_back({list[0], list[j - 1], list[j]});
      }
    }
  }
  mesh.validate();
  return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".obj") return load_obj(path);
  if (ext == ".ply") return load_ply(path);
  fail(path, "unsupported mesh format " + ext);
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh,
              const std::filesystem::path& texture_png) {
  std::ofstream file(path);
  if (!file) fail(path, "cannot open for writing");
  file.precision(12);
  if (!texture_png.empty()) {
    const auto mtl_path = std::filesystem::path(path).replace_extension(".mtl");
    std::ofstream mtl(mtl_path);
    mtl << "newmtl textured\nmap_Kd " << texture_png.filename().string()
        << "\n";
    file << "mtllib " << mtl_path.filename().string() << "\nusemtl textured\n";
  }
  for (const auto& v : mesh.vertices)
    file << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& uv : mesh.texcoords)
    file << "vt " << uv.x() << " " << uv.y() << "\n";
  const bool textured = !mesh.texcoords.empty();
  for (const auto& t : mesh.triangles) {
    file << "f";
    for (int idx : t) {
      file << " " << idx + 1;
      if (textured) file << "/" << idx + 1;
    }
    file << "\n";
  }
  if (!texture_png.empty() && mesh.texture)
    write_png(path.parent_path() / texture_png.filename(), *mesh.texture);
}

TriangleMesh merge_meshes(const std::vector<TriangleMesh>& meshes) {
  TriangleMesh out;
  for (const auto& mesh : meshes) {
    const int base = int(out.vertices.size());
    out.vertices.insert(out.vertices.end(), mesh.vertices.begin(),
                        mesh.vertices.end());
    for (const auto& t : mesh.triangles)
      out.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  // Texture coordinates are dropped; merged meshes are used for geometry only.
  return out;
}

namespace {

void add_quad(TriangleMesh& mesh, const Vec3& a, const Vec3& b, const Vec3& c,
              const Vec3& d, const Vec2& uva, const Vec2& uvb, const Vec2& uvc,
              const Vec2& uvd) {
  const int base = int(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), {a, b, c, d});
  mesh.texcoords.insert(mesh.texcoords.end(), {uva, uvb, uvc, uvd});
  mesh.triangles.push_back({base, base + 1, base + 2});
  mesh.triangles.push_back({base, base + 2, base + 3});
}

}  // namespace

TriangleMesh make_box_band(double sx, double sy, double sz, double z0,
                           double z1, bool include_bottom_cap,
                           bool include_top_cap) {
  TriangleMesh mesh;
  const double hx = sx / 2, hy = sy / 2, hz = sz / 2;
  z0 = std::max(z0, -hz);
  z1 = std::min(z1, hz);

  // UVs keep a consistent texel density: u along the face width, v along z.
  const double v0 = (z0 + hz) / sz, v1 = (z1 + hz) / sz;

  // +x side
  add_quad(mesh, {hx, -hy, z0}, {hx, hy, z0}, {hx, hy, z1}, {hx, -hy, z1},
           {0, v0}, {0.25, v0}, {0.25, v1}, {0, v1});
  // +y side
  add_quad(mesh, {hx, hy, z0}, {-hx, hy, z0}, {-hx, hy, z1}, {hx, hy, z1},
           {0.25, v0}, {0.5, v0}, {0.5, v1}, {0.25, v1});
  // -x side
  add_quad(mesh, {-hx, hy, z0}, {-hx, -hy, z0}, {-hx, -hy, z1}, {-hx, hy, z1},
           {0.5, v0}, {0.75, v0}, {0.75, v1}, {0.5, v1});
  // -y side
  add_quad(mesh, {-hx, -hy, z0}, {hx, -hy, z0}, {hx, -hy, z1}, {-hx, -hy, z1},
           {0.75, v0}, {1.0, v0}, {1.0, v1}, {0.75, v1});

  if (include_bottom_cap)
    add_quad(mesh, {-hx, -hy, z0}, {-hx, hy, z0}, {hx, hy, z0}, {hx, -hy, z0},
             {0, 0}, {0, 0.2}, {0.2, 0.2}, {0.2, 0});
  if (include_top_cap)
    add_quad(mesh, {-hx, -hy, z1}, {hx, -hy, z1}, {hx, hy, z1}, {-hx, hy, z1},
             {0.8, 0.8}, {1.0, 0.8}, {1.0, 1.0}, {0.8, 1.0});
  return mesh;
}

TriangleMesh make_box(double sx, double sy, double sz) {
  return make_box_band(sx, sy, sz, -sz / 2, sz / 2, true, true);
}

TriangleMesh make_cylinder_sector(double radius, double height, int segments,
                                  double angle0, double angle1,
                                  bool include_caps) {
  TriangleMesh mesh;
  const double hz = height / 2;
  const double step = 2.0 * std::numbers::pi / segments;
  auto rim = [&](double a, double z) {
    return Vec3(radius * std::cos(a), radius * std::sin(a), z);
  };
  for (int i = 0; i < segments; ++i) {
    const double a0 = i * step, a1 = (i + 1) * step;
    const double mid = (a0 + a1) / 2;
    if (mid < angle0 || mid >= angle1) continue;
    const double u0 = a0 / (2.0 * std::numbers::pi);
    const double u1 = a1 / (2.0 * std::numbers::pi);
    add_quad(mesh, rim(a0, -hz), rim(a1, -hz), rim(a1, hz), rim(a0, hz),
             {u0, 0}, {u1, 0}, {u1, 1}, {u0, 1});
  }
  if (include_caps) {
    for (int i = 0; i < segments; ++i) {
      const double a0 = i * step, a1 = (i + 1) * step;
      const int base = int(mesh.vertices.size());
      // top cap (normal +z), bottom cap (normal -z)
      mesh.vertices.insert(mesh.vertices.end(),
                           {Vec3(0, 0, hz), rim(a0, hz), rim(a1, hz),
                            Vec3(0, 0, -hz), rim(a1, -hz), rim(a0, -hz)});
      for (int j = 0; j < 6; ++j) mesh.texcoords.emplace_back(0.05, 0.05);
      mesh.triangles.push_back({base, base + 1, base + 2});
      mesh.triangles.push_back({base + 3, base + 4, base + 5});
    }
  }
  return mesh;
}

TriangleMesh make_cylinder(double radius, double height, int segments) {
  return make_cylinder_sector(radius, height, segments, 0.0,
                              2.0 * std::numbers::pi, true);
}

TriangleMesh make_sphere(double radius, int subdivisions) {
  // Icosahedron base.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto [it, inserted] = midpoint.try_emplace(key, int(verts.size()));
      if (inserted) verts.push_back((verts[a] + verts[b]).normalized());
      return it->second;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriangleMesh mesh;
  mesh.vertices.reserve(verts.size());
  for (const auto& v : verts) mesh.vertices.push_back(v * radius);
  mesh.triangles = std::move(faces);
  return mesh;
}

TriangleMesh make_quad(double sx, double sy) {
  TriangleMesh mesh;
  const double hx = sx / 2, hy = sy / 2;
  // Wound so the normal points toward -z.
  add_quad(mesh, {-hx, -hy, 0}, {-hx, hy, 0}, {hx, hy, 0}, {hx, -hy, 0},
           {0, 0}, {0, 1}, {1, 1}, {1, 0});
  return mesh;
}

}  // namespace mmt
