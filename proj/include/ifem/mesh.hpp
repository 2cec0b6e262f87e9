#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ifem/errors.hpp"

namespace ifem {

// Conforming simplicial mesh of a box domain with a complete face table.
// Immutable after construction. Local face f of an element is the face
// opposite local vertex f, matching the Crouzeix-Raviart basis indexing.
template <int N>
struct Mesh {
  static_assert(N == 2 || N == 3);
  using Vec = Eigen::Matrix<double, N, 1>;

  struct Face {
    std::array<int, N> v;   // vertex ids, sorted
    int elem[2] = {-1, -1};  // adjacent elements; elem[1] = -1 on the boundary
    Vec normal = Vec::Zero();  // from elem[0] toward elem[1] / outward
    bool boundary = false;
  };

  std::vector<Vec> vertices;
  std::vector<std::array<int, N + 1>> elements;
  std::vector<Face> faces;
  std::vector<std::array<int, N + 1>> element_faces;  // global face ids per element
  int level = 0;
  std::vector<int> parent_elements;  // empty at level 0
  Vec domain_lo = Vec::Zero(), domain_hi = Vec::Zero();

  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
  int num_vertices() const { return static_cast<int>(vertices.size()); }

  std::array<Vec, N + 1> element_vertices(int e) const {
    std::array<Vec, N + 1> v;
    for (int i = 0; i <= N; ++i) v[i] = vertices[elements[e][i]];
    return v;
  }

  std::array<Vec, N> face_vertices(int f) const {
    std::array<Vec, N> v;
    for (int i = 0; i < N; ++i) v[i] = vertices[faces[f].v[i]];
    return v;
  }

  double element_volume(int e) const {
    auto v = element_vertices(e);
    Eigen::Matrix<double, N, N> J;
    for (int k = 0; k < N; ++k) J.col(k) = v[k + 1] - v[0];
    double fact = (N == 2) ? 2.0 : 6.0;
    return std::abs(J.determinant()) / fact;
  }

  double element_diameter(int e) const {
    auto v = element_vertices(e);
    double d = 0;
    for (int i = 0; i <= N; ++i)
      for (int j = i + 1; j <= N; ++j) d = std::max(d, (v[i] - v[j]).norm());
    return d;
  }

  Vec element_centroid(int e) const {
    auto v = element_vertices(e);
    Vec c = Vec::Zero();
    for (int i = 0; i <= N; ++i) c += v[i];
    return c / (N + 1);
  }

  double face_measure(int f) const {
    auto v = face_vertices(f);
    if constexpr (N == 2) {
      return (v[1] - v[0]).norm();
    } else {
      return 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm();
    }
  }

  Vec face_centroid(int f) const {
    auto v = face_vertices(f);
    Vec c = Vec::Zero();
    for (int i = 0; i < N; ++i) c += v[i];
    return c / N;
  }

  double face_diameter(int f) const {
    auto v = face_vertices(f);
    double d = 0;
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) d = std::max(d, (v[i] - v[j]).norm());
    return d;
  }

  // Local index (within element e) of global face f.
  int local_face_index(int e, int f) const {
    for (int i = 0; i <= N; ++i)
      if (element_faces[e][i] == f) return i;
    return -1;
  }

  void build_face_table() {
    faces.clear();
    element_faces.assign(elements.size(), {});
    std::map<std::array<int, N>, int> lookup;
    for (int e = 0; e < num_elements(); ++e) {
      for (int i = 0; i <= N; ++i) {
        std::array<int, N> key;
        int m = 0;
        for (int j = 0; j <= N; ++j)
          if (j != i) key[m++] = elements[e][j];
        std::sort(key.begin(), key.end());
        auto it = lookup.find(key);
        if (it == lookup.end()) {
          Face face;
          face.v = key;
          face.elem[0] = e;
          lookup.emplace(key, static_cast<int>(faces.size()));
          element_faces[e][i] = static_cast<int>(faces.size());
          faces.push_back(face);
        } else {
          Face& face = faces[it->second];
          if (face.elem[1] != -1) throw std::runtime_error("nonmanifold face");
          face.elem[1] = e;
          element_faces[e][i] = it->second;
        }
      }
    }
    for (auto& face : faces) {
      face.boundary = (face.elem[1] == -1);
      if (!face.boundary && face.elem[0] > face.elem[1]) std::swap(face.elem[0], face.elem[1]);
      // Unit normal oriented from elem[0] to elem[1] (outward on the boundary).
      Vec n;
      if constexpr (N == 2) {
        Vec t = vertices[face.v[1]] - vertices[face.v[0]];
        n = Vec(t.y(), -t.x());
      } else {
        n = (vertices[face.v[1]] - vertices[face.v[0]])
                .cross(vertices[face.v[2]] - vertices[face.v[0]]);
      }
      n.normalize();
      Vec c = Vec::Zero();
      for (int i = 0; i < N; ++i) c += vertices[face.v[i]];
      c /= N;
      Vec d = Vec::Zero();
      for (int i = 0; i <= N; ++i) d += vertices[elements[face.elem[0]][i]];
      d /= (N + 1);
      if (n.dot(c - d) < 0) n = -n;
      face.normal = n;
    }
  }

  void fix_orientation() {
    for (auto& el : elements) {
      Eigen::Matrix<double, N, N> J;
      for (int k = 0; k < N; ++k) J.col(k) = vertices[el[k + 1]] - vertices[el[0]];
      if (J.determinant() < 0) std::swap(el[N - 1], el[N]);
    }
  }
};

inline Mesh<2> build_uniform_mesh_2d(int M, const Eigen::Vector2d& lo = {-1, -1},
                                     const Eigen::Vector2d& hi = {1, 1}) {
  if (M < 1) throw std::invalid_argument("build_uniform_mesh_2d: M must be >= 1");
  Mesh<2> mesh;
  mesh.domain_lo = lo;
  mesh.domain_hi = hi;
  const double hx = (hi.x() - lo.x()) / M, hy = (hi.y() - lo.y()) / M;
  auto vid = [&](int i, int j) { return j * (M + 1) + i; };
  for (int j = 0; j <= M; ++j)
    for (int i = 0; i <= M; ++i)
      mesh.vertices.push_back({lo.x() + i * hx, lo.y() + j * hy});
  // One fixed diagonal direction per square: (i,j) -> (i+1,j+1).
  for (int j = 0; j < M; ++j)
    for (int i = 0; i < M; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      mesh.elements.push_back({v00, v10, v11});
      mesh.elements.push_back({v00, v11, v01});
    }
  mesh.fix_orientation();
  mesh.build_face_table();
  return mesh;
}

// Kuhn/Freudenthal subdivision: all six tetrahedra share the cube's main
// diagonal, so red refinement stays conforming and shape regular.
inline Mesh<3> build_uniform_mesh_3d(int M, const Eigen::Vector3d& lo = {-1, -1, -1},
                                     const Eigen::Vector3d& hi = {1, 1, 1}) {
  if (M < 1) throw std::invalid_argument("build_uniform_mesh_3d: M must be >= 1");
  Mesh<3> mesh;
  mesh.domain_lo = lo;
  mesh.domain_hi = hi;
  const Eigen::Vector3d h = (hi - lo) / M;
  auto vid = [&](int i, int j, int k) { return (k * (M + 1) + j) * (M + 1) + i; };
  for (int k = 0; k <= M; ++k)
    for (int j = 0; j <= M; ++j)
      for (int i = 0; i <= M; ++i)
        mesh.vertices.push_back(
            {lo.x() + i * h.x(), lo.y() + j * h.y(), lo.z() + k * h.z()});
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int k = 0; k < M; ++k)
    for (int j = 0; j < M; ++j)
      for (int i = 0; i < M; ++i) {
        for (const auto& p : perms) {
          std::array<int, 3> c = {i, j, k};
          std::array<int, 4> tet;
          tet[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            c[p[s]] += 1;
            tet[s + 1] = vid(c[0], c[1], c[2]);
          }
          mesh.elements.push_back(tet);
        }
      }
  mesh.fix_orientation();
  mesh.build_face_table();
  return mesh;
}

// Uniform (red) refinement: edge-midpoint split into 4 triangles, or Bey's
// split into 8 tetrahedra using the m02-m13 octahedron diagonal.
template <int N>
Mesh<N> refine_uniform(const Mesh<N>& coarse) {
  Mesh<N> fine;
  fine.domain_lo = coarse.domain_lo;
  fine.domain_hi = coarse.domain_hi;
  fine.level = coarse.level + 1;
  fine.vertices = coarse.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    int id = fine.num_vertices();
    fine.vertices.push_back(0.5 * (coarse.vertices[a] + coarse.vertices[b]));
    midpoint.emplace(key, id);
    return id;
  };
  for (int e = 0; e < coarse.num_elements(); ++e) {
    const auto& el = coarse.elements[e];
    if constexpr (N == 2) {
      int v0 = el[0], v1 = el[1], v2 = el[2];
      int m01 = mid(v0, v1), m02 = mid(v0, v2), m12 = mid(v1, v2);
      std::array<std::array<int, 3>, 4> kids = {{{v0, m01, m02},
                                                 {m01, v1, m12},
                                                 {m02, m12, v2},
                                                 {m01, m12, m02}}};
      for (auto& kid : kids) {
        fine.elements.push_back(kid);
        fine.parent_elements.push_back(e);
      }
    } else {
      int v0 = el[0], v1 = el[1], v2 = el[2], v3 = el[3];
      int m01 = mid(v0, v1), m02 = mid(v0, v2), m03 = mid(v0, v3);
      int m12 = mid(v1, v2), m13 = mid(v1, v3), m23 = mid(v2, v3);
      // the interior octahedron is split along its shortest diagonal, which
      // keeps the children's diameters at half the parent's under repeated
      // refinement (a fixed diagonal degrades shape from the second level on)
      auto d2 = [&](int a, int b) {
        return (fine.vertices[a] - fine.vertices[b]).squaredNorm();
      };
      double dAF = d2(m01, m23), dBE = d2(m02, m13), dCD = d2(m03, m12);
      std::array<std::array<int, 4>, 4> inner;
      if (dBE <= dAF && dBE <= dCD)
        inner = {{{m02, m13, m01, m03},
                  {m02, m13, m03, m23},
                  {m02, m13, m23, m12},
                  {m02, m13, m12, m01}}};
      else if (dAF <= dCD)
        inner = {{{m01, m23, m02, m03},
                  {m01, m23, m03, m13},
                  {m01, m23, m13, m12},
                  {m01, m23, m12, m02}}};
      else
        inner = {{{m03, m12, m01, m02},
                  {m03, m12, m02, m23},
                  {m03, m12, m23, m13},
                  {m03, m12, m13, m01}}};
      std::array<std::array<int, 4>, 8> kids = {{{v0, m01, m02, m03},
                                                 {m01, v1, m12, m13},
                                                 {m02, m12, v2, m23},
                                                 {m03, m13, m23, v3},
                                                 inner[0],
                                                 inner[1],
                                                 inner[2],
                                                 inner[3]}};
      for (auto& kid : kids) {
        fine.elements.push_back(kid);
        fine.parent_elements.push_back(e);
      }
    }
  }
  fine.fix_orientation();
  fine.build_face_table();
  return fine;
}

// Nested meshes from coarse to fine; each level refines the previous.
template <int N>
struct MeshHierarchy {
  std::vector<Mesh<N>> levels;

  const Mesh<N>& finest() const { return levels.back(); }
  int num_levels() const { return static_cast<int>(levels.size()); }

  static MeshHierarchy from_coarse(Mesh<N> coarse, int refinements) {
    MeshHierarchy h;
    h.levels.push_back(std::move(coarse));
    for (int l = 0; l < refinements; ++l) h.levels.push_back(refine_uniform(h.levels.back()));
    return h;
  }
};

// Legacy ASCII VTK export (unstructured grid), with optional cell scalars.
template <int N>
void write_vtk(const Mesh<N>& mesh, const std::string& path,
               const std::vector<double>& cell_data = {},
               const std::string& data_name = "tag") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "# vtk DataFile Version 3.0\nifem mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices) {
    out << v.x() << " " << v.y() << " " << (N == 3 ? v[2] : 0.0) << "\n";
  }
  out << "CELLS " << mesh.num_elements() << " " << mesh.num_elements() * (N + 2) << "\n";
  for (const auto& el : mesh.elements) {
    out << (N + 1);
    for (int i = 0; i <= N; ++i) out << " " << el[i];
    out << "\n";
  }
  out << "CELL_TYPES " << mesh.num_elements() << "\n";
  for (int e = 0; e < mesh.num_elements(); ++e) out << (N == 2 ? 5 : 10) << "\n";
  if (!cell_data.empty()) {
    out << "CELL_DATA " << mesh.num_elements() << "\n";
    out << "SCALARS " << data_name << " double 1\nLOOKUP_TABLE default\n";
    for (double d : cell_data) out << d << "\n";
  }
}

}  // namespace ifem
