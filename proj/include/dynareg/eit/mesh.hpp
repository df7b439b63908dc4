#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dynareg/error.hpp"
#include "dynareg/operator_core.hpp"

namespace dynareg::eit {

namespace detail {
using ::dynareg::detail::require;
}  // namespace detail

using Point = Eigen::Vector2d;
using Triangle = std::array<int, 3>;

/// P1 triangulation of the unit disk. Triangles are counterclockwise; the
/// boundary cycle runs counterclockwise starting at angle 0.
struct DiskMesh {
  int n_rings = 0;
  std::vector<Point> nodes;
  std::vector<Triangle> triangles;
  std::vector<int> boundary;
  std::vector<double> areas;

  Index node_count() const { return static_cast<Index>(nodes.size()); }
  Index triangle_count() const { return static_cast<Index>(triangles.size()); }
  Index boundary_count() const { return static_cast<Index>(boundary.size()); }

  Point centroid(Index e) const {
    const Triangle& t = triangles[e];
    return (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]) / 3.0;
  }

  double total_area() const {
    double a = 0.0;
    for (double x : areas) a += x;
    return a;
  }

  double perimeter() const {
    double len = 0.0;
    for (std::size_t i = 0; i < boundary.size(); ++i) {
      len += (nodes[boundary[(i + 1) % boundary.size()]] - nodes[boundary[i]])
                 .norm();
    }
    return len;
  }

  void validate() const;
};

inline double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) -
                (c.x() - a.x()) * (b.y() - a.y()));
}

inline void DiskMesh::validate() const {
  for (std::size_t e = 0; e < triangles.size(); ++e) {
    for (int v : triangles[e]) {
      detail::require(v >= 0 && v < node_count(),
                      "DiskMesh: triangle refers to a missing node");
    }
    detail::require(areas[e] > 0.0, "DiskMesh: triangle " + std::to_string(e) +
                                        " has nonpositive area");
  }
  for (int v : boundary) {
    detail::require(std::abs(nodes[v].norm() - 1.0) <= 1e-12,
                    "DiskMesh: boundary node off the unit circle");
  }
  std::map<std::pair<int, int>, int> edge_use;
  for (const Triangle& t : triangles) {
    for (int i = 0; i < 3; ++i) {
      int a = t[i], b = t[(i + 1) % 3];
      if (a > b) std::swap(a, b);
      detail::require(++edge_use[{a, b}] <= 2,
                      "DiskMesh: edge shared by more than two triangles");
    }
  }
  // Connectivity over shared nodes.
  std::vector<int> parent(nodes.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = int(i);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Triangle& t : triangles) {
    parent[find(t[1])] = find(t[0]);
    parent[find(t[2])] = find(t[0]);
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    detail::require(find(int(i)) == find(0), "DiskMesh: mesh is not connected");
  }
}

/// Concentric-ring triangulation: ring j (radius j / n_rings) carries 6 j
/// nodes, a single node sits at the center, and adjacent rings are zipped
/// together by angle. Yields 1 + 3 n (n + 1) nodes and 6 n^2 triangles.
inline DiskMesh build_disk_mesh(int n_rings) {
  detail::require(n_rings >= 2, "build_disk_mesh: need n_rings >= 2");
  DiskMesh mesh;
  mesh.n_rings = n_rings;
  mesh.nodes.emplace_back(0.0, 0.0);

  std::vector<std::vector<int>> rings{{0}};
  for (int j = 1; j <= n_rings; ++j) {
    const double radius = static_cast<double>(j) / n_rings;
    const int count = 6 * j;
    std::vector<int> ring;
    for (int i = 0; i < count; ++i) {
      const double angle = 2.0 * std::numbers::pi * i / count;
      ring.push_back(static_cast<int>(mesh.nodes.size()));
      if (j == n_rings) {
        mesh.nodes.emplace_back(std::cos(angle), std::sin(angle));
      } else {
        mesh.nodes.emplace_back(radius * std::cos(angle),
                                radius * std::sin(angle));
      }
    }
    rings.push_back(std::move(ring));
  }

  auto add = [&](int a, int b, int c) {
    if (signed_area(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) < 0.0) {
      std::swap(b, c);
    }
    mesh.triangles.push_back({a, b, c});
  };

  for (int k = 0; k < 6; ++k) add(0, rings[1][k], rings[1][(k + 1) % 6]);
  for (int j = 2; j <= n_rings; ++j) {
    const auto& inner = rings[j - 1];
    const auto& outer = rings[j];
    const int ni = static_cast<int>(inner.size());
    const int no = static_cast<int>(outer.size());
    int i = 0, k = 0;
    while (i < ni || k < no) {
      // Advance on the ring whose next node comes first in angle; the
      // comparison (k+1)/no <= (i+1)/ni is done in integers.
      const bool step_outer =
          k < no && (i >= ni || (k + 1) * ni <= (i + 1) * no);
      if (step_outer) {
        add(inner[i % ni], outer[k], outer[(k + 1) % no]);
        ++k;
      } else {
        add(inner[i], outer[k % no], inner[(i + 1) % ni]);
        ++i;
      }
    }
  }

  mesh.boundary = rings[n_rings];
  mesh.areas.reserve(mesh.triangles.size());
  for (const Triangle& t : mesh.triangles) {
    mesh.areas.push_back(
        signed_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]));
  }
  return mesh;
}

}  // namespace dynareg::eit
