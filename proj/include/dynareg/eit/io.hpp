#pragma once

// Text exports for the EIT test bed: mesh dump, per-triangle CSV and PGM
// rasterization of reconstructions.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dynareg/eit/mesh.hpp"
#include "dynareg/operator_core.hpp"

namespace dynareg::eit {

/// Sections "nodes", "triangles" and "boundary", each introduced by a header
/// line with the section name and its entry count.
inline void write_mesh(std::ostream& out, const DiskMesh& mesh) {
  out << "# disk mesh, n_rings " << mesh.n_rings << '\n';
  out << std::setprecision(17);
  out << "nodes " << mesh.nodes.size() << '\n';
  for (const Point& p : mesh.nodes) out << p.x() << ' ' << p.y() << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (const Triangle& t : mesh.triangles) {
    out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  out << "boundary " << mesh.boundary.size() << '\n';
  for (int v : mesh.boundary) out << v << '\n';
}

inline std::string field_csv(const DiskMesh& mesh, const Vector& gamma) {
  detail::require(gamma.size() == mesh.triangle_count(),
                  "field_csv: field length does not match triangle count");
  std::ostringstream out;
  out << std::setprecision(17) << "triangle,cx,cy,area,gamma\n";
  for (Index e = 0; e < mesh.triangle_count(); ++e) {
    const Point c = mesh.centroid(e);
    out << e << ',' << c.x() << ',' << c.y() << ',' << mesh.areas[e] << ','
        << gamma(e) << '\n';
  }
  return out.str();
}

/// Maps pixels of a square image over [-1, 1]^2 to mesh triangles once, so
/// frames can be rasterized cheaply. Row 0 is the top (y = 1).
class Rasterizer {
 public:
  explicit Rasterizer(const DiskMesh& mesh, int size = 200)
      : size_(size), owner_(static_cast<std::size_t>(size) * size, -1) {
    detail::require(size >= 1, "Rasterizer: size must be >= 1");
    for (Index e = 0; e < mesh.triangle_count(); ++e) {
      const Triangle& t = mesh.triangles[e];
      const Point& a = mesh.nodes[t[0]];
      const Point& b = mesh.nodes[t[1]];
      const Point& c = mesh.nodes[t[2]];
      const double xmin = std::min({a.x(), b.x(), c.x()});
      const double xmax = std::max({a.x(), b.x(), c.x()});
      const double ymin = std::min({a.y(), b.y(), c.y()});
      const double ymax = std::max({a.y(), b.y(), c.y()});
      const int c0 = std::max(0, column_of(xmin) - 1);
      const int c1 = std::min(size_ - 1, column_of(xmax) + 1);
      const int r0 = std::max(0, row_of(ymax) - 1);
      const int r1 = std::min(size_ - 1, row_of(ymin) + 1);
      for (int r = r0; r <= r1; ++r) {
        for (int col = c0; col <= c1; ++col) {
          const Point p = pixel_center(r, col);
          if (p.norm() > 1.0) continue;
          const double eps = -1e-14;
          if (signed_area(a, b, p) >= eps && signed_area(b, c, p) >= eps &&
              signed_area(c, a, p) >= eps) {
            int& slot = owner_[static_cast<std::size_t>(r) * size_ + col];
            if (slot < 0) slot = static_cast<int>(e);
          }
        }
      }
    }
  }

  int size() const { return size_; }

  /// Triangle covering pixel (row, col), or -1 outside the mesh.
  int owner(int row, int col) const {
    return owner_[static_cast<std::size_t>(row) * size_ + col];
  }

  /// Plain PGM (P2). Gray levels map [min, max] of the field linearly onto
  /// [0, 255]; the range and the gray level of gamma = 0 are recorded in
  /// comments. Pixels outside the mesh are 0.
  std::string pgm(const Vector& gamma) const {
    const double lo = gamma.size() ? gamma.minCoeff() : 0.0;
    const double hi = gamma.size() ? gamma.maxCoeff() : 0.0;
    auto level = [&](double v) {
      if (!(hi > lo)) return 0;
      return static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo)));
    };
    std::ostringstream out;
    out << std::setprecision(17);
    out << "P2\n# gamma_min=" << lo << " gamma_max=" << hi << '\n'
        << "# zero_level=" << level(std::clamp(0.0, lo, hi)) << '\n'
        << size_ << ' ' << size_ << "\n255\n";
    for (int r = 0; r < size_; ++r) {
      for (int c = 0; c < size_; ++c) {
        const int e = owner(r, c);
        if (c) out << ' ';
        out << (e < 0 ? 0 : level(gamma(e)));
      }
      out << '\n';
    }
    return out.str();
  }

 private:
  Point pixel_center(int row, int col) const {
    const double step = 2.0 / size_;
    return {-1.0 + (col + 0.5) * step, 1.0 - (row + 0.5) * step};
  }
  int column_of(double x) const {
    return static_cast<int>(std::floor((x + 1.0) * size_ / 2.0));
  }
  int row_of(double y) const {
    return static_cast<int>(std::floor((1.0 - y) * size_ / 2.0));
  }

  int size_;
  std::vector<int> owner_;
};

}  // namespace dynareg::eit
