#pragma once

// P1 finite elements for div(sigma grad u) = 0 on the disk mesh, the discrete
// Neumann-to-Dirichlet map built from the Schur complement of the stiffness
// matrix on the boundary nodes, and its exact derivative at sigma = 1.
//
// The ND map is represented symmetrically as
//
//   G(sigma) = M^{1/2} P S(sigma)^+ P M^{1/2},
//
// where S is the Schur complement, M the boundary mass matrix and P the
// projector onto mean-zero boundary vectors. G is similar to S^+ M, so
// trace(G1 G2) is the Hilbert-Schmidt pairing of the underlying boundary
// operators.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dynareg/eit/mesh.hpp"
#include "dynareg/error.hpp"
#include "dynareg/operator_core.hpp"

namespace dynareg::eit {

/// Boundary mass matrix  M_il = \int_{boundary} phi_l phi_i  for traces of P1
/// functions on the polygonal boundary, indexed by position in the boundary
/// cycle.
inline Matrix boundary_mass(const DiskMesh& mesh) {
  const Index nb = mesh.boundary_count();
  detail::require(nb >= 2, "boundary_mass: boundary cycle is empty");
  Matrix m = Matrix::Zero(nb, nb);
  for (Index i = 0; i < nb; ++i) {
    const Index j = (i + 1) % nb;
    const double h =
        (mesh.nodes[mesh.boundary[j]] - mesh.nodes[mesh.boundary[i]]).norm();
    m(i, i) += h / 3.0;
    m(j, j) += h / 3.0;
    m(i, j) += h / 6.0;
    m(j, i) += h / 6.0;
  }
  return m;
}

/// Mesh plus everything about the discretization that does not depend on the
/// conductivity: unit-coefficient element matrices, the interior/boundary
/// index split, M and M^{1/2}.
class FemSpace {
 public:
  explicit FemSpace(DiskMesh mesh) : mesh_(std::move(mesh)) {
    mesh_.validate();
    const Index nn = mesh_.node_count();
    local_.reserve(mesh_.triangles.size());
    for (Index e = 0; e < mesh_.triangle_count(); ++e) {
      const Triangle& t = mesh_.triangles[e];
      const Point& p0 = mesh_.nodes[t[0]];
      const Point& p1 = mesh_.nodes[t[1]];
      const Point& p2 = mesh_.nodes[t[2]];
      const Eigen::Vector3d b(p1.y() - p2.y(), p2.y() - p0.y(),
                              p0.y() - p1.y());
      const Eigen::Vector3d c(p2.x() - p1.x(), p0.x() - p2.x(),
                              p1.x() - p0.x());
      const double area = mesh_.areas[e];
      local_.push_back((b * b.transpose() + c * c.transpose()) / (4.0 * area));
    }

    on_boundary_.assign(nn, 0);
    for (int v : mesh_.boundary) on_boundary_[v] = 1;
    slot_.assign(nn, -1);
    for (std::size_t i = 0; i < mesh_.boundary.size(); ++i) {
      slot_[mesh_.boundary[i]] = static_cast<int>(i);
    }
    for (Index v = 0; v < nn; ++v) {
      if (!on_boundary_[v]) {
        slot_[v] = static_cast<int>(interior_.size());
        interior_.push_back(static_cast<int>(v));
      }
    }
    detail::require(!interior_.empty(), "FemSpace: mesh has no interior nodes");

    mass_ = boundary_mass(mesh_);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(mass_);
    mass_sqrt_ = eig.eigenvectors() *
                 eig.eigenvalues().cwiseSqrt().asDiagonal() *
                 eig.eigenvectors().transpose();
    symmetrize(mass_sqrt_);
  }

  const DiskMesh& mesh() const { return mesh_; }
  const Eigen::Matrix3d& local_stiffness(Index e) const { return local_[e]; }
  const std::vector<int>& interior() const { return interior_; }
  const std::vector<int>& boundary() const { return mesh_.boundary; }
  Index boundary_count() const { return mesh_.boundary_count(); }
  Index interior_count() const { return static_cast<Index>(interior_.size()); }

  /// Position of node v inside the boundary cycle or the interior list.
  int slot(int v) const { return slot_[v]; }
  bool is_boundary(int v) const { return on_boundary_[v] != 0; }

  const Matrix& mass() const { return mass_; }
  const Matrix& mass_sqrt() const { return mass_sqrt_; }

 private:
  DiskMesh mesh_;
  std::vector<Eigen::Matrix3d> local_;
  std::vector<int> interior_;
  std::vector<int> slot_;
  std::vector<char> on_boundary_;
  Matrix mass_;
  Matrix mass_sqrt_;
};

/// Stiffness matrix for an arbitrary (possibly signed) piecewise-constant
/// coefficient. Linear in the coefficient.
inline Matrix assemble_weighted(const FemSpace& space, const Vector& coeff) {
  const DiskMesh& mesh = space.mesh();
  detail::require(coeff.size() == mesh.triangle_count(),
                  "assemble: coefficient length does not match triangle count");
  Matrix a = Matrix::Zero(mesh.node_count(), mesh.node_count());
  for (Index e = 0; e < mesh.triangle_count(); ++e) {
    const Triangle& t = mesh.triangles[e];
    const Eigen::Matrix3d& k = space.local_stiffness(e);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(t[i], t[j]) += coeff(e) * k(i, j);
  }
  return a;
}

/// Stiffness matrix A_ij = \int sigma grad phi_i . grad phi_j for a positive
/// conductivity.
inline Matrix assemble_stiffness(const FemSpace& space, const Vector& sigma) {
  detail::require(sigma.size() == space.mesh().triangle_count(),
                  "assemble_stiffness: conductivity length does not match "
                  "triangle count");
  for (Index e = 0; e < sigma.size(); ++e) {
    if (!(sigma(e) > 0.0)) {
      throw InvalidArgument("assemble_stiffness: conductivity on triangle " +
                            std::to_string(e) + " is not positive");
    }
  }
  return assemble_weighted(space, sigma);
}

namespace detail {

inline Matrix gather(const Matrix& a, const std::vector<int>& rows,
                     const std::vector<int>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

inline Matrix mean_zero_projector(Index n) {
  Matrix p = Matrix::Identity(n, n);
  p.array() -= 1.0 / static_cast<double>(n);
  return p;
}

// Schur complement on the boundary and the interior factorization it used.
struct Condensed {
  Eigen::LLT<Matrix> interior;
  Matrix coupling;  // A_IB
  Matrix schur;     // A_BB - A_BI A_II^{-1} A_IB
};

inline Condensed condense(const FemSpace& space, const Matrix& a) {
  Condensed c;
  const Matrix a_ii = gather(a, space.interior(), space.interior());
  c.coupling = gather(a, space.interior(), space.boundary());
  c.interior.compute(a_ii);
  if (c.interior.info() != Eigen::Success) {
    throw NumericError("nd_map: interior stiffness block is not positive "
                       "definite");
  }
  c.schur = gather(a, space.boundary(), space.boundary()) -
            c.coupling.transpose() * c.interior.solve(c.coupling);
  symmetrize(c.schur);
  return c;
}

// S^+ R for mean-zero columns R: ground boundary node 0, solve the reduced
// system, then remove the mean.
inline Matrix grounded_solve(const Matrix& schur, const Matrix& rhs) {
  const Index nb = schur.rows();
  Eigen::LLT<Matrix> llt(schur.bottomRightCorner(nb - 1, nb - 1));
  if (llt.info() != Eigen::Success) {
    throw NumericError("nd_map: Schur complement is singular on mean-zero "
                       "boundary vectors");
  }
  Matrix x = Matrix::Zero(nb, rhs.cols());
  x.bottomRows(nb - 1) = llt.solve(rhs.bottomRows(nb - 1));
  x.rowwise() -= x.colwise().mean();
  return x;
}

}  // namespace detail

struct NDMap {
  Matrix g;
  std::string gauge;
};

inline constexpr const char* kGauge =
    "mean-zero boundary projector P, node 0 grounded; G = M^1/2 P S^+ P M^1/2";

inline NDMap nd_map(const FemSpace& space, const Vector& sigma) {
  const Matrix a = assemble_stiffness(space, sigma);
  const detail::Condensed c = detail::condense(space, a);
  const Matrix h =
      detail::mean_zero_projector(space.boundary_count()) * space.mass_sqrt();
  NDMap out;
  out.g = h.transpose() * detail::grounded_solve(c.schur, h);
  symmetrize(out.g);
  out.gauge = kGauge;
  return out;
}

/// Hilbert-Schmidt inner product trace(A^T B).
inline double hs_inner(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "hs_inner: dimension mismatch");
  return (a.array() * b.array()).sum();
}

inline double hs_inner(const NDMap& a, const NDMap& b) {
  return hs_inner(a.g, b.g);
}

/// Column-major flattening; hs_inner becomes the Euclidean dot product.
inline Vector flatten(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

inline Matrix unflatten(const Vector& v, Index n) {
  detail::require(v.size() == n * n, "unflatten: length is not n^2");
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

/// Exact derivative of gamma -> G(1 + gamma) at gamma = 0, assembled as an
/// (n_b^2) x (n_triangles) matrix acting on per-triangle values.
///
/// With the background harmonic extension Z = E S^+ P M^{1/2}
/// (E = [-A_II^{-1} A_IB; I]), the derivative of S is E^T A(gamma) E and
///   dG = -Z^T A(gamma) Z = -sum_e gamma_e Z_e^T K_e Z_e.
class LinearizedForward {
 public:
  explicit LinearizedForward(const FemSpace& space)
      : nb_(space.boundary_count()), areas_(space.mesh().areas.size()) {
    const DiskMesh& mesh = space.mesh();
    for (Index e = 0; e < mesh.triangle_count(); ++e) areas_(e) = mesh.areas[e];

    const Matrix a = assemble_weighted(space, Vector::Ones(mesh.triangle_count()));
    const detail::Condensed c = detail::condense(space, a);
    const Matrix h = detail::mean_zero_projector(nb_) * space.mass_sqrt();
    const Matrix on_boundary = detail::grounded_solve(c.schur, h);
    const Matrix inside = -c.interior.solve(c.coupling * on_boundary);

    background_.g = h.transpose() * on_boundary;
    symmetrize(background_.g);
    background_.gauge = kGauge;

    Matrix z(mesh.node_count(), nb_);
    for (Index v = 0; v < mesh.node_count(); ++v) {
      const int s = space.slot(static_cast<int>(v));
      z.row(v) = space.is_boundary(static_cast<int>(v)) ? on_boundary.row(s)
                                                        : inside.row(s);
    }

    jacobian_.resize(nb_ * nb_, mesh.triangle_count());
    Matrix ze(3, nb_);
    for (Index e = 0; e < mesh.triangle_count(); ++e) {
      const Triangle& t = mesh.triangles[e];
      for (int i = 0; i < 3; ++i) ze.row(i) = z.row(t[i]);
      Matrix block = -(ze.transpose() * space.local_stiffness(e) * ze);
      symmetrize(block);
      jacobian_.col(e) = flatten(block);
    }
  }

  Index boundary_count() const { return nb_; }
  const Matrix& jacobian() const { return jacobian_; }
  const NDMap& background() const { return background_; }

  /// dG for a per-triangle perturbation gamma.
  Matrix apply(const Vector& gamma) const {
    detail::require(gamma.size() == jacobian_.cols(),
                    "LinearizedForward: gamma length does not match triangle "
                    "count");
    return unflatten(jacobian_ * gamma, nb_);
  }

  /// Adjoint with respect to the area-weighted parameter inner product
  /// sum_e area_e gamma_e eta_e and the Hilbert-Schmidt data inner product.
  Vector adjoint(const Matrix& w) const {
    detail::require(w.rows() == nb_ && w.cols() == nb_,
                    "LinearizedForward: adjoint argument has wrong size");
    return (jacobian_.transpose() * flatten(w)).cwiseQuotient(areas_);
  }

 private:
  Index nb_;
  Vector areas_;
  NDMap background_;
  Matrix jacobian_;
};

}  // namespace dynareg::eit
