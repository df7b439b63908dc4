#pragma once

// Dense linear-algebra substrate shared by every other module: SVD with rank
// truncation, spectral function calculus on F F^T / F^T F, SPD solves and the
// plain-text matrix dump used by fixtures and exported artifacts.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include "dynareg/error.hpp"

namespace dynareg {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative cutoff below which singular values are treated as zero.
inline constexpr double kRankCutoff = 1e-12;

/// Thin SVD  A = U diag(sigma) V^T  restricted to the numerical rank.
struct SpectralDecomposition {
  Matrix left_vectors;     // rows x rank
  Vector singular_values;  // nonincreasing, all > kRankCutoff * sigma_1
  Matrix right_vectors;    // cols x rank
  Index rows = 0;
  Index cols = 0;

  Index rank() const { return singular_values.size(); }

  Matrix reconstruct() const {
    return left_vectors * singular_values.asDiagonal() *
           right_vectors.transpose();
  }
};

enum class Side { left, right };

inline bool all_finite(const Eigen::Ref<const Matrix>& a) {
  return a.allFinite();
}

/// Replaces `a` by (a + a^T) / 2 so that it is exactly symmetric.
inline void symmetrize(Matrix& a) {
  Matrix t = 0.5 * (a + a.transpose());
  a = std::move(t);
}

inline double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric,
                                            Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric,
                                            Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

inline SpectralDecomposition svd(const Matrix& a,
                                 double rel_cutoff = kRankCutoff) {
  detail::require(a.rows() >= 1 && a.cols() >= 1,
                  "svd: matrix must have at least one row and column");
  if (!a.allFinite()) {
    throw InvalidArgument("svd: matrix contains non-finite entries");
  }
  Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = dec.singularValues();
  Index rank = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double threshold = rel_cutoff * s(0);
    while (rank < s.size() && s(rank) > threshold) ++rank;
  }
  SpectralDecomposition out;
  out.rows = a.rows();
  out.cols = a.cols();
  out.singular_values = s.head(rank);
  out.left_vectors = dec.matrixU().leftCols(rank);
  out.right_vectors = dec.matrixV().leftCols(rank);
  return out;
}

/// Evaluates f on F F^T (Side::left) or F^T F (Side::right), where F is the
/// decomposed matrix. The spectral variable is lambda = sigma^2; the orthogonal
/// complement of the retained singular subspace carries f(0).
template <class Fn>
Matrix apply_spectral_function(const SpectralDecomposition& dec, Fn&& f,
                               Side side) {
  const Matrix& basis =
      side == Side::left ? dec.left_vectors : dec.right_vectors;
  const Index dim = side == Side::left ? dec.rows : dec.cols;

  const double at_zero = f(0.0);
  if (!std::isfinite(at_zero)) {
    throw InvalidArgument("apply_spectral_function: f(0) is not finite");
  }
  Vector shifted(dec.rank());
  for (Index i = 0; i < dec.rank(); ++i) {
    const double lambda = dec.singular_values(i) * dec.singular_values(i);
    const double value = f(lambda);
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "apply_spectral_function: f(" << lambda << ") is not finite";
      throw InvalidArgument(msg.str());
    }
    shifted(i) = value - at_zero;
  }
  Matrix out = basis * shifted.asDiagonal() * basis.transpose();
  out.diagonal().array() += at_zero;
  symmetrize(out);
  return out;
}

namespace detail {

// Index of the first pivot where an unpivoted Cholesky factorization breaks
// down, or -1 when every pivot is positive.
inline Index first_bad_pivot(const Matrix& a) {
  const Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) return j;
    l(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return -1;
}

}  // namespace detail

/// Solves A X = B for symmetric positive definite A.
/// Throws NumericError naming the failing pivot when A is singular or
/// indefinite.
inline Matrix solve_sym(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == a.cols(), "solve_sym: matrix is not square");
  detail::require(a.rows() == b.rows(), "solve_sym: right-hand side has " +
                                            std::to_string(b.rows()) +
                                            " rows, expected " +
                                            std::to_string(a.rows()));
  if (!a.allFinite() || !b.allFinite()) {
    throw NumericError("solve_sym: non-finite input");
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    const Index pivot = detail::first_bad_pivot(a);
    throw NumericError("solve_sym: matrix is singular or indefinite at pivot " +
                       std::to_string(pivot));
  }
  return llt.solve(b);
}

// Matrix text dump: "rows cols" on the first line, then one line per row with
// space-separated entries printed with 17 significant digits.

inline void write_matrix(std::ostream& out, const Matrix& a) {
  out << a.rows() << ' ' << a.cols() << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j) out << ' ';
      out << a(i, j);
    }
    out << '\n';
  }
}

inline Matrix read_matrix(std::istream& in) {
  long rows = -1, cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    throw InvalidArgument("read_matrix: malformed header");
  }
  Matrix a(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      if (!(in >> a(i, j))) {
        throw InvalidArgument("read_matrix: missing entry at row " +
                              std::to_string(i) + ", column " +
                              std::to_string(j));
      }
    }
  }
  if (!a.allFinite()) throw InvalidArgument("read_matrix: non-finite entry");
  return a;
}

inline void save_matrix(const std::string& path, const Matrix& a) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_matrix(out, a);
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_matrix(in);
}

}  // namespace dynareg
