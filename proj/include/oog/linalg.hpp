#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace oog {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Thrown when matrix dimensions are inconsistent; names the offending pair.
class dimension_error : public std::invalid_argument {
 public:
  explicit dimension_error(const std::string& what) : std::invalid_argument(what) {}
};

inline void require_dims(bool ok, const std::string& lhs, const std::string& rhs,
                         const std::string& detail) {
  if (!ok) {
    throw dimension_error("dimension mismatch between " + lhs + " and " + rhs + ": " + detail);
  }
}

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw dimension_error("dimension mismatch: " + what);
}

/// Number of free entries of a dim x dim symmetric matrix.
inline int svec_size(int dim) { return dim * (dim + 1) / 2; }

/// Isometric vectorization of a symmetric matrix (off-diagonals scaled by sqrt 2),
/// so that svec(X) . svec(Y) = trace(XY).
inline Vec svec(const Mat& S) {
  const int n = static_cast<int>(S.rows());
  Vec out(svec_size(n));
  const double r2 = std::sqrt(2.0);
  int c = 0;
  for (int i = 0; i < n; ++i) {
    out[c++] = S(i, i);
    for (int j = i + 1; j < n; ++j) out[c++] = r2 * S(i, j);
  }
  return out;
}

/// Inverse of svec.
inline Mat smat(const Vec& v, int dim) {
  Mat S(dim, dim);
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  int c = 0;
  for (int i = 0; i < dim; ++i) {
    S(i, i) = v[c++];
    for (int j = i + 1; j < dim; ++j) {
      S(i, j) = S(j, i) = inv_r2 * v[c++];
    }
  }
  return S;
}

inline Mat symmetrize(const Mat& S) { return 0.5 * (S + S.transpose()); }

inline double lambda_max(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline double lambda_min(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double lambda_max_hermitian(const CMat& H) {
  CMat Hs = 0.5 * (H + H.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(Hs, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Nearest positive-semidefinite matrix (eigenvalue clipping).
inline Mat clip_psd(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S));
  Vec w = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

/// Nearest negative-semidefinite matrix.
inline Mat clip_nsd(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S));
  Vec w = es.eigenvalues().cwiseMin(0.0);
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

/// Matrix exponential (Pade with scaling and squaring, via Eigen).
inline Mat expm(const Mat& M) { return M.exp(); }

/// Eigenvalues sorted lexicographically by (real, imag).
inline std::vector<std::complex<double>> sorted_eigenvalues(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> ev(es.eigenvalues().data(),
                                       es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

/// Max deviation between two multisets of eigenvalues after (real, imag) sort.
inline double eigenvalue_multiset_distance(const Mat& A, const Mat& B) {
  auto ea = sorted_eigenvalues(A);
  auto eb = sorted_eigenvalues(B);
  if (ea.size() != eb.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (size_t i = 0; i < ea.size(); ++i) worst = std::max(worst, std::abs(ea[i] - eb[i]));
  return worst;
}

inline double spectral_abscissa(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

inline bool is_hurwitz(const Mat& A) { return spectral_abscissa(A) < 0.0; }

/// Numerical rank via SVD with relative tolerance.
inline int numeric_rank(const Mat& M, double rel_tol = 1e-9) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(M);
  const double thresh = rel_tol * std::max(1.0, svd.singularValues()[0]);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > thresh) ++r;
  }
  return r;
}

/// Controllability matrix [B, AB, ..., A^{n-1}B].
inline Mat controllability_matrix(const Mat& A, const Mat& B) {
  const int n = static_cast<int>(A.rows());
  Mat ctrb(n, n * B.cols());
  Mat blk = B;
  for (int k = 0; k < n; ++k) {
    ctrb.middleCols(k * B.cols(), B.cols()) = blk;
    blk = A * blk;
  }
  return ctrb;
}

inline bool is_controllable(const Mat& A, const Mat& B, double rel_tol = 1e-9) {
  return numeric_rank(controllability_matrix(A, B), rel_tol) == A.rows();
}

inline bool is_observable(const Mat& A, const Mat& C, double rel_tol = 1e-9) {
  return is_controllable(A.transpose(), C.transpose(), rel_tol);
}

/// Spectral norm (largest singular value).
inline double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()[0];
}

}  // namespace oog
