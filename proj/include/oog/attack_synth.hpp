#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "oog/linalg.hpp"
#include "oog/system_model.hpp"

namespace oog {

/// Exact zero-order-hold discretization of x' = Ax + Ba at step t_s.
struct DiscretizedSystem {
  Mat A_d;
  Mat B_d;
  double t_s = 0.0;
};

/// Finite-horizon lifted input/output maps: stacked y_p = T_p a, y_r = T_r a
/// for sample indices k = 0..N (N+1 samples of each signal).
struct LiftedOperators {
  Mat T_p;
  Mat T_r;
  int N = 0;
  double t_s = 0.0;
};

/// Piecewise-constant (ZOH) attack signal.
struct AttackSignal {
  std::vector<Vec> samples;
  double t_s = 0.0;

  Vec reconstruct(double t) const {
    if (t < 0.0) throw std::invalid_argument("AttackSignal: t must be nonnegative");
    const auto k = static_cast<size_t>(std::floor(t / t_s));
    if (k < samples.size()) return samples[k];
    return Vec::Zero(samples.empty() ? 0 : samples.front().size());
  }
};

inline DiscretizedSystem discretize(const Mat& A, const Mat& B, double t_s) {
  if (t_s <= 0.0) throw std::invalid_argument("discretize: t_s must be positive");
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  Mat M = Mat::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = A;
  M.topRightCorner(n, m) = B;
  const Mat E = expm(M * t_s);
  DiscretizedSystem d;
  d.A_d = E.topLeftCorner(n, n);
  d.B_d = E.topRightCorner(n, m);
  d.t_s = t_s;
  return d;
}

/// Block (k, j) of T_p is C_p A_d^{k-1-j} B_d for j < k and zero otherwise
/// (strictly lower: y_p has no feedthrough from a); T_r adds D_r on the block
/// diagonal. Rows k = 0..N.
inline LiftedOperators build_lifted(const DiscretizedSystem& dsys, const Mat& C_p, const Mat& C_r,
                                    const Mat& D_r, int N) {
  if (N < 1) throw std::invalid_argument("build_lifted: N must be >= 1");
  const int n_yp = static_cast<int>(C_p.rows());
  const int n_y = static_cast<int>(C_r.rows());
  const int n_a = static_cast<int>(dsys.B_d.cols());
  LiftedOperators L;
  L.N = N;
  L.t_s = dsys.t_s;
  L.T_p = Mat::Zero((N + 1) * n_yp, (N + 1) * n_a);
  L.T_r = Mat::Zero((N + 1) * n_y, (N + 1) * n_a);
  for (int k = 0; k <= N; ++k) L.T_r.block(k * n_y, k * n_a, n_y, n_a) = D_r;
  // Diagonal-band reuse: the block for lag d = k-1-j depends only on d.
  Mat Ad_pow = Mat::Identity(dsys.A_d.rows(), dsys.A_d.cols());
  for (int d = 0; d <= N - 1; ++d) {
    const Mat Gp = C_p * Ad_pow * dsys.B_d;
    const Mat Gr = C_r * Ad_pow * dsys.B_d;
    for (int j = 0; j + d + 1 <= N; ++j) {
      const int k = j + d + 1;
      L.T_p.block(k * n_yp, j * n_a, n_yp, n_a) = Gp;
      L.T_r.block(k * n_y, j * n_a, n_y, n_a) = Gr;
    }
    Ad_pow = dsys.A_d * Ad_pow;
  }
  return L;
}

struct SynthesisResult {
  AttackSignal attack;
  double achieved_ratio = 0.0;
  Vec stacked;  // the lifted vector a, unit residual energy
};

/// Maximize a' T_p'T_p a subject to a' T_r'T_r a = 1 via the symmetric
/// generalized eigenvalue reduction: Cholesky M_r = L L', then the top
/// eigenpair of L^{-1} M_p L^{-T}.
inline SynthesisResult synthesize(const LiftedOperators& lifted) {
  const Mat M_p = lifted.T_p.transpose() * lifted.T_p;
  const Mat M_r = lifted.T_r.transpose() * lifted.T_r;
  Eigen::LLT<Mat> llt(M_r);
  if (llt.info() != Eigen::Success) {
    const int r = numeric_rank(M_r);
    throw std::domain_error("synthesize: T_r'T_r is singular (rank " + std::to_string(r) + " of " +
                            std::to_string(M_r.rows()) +
                            "); residual feedthrough must have full column rank");
  }
  const Mat Lc = llt.matrixL();
  // W = L^{-1} M_p L^{-T}, symmetric reduction of the pencil (M_p, M_r).
  Mat W = Lc.triangularView<Eigen::Lower>().solve(M_p);
  W = Lc.triangularView<Eigen::Lower>().solve(Mat(W.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(W));
  const int last = static_cast<int>(W.rows()) - 1;
  SynthesisResult out;
  out.achieved_ratio = es.eigenvalues()[last];
  Vec v = es.eigenvectors().col(last);
  if (M_p.norm() == 0.0) {  // degenerate objective: pick the first basis direction
    out.achieved_ratio = 0.0;
    v = Vec::Unit(W.rows(), 0);
  }
  Vec a = Lc.transpose().triangularView<Eigen::Upper>().solve(v);
  const double c = std::sqrt(a.dot(M_r * a));
  a /= c;
  for (int i = 0; i < a.size(); ++i) {
    if (std::abs(a[i]) > 1e-12) {
      if (a[i] < 0.0) a = -a;
      break;
    }
  }
  out.stacked = a;
  const int n_a = static_cast<int>(lifted.T_p.cols()) / (lifted.N + 1);
  out.attack.t_s = lifted.t_s;
  out.attack.samples.reserve(lifted.N + 1);
  for (int k = 0; k <= lifted.N; ++k) out.attack.samples.push_back(a.segment(k * n_a, n_a));
  return out;
}

}  // namespace oog
