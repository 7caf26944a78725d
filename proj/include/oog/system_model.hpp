#pragma once

#include <string>
#include <vector>

#include "oog/constraints.hpp"
#include "oog/linalg.hpp"

namespace oog {

/// Plant with N >= 0 static nonlinearity channels:
///   x_p' = A_p x_p + B_p u + sum_i Q_pi * phi_i(R_pi x_p)
///   y_m  = C_mo x_p,   y_p = C_po x_p + D_po u
struct PlantModel {
  Mat A_p;
  Mat B_p;
  std::vector<Mat> Q_p;  // n_x  x n_xi_i
  std::vector<Mat> R_p;  // n_si x n_x
  Mat C_mo;
  Mat C_po;
  Mat D_po;

  int n_x() const { return static_cast<int>(A_p.rows()); }
  int n_u() const { return static_cast<int>(B_p.cols()); }
  int n_y() const { return static_cast<int>(C_mo.rows()); }
  int n_yp() const { return static_cast<int>(C_po.rows()); }
  int n_channels() const { return static_cast<int>(Q_p.size()); }
};

/// Observer-based output-feedback gains: u = L x_hat, observer gain K.
struct ControllerGains {
  Mat K;  // n_x x n_y
  Mat L;  // n_u x n_x
};

/// Additive sensor-attack structure: received measurement
/// y_tilde = phi(y_m) + Gamma_y a with phi constrained by the class form F_m.
struct AttackStructure {
  Mat Gamma_y;        // n_y x n_a
  QuadraticForm F_m;  // over (xi_m, y_m), size 2 n_y
  bool gamma_full_column_rank = true;  // diagnostic flag, not a hard error
};

/// Closed loop in the state x = [x_p; e], e = x_p - x_hat:
///   x' = A x + sum_i Q_i xi_i + Q_m xi_m + B a
///   y_m = C_m x, y_p = C_p x, y_r = C_r x + xi_m + D_r a
struct ClosedLoopSystem {
  Mat A;
  std::vector<Mat> Q_list;
  Mat Q_m;
  Mat B;
  std::vector<Mat> R_list;
  Mat C_m;
  Mat C_p;
  Mat C_r;
  Mat D_r;

  int n() const { return static_cast<int>(A.rows()); }
  int n_y() const { return static_cast<int>(C_m.rows()); }
  int n_yp() const { return static_cast<int>(C_p.rows()); }
  int n_a() const { return static_cast<int>(B.cols()); }

  /// Loop matrix with the measurement channel at its nominal pass-through
  /// (xi_m = y_m) and model channels open. This closure carries the
  /// separation eigenstructure eig(A_p+B_pL) U eig(A_p-KC_mo); the raw A keeps
  /// the displayed block formula and has the measurement path open.
  Mat linear_loop_matrix() const { return A + Q_m * C_m; }

  /// Effective residual output matrix of the pass-through loop:
  /// with xi_m = y_m, y_r = (C_r + C_m) x + D_r a.
  Mat C_r_effective() const { return C_r + C_m; }
};

/// Stacked nonlinearity bookkeeping: xi = [xi_1;...;xi_N; xi_m],
/// sigma = [sigma_1;...;sigma_N; y_m] = R x, x' = A x + Q xi + B a,
/// y_r = C_r x + Q_r xi + D_r a.
struct AugmentedSystem {
  Mat R;    // (sum n_si + n_y) x n
  Mat Q;    // n x (sum n_xi + n_y)
  Mat Q_r;  // n_y x (sum n_xi + n_y), selects xi_m

  int n_xi() const { return static_cast<int>(Q.cols()); }
  int n_sigma() const { return static_cast<int>(R.rows()); }
};

struct DiagnosticsReport {
  int controllability_rank = 0;
  int observability_rank = 0;
  bool controllable = false;
  bool observable = false;
  bool dimensions_ok = true;
  std::vector<std::string> notes;
};

inline void check_plant_dims(const PlantModel& p) {
  const int nx = p.n_x();
  require_dims(p.A_p.rows() == p.A_p.cols(), "A_p", "A_p", "must be square");
  require_dims(p.B_p.rows() == nx, "A_p", "B_p",
               "row counts " + std::to_string(nx) + " vs " + std::to_string(p.B_p.rows()));
  require_dims(p.C_mo.cols() == nx, "A_p", "C_mo", "state dimension");
  require_dims(p.C_po.cols() == nx, "A_p", "C_po", "state dimension");
  require_dims(p.D_po.rows() == p.C_po.rows(), "C_po", "D_po", "output row counts");
  require_dims(p.D_po.cols() == p.B_p.cols(), "B_p", "D_po", "input column counts");
  require_dims(p.Q_p.size() == p.R_p.size(), "Q_p", "R_p", "channel list lengths");
  for (size_t i = 0; i < p.Q_p.size(); ++i) {
    require_dims(p.Q_p[i].rows() == nx, "A_p", "Q_p[" + std::to_string(i) + "]", "state dimension");
    require_dims(p.R_p[i].cols() == nx, "A_p", "R_p[" + std::to_string(i) + "]", "state dimension");
  }
}

/// Assemble the attacked observer-based closed loop. State ordering [x_p; e].
inline ClosedLoopSystem build_closed_loop(const PlantModel& plant, const ControllerGains& gains,
                                          const AttackStructure& attack) {
  check_plant_dims(plant);
  const int nx = plant.n_x();
  const int ny = plant.n_y();
  require_dims(gains.K.rows() == nx && gains.K.cols() == ny, "K", "plant",
               "expected " + std::to_string(nx) + "x" + std::to_string(ny));
  require_dims(gains.L.cols() == nx && gains.L.rows() == plant.n_u(), "L", "plant",
               "expected " + std::to_string(plant.n_u()) + "x" + std::to_string(nx));
  require_dims(attack.Gamma_y.rows() == ny, "Gamma_y", "C_mo", "measurement dimension");

  const int n = 2 * nx;
  const int na = static_cast<int>(attack.Gamma_y.cols());

  ClosedLoopSystem sys;
  sys.A.setZero(n, n);
  sys.A.topLeftCorner(nx, nx) = plant.A_p + plant.B_p * gains.L;
  sys.A.topRightCorner(nx, nx) = -plant.B_p * gains.L;
  sys.A.bottomLeftCorner(nx, nx) = gains.K * plant.C_mo;
  sys.A.bottomRightCorner(nx, nx) = plant.A_p - gains.K * plant.C_mo;

  for (size_t i = 0; i < plant.Q_p.size(); ++i) {
    Mat Qi(n, plant.Q_p[i].cols());
    Qi.topRows(nx) = plant.Q_p[i];
    Qi.bottomRows(nx) = plant.Q_p[i];
    sys.Q_list.push_back(Qi);
    Mat Ri(plant.R_p[i].rows(), n);
    Ri.leftCols(nx) = plant.R_p[i];
    Ri.rightCols(nx).setZero();
    sys.R_list.push_back(Ri);
  }

  sys.Q_m.setZero(n, ny);
  sys.Q_m.bottomRows(nx) = -gains.K;

  sys.B.setZero(n, na);
  sys.B.bottomRows(nx) = -gains.K * attack.Gamma_y;

  sys.C_m.setZero(ny, n);
  sys.C_m.leftCols(nx) = plant.C_mo;

  sys.C_p.setZero(plant.n_yp(), n);
  sys.C_p.leftCols(nx) = plant.C_po + plant.D_po * gains.L;
  sys.C_p.rightCols(nx) = -plant.D_po * gains.L;

  sys.C_r.setZero(ny, n);
  sys.C_r.leftCols(nx) = -plant.C_mo;
  sys.C_r.rightCols(nx) = plant.C_mo;

  sys.D_r = attack.Gamma_y;
  return sys;
}

/// Stack model channels (1..N) and the measurement channel (m), in that order.
inline AugmentedSystem augment(const ClosedLoopSystem& sys) {
  const int n = sys.n();
  const int ny = sys.n_y();
  int n_si = 0, n_xi = 0;
  for (const auto& Ri : sys.R_list) n_si += static_cast<int>(Ri.rows());
  for (const auto& Qi : sys.Q_list) n_xi += static_cast<int>(Qi.cols());

  AugmentedSystem aug;
  aug.R.setZero(n_si + ny, n);
  aug.Q.setZero(n, n_xi + ny);
  aug.Q_r.setZero(ny, n_xi + ny);

  int row = 0;
  for (const auto& Ri : sys.R_list) {
    aug.R.middleRows(row, Ri.rows()) = Ri;
    row += static_cast<int>(Ri.rows());
  }
  aug.R.bottomRows(ny) = sys.C_m;

  int col = 0;
  for (const auto& Qi : sys.Q_list) {
    aug.Q.middleCols(col, Qi.cols()) = Qi;
    col += static_cast<int>(Qi.cols());
  }
  aug.Q.rightCols(ny) = sys.Q_m;
  aug.Q_r.rightCols(ny) = Mat::Identity(ny, ny);
  return aug;
}

/// Controllability/observability diagnostics; never throws on failure.
inline DiagnosticsReport validate(const PlantModel& plant) {
  DiagnosticsReport rep;
  try {
    check_plant_dims(plant);
  } catch (const dimension_error& e) {
    rep.dimensions_ok = false;
    rep.notes.push_back(e.what());
    return rep;
  }
  rep.controllability_rank = numeric_rank(controllability_matrix(plant.A_p, plant.B_p));
  rep.observability_rank =
      numeric_rank(controllability_matrix(plant.A_p.transpose(), plant.C_mo.transpose()));
  rep.controllable = rep.controllability_rank == plant.n_x();
  rep.observable = rep.observability_rank == plant.n_x();
  if (!rep.controllable) rep.notes.push_back("(A_p, B_p) is not controllable");
  if (!rep.observable) rep.notes.push_back("(A_p, C_mo) is not observable");
  return rep;
}

}  // namespace oog
