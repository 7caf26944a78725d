#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "oog/linalg.hpp"

namespace oog {

/// Quadratic constraint F(xi, sigma) = [xi; sigma]' F_bar [xi; sigma] >= 0.
struct QuadraticForm {
  Mat F_bar;
  int n_xi = 0;
  int n_sigma = 0;

  Mat F11() const { return F_bar.topLeftCorner(n_xi, n_xi); }
  Mat F12() const { return F_bar.topRightCorner(n_xi, n_sigma); }
  Mat F22() const { return F_bar.bottomRightCorner(n_sigma, n_sigma); }
};

/// Sector bounds mu_minus * sigma <= phi(sigma) <= mu_plus * sigma
/// (inequalities flipped for sigma < 0; i.e. mu- <= phi(sigma)/sigma <= mu+).
struct SectorBound {
  double mu_minus = 0.0;
  double mu_plus = 0.0;
};

/// Weighted sum of per-channel forms on the stacked (xi, sigma) vectors.
struct CompositeForm {
  std::vector<QuadraticForm> parts;
  std::vector<double> taus;
  Mat F11;
  Mat F12;
  Mat F22;

  int n_xi() const { return static_cast<int>(F11.rows()); }
  int n_sigma() const { return static_cast<int>(F22.rows()); }

  Mat F_bar() const {
    const int nx = n_xi(), ns = n_sigma();
    Mat F(nx + ns, nx + ns);
    F.topLeftCorner(nx, nx) = F11;
    F.topRightCorner(nx, ns) = F12;
    F.bottomLeftCorner(ns, nx) = F12.transpose();
    F.bottomRightCorner(ns, ns) = F22;
    return F;
  }
};

/// Scalar sector class as a quadratic form: F(xi, sigma) = (xi - mu- sigma)(mu+ sigma - xi).
inline QuadraticForm sector_to_form(const SectorBound& s) {
  QuadraticForm f;
  f.n_xi = 1;
  f.n_sigma = 1;
  f.F_bar.resize(2, 2);
  f.F_bar << -1.0, 0.5 * (s.mu_minus + s.mu_plus), 0.5 * (s.mu_minus + s.mu_plus),
      -s.mu_minus * s.mu_plus;
  return f;
}

/// Channel-wise (diagonal) repetition of scalar sectors over a vector channel.
inline QuadraticForm sectors_to_form(const std::vector<SectorBound>& sectors) {
  const int c = static_cast<int>(sectors.size());
  QuadraticForm f;
  f.n_xi = c;
  f.n_sigma = c;
  f.F_bar.setZero(2 * c, 2 * c);
  for (int j = 0; j < c; ++j) {
    f.F_bar(j, j) = -1.0;
    f.F_bar(j, c + j) = f.F_bar(c + j, j) = 0.5 * (sectors[j].mu_minus + sectors[j].mu_plus);
    f.F_bar(c + j, c + j) = -sectors[j].mu_minus * sectors[j].mu_plus;
  }
  return f;
}

/// Certify sector bounds for a scalar nonlinearity by grid sampling of
/// phi(sigma)/sigma, with the sigma = 0 limit taken from a central-difference
/// derivative and the result widened by an absolute safety margin.
inline SectorBound estimate_sector(const std::function<double(double)>& phi, double lo, double hi,
                                   double step = 1e-3, double margin = 1e-4) {
  if (!(lo < hi) || !(step > 0.0)) throw std::invalid_argument("estimate_sector: empty grid");
  double mn = std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  const long steps = static_cast<long>(std::floor((hi - lo) / step + 0.5));
  long evaluated = 0;
  for (long k = 0; k <= steps; ++k) {
    const double s = lo + static_cast<double>(k) * step;
    if (std::abs(s) < 1e-12) continue;
    const double r = phi(s) / s;
    mn = std::min(mn, r);
    mx = std::max(mx, r);
    ++evaluated;
  }
  if (evaluated == 0) throw std::invalid_argument("estimate_sector: empty grid");
  const double h = 1e-6;
  const double d0 = (phi(h) - phi(-h)) / (2.0 * h);
  mn = std::min(mn, d0);
  mx = std::max(mx, d0);
  return SectorBound{mn - margin, mx + margin};
}

/// Assemble sum_j tau_j F_j on the stacked (xi, sigma) vector, parts placed at
/// their augmentation offsets in order.
inline CompositeForm compose(const std::vector<QuadraticForm>& forms,
                             const std::vector<double>& taus) {
  if (forms.size() != taus.size()) {
    throw std::invalid_argument("compose: forms/taus length mismatch");
  }
  for (double t : taus) {
    if (!(t > 0.0)) throw std::invalid_argument("compose: tau must be positive");
  }
  int nx = 0, ns = 0;
  for (const auto& f : forms) {
    nx += f.n_xi;
    ns += f.n_sigma;
  }
  CompositeForm comp;
  comp.parts = forms;
  comp.taus = taus;
  comp.F11.setZero(nx, nx);
  comp.F12.setZero(nx, ns);
  comp.F22.setZero(ns, ns);
  int ox = 0, os = 0;
  for (size_t j = 0; j < forms.size(); ++j) {
    const auto& f = forms[j];
    const double t = taus[j];
    comp.F11.block(ox, ox, f.n_xi, f.n_xi) = t * f.F11();
    comp.F12.block(ox, os, f.n_xi, f.n_sigma) = t * f.F12();
    comp.F22.block(os, os, f.n_sigma, f.n_sigma) = t * f.F22();
    ox += f.n_xi;
    os += f.n_sigma;
  }
  return comp;
}

inline double evaluate(const QuadraticForm& form, const Vec& xi, const Vec& sigma) {
  require_dims(xi.size() == form.n_xi && sigma.size() == form.n_sigma, "form", "(xi, sigma)",
               "block sizes");
  Vec z(xi.size() + sigma.size());
  z << xi, sigma;
  return z.dot(form.F_bar * z);
}

inline double evaluate(const CompositeForm& form, const Vec& xi, const Vec& sigma) {
  require_dims(xi.size() == form.n_xi() && sigma.size() == form.n_sigma(), "form", "(xi, sigma)",
               "block sizes");
  return xi.dot(form.F11 * xi) + 2.0 * xi.dot(form.F12 * sigma) + sigma.dot(form.F22 * sigma);
}

/// Hermitian extension z* F_bar z (real for symmetric real F_bar).
inline double evaluate_hermitian(const QuadraticForm& form, const CVec& z) {
  require_dims(z.size() == form.n_xi + form.n_sigma, "form", "z", "total size");
  return (z.adjoint() * form.F_bar * z)(0).real();
}

inline double evaluate_hermitian(const CompositeForm& form, const CVec& z) {
  const Mat F = form.F_bar();
  require_dims(z.size() == F.rows(), "form", "z", "total size");
  return (z.adjoint() * F * z)(0).real();
}

}  // namespace oog
