#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "oog/attack_synth.hpp"
#include "oog/constraints.hpp"
#include "oog/linalg.hpp"
#include "oog/system_model.hpp"

namespace oog {

/// Channel-wise static nonlinearity with phi(0) = 0 for every built-in kind.
struct Nonlinearity {
  enum class Kind { identity, sine_offset, saturation, linear_gain, custom };
  Kind kind = Kind::identity;
  Vec params;  // per-channel: c (sine_offset), limit (saturation), mu (linear_gain)
  std::function<Vec(const Vec&)> custom;

  Vec apply(const Vec& sigma) const {
    switch (kind) {
      case Kind::identity:
        return sigma;
      case Kind::sine_offset: {
        require_dims(params.size() == sigma.size(), "sine_offset: params/channel mismatch");
        Vec out(sigma.size());
        for (int j = 0; j < sigma.size(); ++j) out[j] = sigma[j] - params[j] * std::sin(sigma[j]);
        return out;
      }
      case Kind::saturation: {
        require_dims(params.size() == sigma.size(), "saturation: params/channel mismatch");
        Vec out(sigma.size());
        for (int j = 0; j < sigma.size(); ++j)
          out[j] = std::clamp(sigma[j], -params[j], params[j]);
        return out;
      }
      case Kind::linear_gain: {
        require_dims(params.size() == sigma.size(), "linear_gain: params/channel mismatch");
        return params.cwiseProduct(sigma);
      }
      case Kind::custom:
        if (!custom) throw std::invalid_argument("Nonlinearity: custom kind without a function");
        return custom(sigma);
    }
    throw std::logic_error("Nonlinearity: unknown kind");
  }
};

/// One nonlinearity per constraint channel block, ordered as the augmented
/// signal stack: model channels 1..N, then the measurement channel.
struct NonlinearityStack {
  std::vector<Nonlinearity> parts;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> x;         // closed-loop state (2 n_x)
  std::vector<Vec> a;         // attack sample in effect (ZOH value)
  std::vector<Vec> sigma;     // stacked nonlinearity inputs R x
  std::vector<Vec> xi;        // stacked nonlinearity outputs Phi(sigma)
  std::vector<Vec> y_m;       // plant measurement C_m x
  std::vector<Vec> y_m_tilde; // attacked measurement phi(y_m) + Gamma_y a
  std::vector<Vec> y_p;       // performance output
  std::vector<Vec> y_r;       // residual C_r x + Q_r xi + D_r a
  double h = 0.0;
  bool diverged = false;
};

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> E_p;    // running trapezoidal integral of |y_p|^2
  std::vector<double> E_r;    // running trapezoidal integral of |y_r|^2
  std::vector<double> ratio;  // E_p/E_r, NaN where E_r < eps_div
  double final_ratio = std::numeric_limits<double>::quiet_NaN();
  bool final_defined = false;
  double eps_div = 1e-12;
};

struct DetectorConfig {
  enum class Mode { energy, nonlinear, both };
  double epsilon_tr = 1.0;
  double epsilon_nl = -1e-9;
  Mode mode = Mode::energy;
};

struct DetectionRecord {
  bool energy_alarm = false;
  double energy_alarm_time = std::numeric_limits<double>::quiet_NaN();
  bool nonlinear_alarm = false;
  double nonlinear_alarm_time = std::numeric_limits<double>::quiet_NaN();
};

enum class MonitorMode { pointwise, integral };

struct ViolationRecord {
  struct PartRecord {
    double min_value = std::numeric_limits<double>::infinity();
    double min_time = std::numeric_limits<double>::quiet_NaN();
    bool violated = false;
  };
  std::vector<PartRecord> parts;
  MonitorMode mode = MonitorMode::pointwise;
};

namespace detail {

inline std::vector<int> channel_sizes(const ClosedLoopSystem& sys) {
  std::vector<int> sizes;
  for (const auto& R_i : sys.R_list) sizes.push_back(static_cast<int>(R_i.rows()));
  sizes.push_back(sys.n_y());
  return sizes;
}

inline Vec apply_stack(const NonlinearityStack& Phi, const std::vector<int>& sizes,
                       const Vec& sigma) {
  Vec xi(sigma.size());
  int off = 0;
  for (size_t p = 0; p < sizes.size(); ++p) {
    xi.segment(off, sizes[p]) = Phi.parts[p].apply(sigma.segment(off, sizes[p]));
    off += sizes[p];
  }
  return xi;
}

}  // namespace detail

/// Fixed-step classical RK4 on x' = A x + Q xi + B a with xi = Phi(R x) and
/// the attack held at its ZOH value from the step start. The step h must
/// divide the attack's t_s so steps align with sample boundaries.
inline Trajectory integrate(const ClosedLoopSystem& sys, const AugmentedSystem& aug,
                            const NonlinearityStack& Phi, const AttackSignal* attack, const Vec& x0,
                            double h, double T_end, double divergence_guard = 1e9) {
  if (h <= 0.0) throw std::invalid_argument("integrate: h must be positive");
  const auto sizes = detail::channel_sizes(sys);
  if (Phi.parts.size() != sizes.size()) {
    throw std::invalid_argument("integrate: nonlinearity stack has " +
                                std::to_string(Phi.parts.size()) + " parts, system has " +
                                std::to_string(sizes.size()) + " channel blocks");
  }
  int steps_per_sample = 0;
  if (attack != nullptr && !attack->samples.empty()) {
    const double q = attack->t_s / h;
    steps_per_sample = static_cast<int>(std::round(q));
    if (steps_per_sample < 1 || std::abs(q - steps_per_sample) > 1e-9 * q) {
      throw std::invalid_argument("integrate: h must divide the attack sampling step t_s");
    }
  }
  const int n_a = static_cast<int>(sys.B.cols());
  const int n_steps = static_cast<int>(std::round(T_end / h));

  auto attack_at_step = [&](int k) -> Vec {
    if (steps_per_sample == 0) return Vec::Zero(n_a);
    const size_t idx = static_cast<size_t>(k / steps_per_sample);
    if (idx < attack->samples.size()) return attack->samples[idx];
    return Vec::Zero(n_a);
  };
  auto rhs = [&](const Vec& x, const Vec& a_now) -> Vec {
    const Vec sig = aug.R * x;
    const Vec xi = detail::apply_stack(Phi, sizes, sig);
    return sys.A * x + aug.Q * xi + sys.B * a_now;
  };

  Trajectory traj;
  traj.h = h;
  Vec x = x0;
  for (int k = 0; k <= n_steps; ++k) {
    const Vec a_now = attack_at_step(k);
    const Vec sig = aug.R * x;
    const Vec xi = detail::apply_stack(Phi, sizes, sig);
    const Vec ym = sys.C_m * x;
    const Vec xim = xi.tail(sys.n_y());
    traj.times.push_back(k * h);
    traj.x.push_back(x);
    traj.a.push_back(a_now);
    traj.sigma.push_back(sig);
    traj.xi.push_back(xi);
    traj.y_m.push_back(ym);
    traj.y_m_tilde.push_back(xim + sys.D_r * a_now);
    traj.y_p.push_back(sys.C_p * x);
    traj.y_r.push_back(sys.C_r * x + aug.Q_r * xi + sys.D_r * a_now);
    if (x.norm() > divergence_guard) {
      traj.diverged = true;
      break;
    }
    if (k == n_steps) break;
    const Vec k1 = rhs(x, a_now);
    const Vec k2 = rhs(x + 0.5 * h * k1, a_now);
    const Vec k3 = rhs(x + 0.5 * h * k2, a_now);
    const Vec k4 = rhs(x + h * k3, a_now);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return traj;
}

inline EnergyReport energies(const Trajectory& traj, double eps_div = 1e-12) {
  if (traj.times.empty()) throw std::invalid_argument("energies: empty trajectory");
  EnergyReport rep;
  rep.eps_div = eps_div;
  rep.times = traj.times;
  double Ep = 0.0, Er = 0.0;
  double prev_p = traj.y_p.front().squaredNorm();
  double prev_r = traj.y_r.front().squaredNorm();
  rep.E_p.push_back(0.0);
  rep.E_r.push_back(0.0);
  rep.ratio.push_back(std::numeric_limits<double>::quiet_NaN());
  for (size_t k = 1; k < traj.times.size(); ++k) {
    const double dt = traj.times[k] - traj.times[k - 1];
    const double cur_p = traj.y_p[k].squaredNorm();
    const double cur_r = traj.y_r[k].squaredNorm();
    Ep += 0.5 * dt * (prev_p + cur_p);
    Er += 0.5 * dt * (prev_r + cur_r);
    prev_p = cur_p;
    prev_r = cur_r;
    rep.E_p.push_back(Ep);
    rep.E_r.push_back(Er);
    rep.ratio.push_back(Er < eps_div ? std::numeric_limits<double>::quiet_NaN() : Ep / Er);
  }
  rep.final_defined = rep.E_r.back() >= eps_div;
  rep.final_ratio = rep.final_defined ? rep.E_p.back() / rep.E_r.back()
                                      : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

/// Energy mode alarms at the first time E_r(t) > epsilon_tr; nonlinear mode at
/// the first time the measurement-class form evaluated on the received
/// measurement and the observer prediction (y_m_tilde, y_m_tilde - y_r) drops
/// below epsilon_nl. The form is required for the nonlinear/both modes.
inline DetectionRecord detect(const Trajectory& traj, const DetectorConfig& cfg,
                              const QuadraticForm* measurement_form = nullptr) {
  DetectionRecord rec;
  const bool want_energy =
      cfg.mode == DetectorConfig::Mode::energy || cfg.mode == DetectorConfig::Mode::both;
  const bool want_nl =
      cfg.mode == DetectorConfig::Mode::nonlinear || cfg.mode == DetectorConfig::Mode::both;
  if (want_energy) {
    const EnergyReport rep = energies(traj);
    for (size_t k = 0; k < rep.times.size(); ++k) {
      if (rep.E_r[k] > cfg.epsilon_tr) {
        rec.energy_alarm = true;
        rec.energy_alarm_time = rep.times[k];
        break;
      }
    }
  }
  if (want_nl) {
    if (measurement_form == nullptr) {
      throw std::invalid_argument("detect: nonlinear mode needs the measurement-class form");
    }
    for (size_t k = 0; k < traj.times.size(); ++k) {
      const Vec y_hat = traj.y_m_tilde[k] - traj.y_r[k];
      if (evaluate(*measurement_form, traj.y_m_tilde[k], y_hat) < cfg.epsilon_nl) {
        rec.nonlinear_alarm = true;
        rec.nonlinear_alarm_time = traj.times[k];
        break;
      }
    }
  }
  return rec;
}

/// Pointwise mode: min over samples of each part's form value on (xi, sigma).
/// Integral mode: min over the sample sequence of the running trapezoidal
/// integral of each part's form value.
inline ViolationRecord constraint_monitor(const Trajectory& traj, const CompositeForm& form,
                                          MonitorMode mode, double tol = 1e-9) {
  ViolationRecord rec;
  rec.mode = mode;
  rec.parts.resize(form.parts.size());
  int off_xi = 0, off_s = 0;
  for (size_t p = 0; p < form.parts.size(); ++p) {
    const auto& qf = form.parts[p];
    auto& pr = rec.parts[p];
    double integral = 0.0, prev = 0.0;
    for (size_t k = 0; k < traj.times.size(); ++k) {
      const double v = evaluate(qf, traj.xi[k].segment(off_xi, qf.n_xi),
                                traj.sigma[k].segment(off_s, qf.n_sigma));
      double tracked = v;
      if (mode == MonitorMode::integral) {
        if (k > 0) integral += 0.5 * (traj.times[k] - traj.times[k - 1]) * (prev + v);
        prev = v;
        tracked = integral;
      }
      if (tracked < pr.min_value) {
        pr.min_value = tracked;
        pr.min_time = traj.times[k];
      }
    }
    pr.violated = pr.min_value < -tol;
    off_xi += qf.n_xi;
    off_s += qf.n_sigma;
  }
  return rec;
}

}  // namespace oog
