#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "oog/constraints.hpp"
#include "oog/freq_analysis.hpp"
#include "oog/oog_bound.hpp"
#include "oog/simulate.hpp"
#include "oog/system_model.hpp"

namespace oog {

using json = nlohmann::json;

class scenario_error : public std::runtime_error {
 public:
  explicit scenario_error(const std::string& what) : std::runtime_error(what) {}
};

/// Model-channel nonlinearity slot: dynamics coupling (Q_p, R_p), its sector
/// class, and the instance used in simulation.
struct ChannelSpec {
  Mat Q_p;
  Mat R_p;
  std::vector<SectorBound> sectors;  // one per scalar sub-channel (R_p rows)
  double tau = 1.0;
  Nonlinearity phi;
};

struct Scenario {
  std::string name;
  std::string description;
  PlantModel plant;
  ControllerGains gains;
  AttackStructure attack;
  std::vector<ChannelSpec> channels;
  std::vector<SectorBound> measurement_sectors;
  double measurement_tau = 1.0;
  Nonlinearity measurement_phi;

  double t_s = 0.1;
  double horizon = 15.0;
  double step = 0.01;
  FrequencyGrid grid = make_default_grid();
  double gamma_lo = 1e-6;
  double gamma_hi = 1e6;
  DetectorConfig detector;
};

namespace detail {

inline const json& require_field(const json& j, const std::string& key,
                                 const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) throw scenario_error(context + ": missing field '" + key + "'");
  return *it;
}

inline Mat parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw scenario_error(field + ": expected a non-empty array of rows");
  }
  const size_t rows = j.size();
  const size_t cols = j.front().size();
  Mat M(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw scenario_error(field + ": row " + std::to_string(r) + " has " +
                           std::to_string(row.size()) + " entries, expected " +
                           std::to_string(cols));
    }
    for (size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw scenario_error(field + ": entry (" + std::to_string(r) + "," + std::to_string(c) +
                             ") is not a number");
      }
      M(r, c) = row[c].get<double>();
    }
  }
  return M;
}

inline std::vector<SectorBound> parse_sectors(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw scenario_error(field + ": expected array of [lo, hi]");
  std::vector<SectorBound> out;
  for (size_t i = 0; i < j.size(); ++i) {
    const auto& p = j[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw scenario_error(field + "[" + std::to_string(i) + "]: expected [mu_minus, mu_plus]");
    }
    SectorBound s;
    s.mu_minus = p[0].get<double>();
    s.mu_plus = p[1].get<double>();
    if (s.mu_minus > s.mu_plus) {
      throw scenario_error(field + "[" + std::to_string(i) + "]: mu_minus exceeds mu_plus");
    }
    out.push_back(s);
  }
  return out;
}

inline Nonlinearity parse_nonlinearity(const json& j, const std::string& field) {
  Nonlinearity phi;
  const std::string kind = require_field(j, "kind", field).get<std::string>();
  if (kind == "identity") {
    phi.kind = Nonlinearity::Kind::identity;
  } else if (kind == "sine_offset") {
    phi.kind = Nonlinearity::Kind::sine_offset;
  } else if (kind == "saturation") {
    phi.kind = Nonlinearity::Kind::saturation;
  } else if (kind == "linear_gain") {
    phi.kind = Nonlinearity::Kind::linear_gain;
  } else {
    throw scenario_error(field + ": unknown nonlinearity kind '" + kind + "'");
  }
  if (phi.kind != Nonlinearity::Kind::identity) {
    const json& params = require_field(j, "params", field);
    if (!params.is_array() || params.empty()) {
      throw scenario_error(field + ".params: expected a non-empty numeric array");
    }
    phi.params.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) phi.params[i] = params[i].get<double>();
  }
  return phi;
}

}  // namespace detail

inline Scenario parse_scenario(const json& j, const std::string& context = "scenario") {
  Scenario s;
  const std::string schema = detail::require_field(j, "schema", context).get<std::string>();
  if (schema != "oog-scenario/1") {
    throw scenario_error(context + ": unsupported schema '" + schema + "'");
  }
  s.name = j.value("name", std::string("unnamed"));
  s.description = j.value("description", std::string());

  const json& plant = detail::require_field(j, "plant", context);
  s.plant.A_p = detail::parse_matrix(detail::require_field(plant, "A_p", "plant"), "plant.A_p");
  s.plant.B_p = detail::parse_matrix(detail::require_field(plant, "B_p", "plant"), "plant.B_p");
  s.plant.C_mo = detail::parse_matrix(detail::require_field(plant, "C_mo", "plant"), "plant.C_mo");
  s.plant.C_po = detail::parse_matrix(detail::require_field(plant, "C_po", "plant"), "plant.C_po");
  if (plant.contains("D_po")) {
    s.plant.D_po = detail::parse_matrix(plant["D_po"], "plant.D_po");
  } else {
    s.plant.D_po = Mat::Zero(s.plant.C_po.rows(), s.plant.B_p.cols());
  }
  if (plant.contains("channels")) {
    const json& chans = plant["channels"];
    for (size_t i = 0; i < chans.size(); ++i) {
      const std::string ctx = "plant.channels[" + std::to_string(i) + "]";
      ChannelSpec ch;
      ch.Q_p = detail::parse_matrix(detail::require_field(chans[i], "Q_p", ctx), ctx + ".Q_p");
      ch.R_p = detail::parse_matrix(detail::require_field(chans[i], "R_p", ctx), ctx + ".R_p");
      ch.sectors =
          detail::parse_sectors(detail::require_field(chans[i], "sectors", ctx), ctx + ".sectors");
      if (static_cast<int>(ch.sectors.size()) != ch.R_p.rows()) {
        throw scenario_error(ctx + ": sectors count must equal R_p rows");
      }
      ch.tau = chans[i].value("tau", 1.0);
      ch.phi = chans[i].contains("nonlinearity")
                   ? detail::parse_nonlinearity(chans[i]["nonlinearity"], ctx + ".nonlinearity")
                   : Nonlinearity{};
      s.plant.Q_p.push_back(ch.Q_p);
      s.plant.R_p.push_back(ch.R_p);
      s.channels.push_back(ch);
    }
  }

  const json& gains = detail::require_field(j, "gains", context);
  s.gains.K = detail::parse_matrix(detail::require_field(gains, "K", "gains"), "gains.K");
  s.gains.L = detail::parse_matrix(detail::require_field(gains, "L", "gains"), "gains.L");

  const json& attack = detail::require_field(j, "attack", context);
  s.attack.Gamma_y =
      detail::parse_matrix(detail::require_field(attack, "Gamma_y", "attack"), "attack.Gamma_y");

  const json& mc = detail::require_field(j, "measurement_class", context);
  s.measurement_sectors = detail::parse_sectors(
      detail::require_field(mc, "sectors", "measurement_class"), "measurement_class.sectors");
  s.measurement_tau = mc.value("tau", 1.0);
  if (static_cast<int>(s.measurement_sectors.size()) != s.plant.C_mo.rows()) {
    throw scenario_error("measurement_class.sectors: need one sector per measurement channel (" +
                         std::to_string(s.plant.C_mo.rows()) + ")");
  }
  s.attack.F_m = sectors_to_form(s.measurement_sectors);
  s.attack.gamma_full_column_rank =
      numeric_rank(s.attack.Gamma_y) == s.attack.Gamma_y.cols();

  s.measurement_phi =
      j.contains("measurement_nonlinearity")
          ? detail::parse_nonlinearity(j["measurement_nonlinearity"], "measurement_nonlinearity")
          : Nonlinearity{};

  if (j.contains("analysis")) {
    const json& an = j["analysis"];
    s.t_s = an.value("t_s", s.t_s);
    s.horizon = an.value("horizon", s.horizon);
    s.step = an.value("step", s.step);
    s.gamma_lo = an.value("gamma_lo", s.gamma_lo);
    s.gamma_hi = an.value("gamma_hi", s.gamma_hi);
    if (an.contains("grid")) {
      const json& g = an["grid"];
      s.grid = make_default_grid(g.value("omega_min", 1e-3), g.value("omega_max", 1e4),
                                 g.value("points_per_decade", 400));
    }
    if (s.t_s <= 0.0 || s.step <= 0.0 || s.horizon <= 0.0) {
      throw scenario_error("analysis: t_s, horizon and step must be positive");
    }
  }
  if (j.contains("detector")) {
    const json& d = j["detector"];
    s.detector.epsilon_tr = d.value("epsilon_tr", 1.0);
    s.detector.epsilon_nl = d.value("epsilon_nl", -1e-9);
    const std::string mode = d.value("mode", std::string("energy"));
    if (mode == "energy") {
      s.detector.mode = DetectorConfig::Mode::energy;
    } else if (mode == "nonlinear") {
      s.detector.mode = DetectorConfig::Mode::nonlinear;
    } else if (mode == "both") {
      s.detector.mode = DetectorConfig::Mode::both;
    } else {
      throw scenario_error("detector.mode: expected energy|nonlinear|both");
    }
    if (s.detector.epsilon_tr <= 0.0) throw scenario_error("detector.epsilon_tr must be positive");
  }

  check_plant_dims(s.plant);
  require_dims(s.gains.K.rows() == s.plant.A_p.rows() && s.gains.K.cols() == s.plant.C_mo.rows(),
               "gains.K", "plant", "K must be n_x x n_y");
  require_dims(s.gains.L.rows() == s.plant.B_p.cols() && s.gains.L.cols() == s.plant.A_p.rows(),
               "gains.L", "plant", "L must be n_u x n_x");
  require_dims(s.attack.Gamma_y.rows() == s.plant.C_mo.rows(), "attack.Gamma_y", "plant.C_mo",
               "Gamma_y must have n_y rows");
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw scenario_error(path + ": cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw scenario_error(path + ": JSON parse error: " + e.what());
  }
  return parse_scenario(j, path);
}

/// Composite class ordered as the augmented stack: model channels, then the
/// measurement channel.
inline CompositeForm scenario_form(const Scenario& s) {
  std::vector<QuadraticForm> parts;
  std::vector<double> taus;
  for (const auto& ch : s.channels) {
    parts.push_back(sectors_to_form(ch.sectors));
    taus.push_back(ch.tau);
  }
  parts.push_back(sectors_to_form(s.measurement_sectors));
  taus.push_back(s.measurement_tau);
  return compose(parts, taus);
}

inline NonlinearityStack scenario_stack(const Scenario& s) {
  NonlinearityStack stack;
  for (const auto& ch : s.channels) stack.parts.push_back(ch.phi);
  stack.parts.push_back(s.measurement_phi);
  return stack;
}

inline ClosedLoopSystem scenario_closed_loop(const Scenario& s) {
  return build_closed_loop(s.plant, s.gains, s.attack);
}

// ---------------------------------------------------------------------------
// Small output helpers shared by the CLI and tests
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fnv1a64_hex(const std::string& bytes) {
  std::ostringstream os;
  os << std::hex << fnv1a64(bytes);
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.precision(17);
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

inline json matrix_to_json(const Mat& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace oog
