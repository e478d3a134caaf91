#include "ful/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <system_error>
#include <tuple>
#include <utility>

namespace ful {

namespace {

void require_kind(const jsonv& j, const char* kind) {
  if (!j.is_object()) throw std::invalid_argument("JSON document: object expected");
  if (j.value("schema", -1) != kSchemaVersion) {
    throw std::invalid_argument(std::string("JSON document: missing or unsupported schema "
                                            "version (expected ") +
                                std::to_string(kSchemaVersion) + ")");
  }
  if (j.value("kind", std::string()) != kind) {
    throw std::invalid_argument(std::string("JSON document: expected kind '") + kind +
                                "', got '" + j.value("kind", std::string()) + "'");
  }
}

jsonv matrix_to_json(const Eigen::MatrixXd& m) {
  jsonv rows = jsonv::array();
  for (int i = 0; i < m.rows(); ++i) {
    jsonv row = jsonv::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const jsonv& j, int cols) {
  if (!j.is_array()) throw std::invalid_argument("JSON matrix: array expected");
  Eigen::MatrixXd m(static_cast<int>(j.size()), cols);
  int i = 0;
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("JSON matrix: row width mismatch");
    }
    for (int k = 0; k < cols; ++k) m(i, k) = row.at(static_cast<size_t>(k)).get<double>();
    ++i;
  }
  return m;
}

jsonv vector_to_json(const Eigen::VectorXd& v) {
  jsonv a = jsonv::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const jsonv& j) {
  if (!j.is_array()) throw std::invalid_argument("JSON vector: array expected");
  Eigen::VectorXd v(static_cast<int>(j.size()));
  int i = 0;
  for (const auto& x : j) v(i++) = x.get<double>();
  return v;
}

// One weight block covers both sides: shared family/shape, per-side exponents.
jsonv weight_pair_to_json(const WeightSpec& wa, const WeightSpec& wb) {
  jsonv j;
  j["family"] = (wa.family == WeightSpec::Family::kPolynomialMax) ? "polynomial_max"
                                                                  : "log_cubed";
  j["s0"] = wa.s0;
  j["s"] = wa.s;
  j["c_s"] = wa.c_s;
  j["r_a"] = wa.r;
  j["r_b"] = wb.r;
  return j;
}

std::pair<WeightSpec, WeightSpec> weight_pair_from_json(const jsonv& j) {
  const std::string family = j.at("family").get<std::string>();
  const double ra = j.at("r_a").get<double>();
  const double rb = j.at("r_b").get<double>();
  if (family == "polynomial_max") {
    const double s0 = j.value("s0", 6.0);
    const double s = j.value("s", 10.0);
    const double c_s = j.value("c_s", 1e-6);
    return {polynomial_max_weight(s0, s, c_s, ra), polynomial_max_weight(s0, s, c_s, rb)};
  }
  if (family == "log_cubed") {
    return {log_cubed_weight(ra), log_cubed_weight(rb)};
  }
  throw std::invalid_argument("weight: unknown family '" + family + "'");
}

}  // namespace

std::string fmt_double(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) throw std::runtime_error("fmt_double: conversion failed");
  return std::string(buf, res.ptr);
}

jsonv complex_to_json(cplx v) { return jsonv::array({v.real(), v.imag()}); }

cplx complex_from_json(const jsonv& j) {
  if (!j.is_array() || j.size() != 2) {
    throw std::invalid_argument("JSON complex: [re, im] expected");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

jsonv to_json(const PointSet& s) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "point_set";
  j["dim"] = s.dim;
  j["radius"] = s.radius;
  j["provenance"] = s.provenance;
  j["points"] = matrix_to_json(s.points);
  return j;
}

PointSet point_set_from_json(const jsonv& j) {
  require_kind(j, "point_set");
  const int dim = j.at("dim").get<int>();
  return make_point_set(dim, matrix_from_json(j.at("points"), dim),
                        j.at("radius").get<double>(),
                        j.value("provenance", std::string()));
}

jsonv to_json(const WavePacketSum& f) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "wave_packet_sum";
  j["dim"] = f.dim;
  jsonv packets = jsonv::array();
  for (const WavePacket& p : f.packets) {
    jsonv pk;
    pk["amp"] = complex_to_json(p.amp);
    pk["x0"] = vector_to_json(p.center);
    pk["xi0"] = vector_to_json(p.freq);
    pk["R"] = p.scale;
    packets.push_back(std::move(pk));
  }
  j["packets"] = std::move(packets);
  return j;
}

WavePacketSum wave_packet_sum_from_json(const jsonv& j) {
  require_kind(j, "wave_packet_sum");
  const int dim = j.at("dim").get<int>();
  std::vector<WavePacket> packets;
  for (const auto& pk : j.at("packets")) {
    packets.push_back(make_wave_packet(complex_from_json(pk.at("amp")),
                                       vector_from_json(pk.at("x0")),
                                       vector_from_json(pk.at("xi0")),
                                       pk.at("R").get<double>()));
  }
  return make_wave_packet_sum(dim, std::move(packets));
}

jsonv to_json(const SignedMeasure& mu) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "signed_measure";
  j["dim"] = mu.dim;
  j["provenance"] = mu.provenance;
  j["atoms"] = matrix_to_json(mu.atoms);
  jsonv w = jsonv::array();
  for (int i = 0; i < mu.weights.size(); ++i) w.push_back(mu.weights(i));
  j["weights"] = std::move(w);
  j["tv"] = mu.total_variation();
  return j;
}

SignedMeasure signed_measure_from_json(const jsonv& j) {
  require_kind(j, "signed_measure");
  SignedMeasure mu;
  mu.dim = j.at("dim").get<int>();
  mu.atoms = matrix_from_json(j.at("atoms"), mu.dim);
  mu.weights = vector_from_json(j.at("weights"));
  if (mu.weights.size() != mu.atoms.rows()) {
    throw std::invalid_argument("signed_measure: atom/weight count mismatch");
  }
  mu.provenance = j.value("provenance", std::string());
  return mu;
}

jsonv to_json(const SolveConfig& cfg) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "solve_config";
  j["p"] = cfg.p;
  j["q"] = cfg.q;
  j["mode"] = (cfg.mode == ParametrixMode::kSubcritical) ? "subcritical" : "critical";
  j["width_constant"] = cfg.width_constant;
  if (cfg.delta) {
    j["delta"] = *cfg.delta;
  } else {
    j["delta"] = nullptr;
  }
  j["weight"] = weight_pair_to_json(cfg.weight_a, cfg.weight_b);
  j["tol"] = cfg.tol;
  j["max_iter"] = cfg.max_iter;
  j["translate"] = cfg.translate;
  j["divergence_factor"] = cfg.divergence_factor;
  return j;
}

SolveConfig solve_config_from_json(const jsonv& j) {
  require_kind(j, "solve_config");
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "subcritical" && mode != "critical") {
    throw std::invalid_argument("solve_config: unknown mode '" + mode + "'");
  }
  SolveConfig cfg = default_solve_config(
      j.at("p").get<double>(), j.at("q").get<double>(),
      mode == "critical" ? ParametrixMode::kCritical : ParametrixMode::kSubcritical);
  cfg.width_constant = j.value("width_constant", cfg.width_constant);
  if (j.contains("delta") && !j.at("delta").is_null()) {
    cfg.delta = j.at("delta").get<double>();
  }
  if (j.contains("weight")) {
    std::tie(cfg.weight_a, cfg.weight_b) = weight_pair_from_json(j.at("weight"));
  }
  cfg.tol = j.value("tol", cfg.tol);
  cfg.max_iter = j.value("max_iter", cfg.max_iter);
  cfg.translate = j.value("translate", cfg.translate);
  cfg.divergence_factor = j.value("divergence_factor", cfg.divergence_factor);
  return cfg;
}

jsonv to_json(const SolveReport& rep) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "solve_report";
  j["iterations"] = rep.iterations;
  j["converged"] = rep.converged;
  j["residual_norms"] = rep.residual_norms;
  j["final_sup_a"] = rep.final_sup_a;
  j["final_sup_b"] = rep.final_sup_b;
  return j;
}

jsonv to_json(const ContractionReport& rep) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "contraction_report";
  j["max_ratio"] = rep.max_ratio;
  j["ratios_a"] = vector_to_json(rep.ratios_a);
  j["ratios_b"] = vector_to_json(rep.ratios_b);
  return j;
}

jsonv to_json(const PoissonReport& rep) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "poisson_report";
  j["lhs"] = complex_to_json(rep.lhs);
  j["rhs"] = complex_to_json(rep.rhs);
  j["gap"] = rep.abs_gap;
  j["tail_estimate"] = rep.lattice_tail;
  j["m_tail"] = rep.m_tail;
  return j;
}

jsonv to_json(const SeparationReport& rep) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "separation_report";
  j["ok"] = rep.ok;
  j["worst_margin"] = rep.worst_margin;
  j["worst_i"] = rep.worst_i;
  j["worst_j"] = rep.worst_j;
  return j;
}

jsonv to_json(const DensityReport& rep) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "density_report";
  j["ok"] = rep.ok;
  j["worst_gap"] = rep.worst_gap;
  j["worst_point"] = vector_to_json(rep.worst_point);
  return j;
}

void save_json(const jsonv& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

jsonv load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open: " + path);
  return jsonv::parse(is);
}

void write_samples_bin(const PhaseSpaceSamples& samples, const std::string& path) {
  jsonv h;
  h["schema"] = kSchemaVersion;
  h["kind"] = "phase_space_samples";
  h["dim"] = samples.grid.dim;
  h["y_lo"] = vector_to_json(samples.grid.yrange.lo);
  h["y_hi"] = vector_to_json(samples.grid.yrange.hi);
  h["ystep"] = samples.grid.ystep;
  h["eta_lo"] = vector_to_json(samples.grid.etarange.lo);
  h["eta_hi"] = vector_to_json(samples.grid.etarange.hi);
  h["etastep"] = samples.grid.etastep;
  h["R"] = samples.window_scale;
  h["count"] = samples.values.size();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << h.dump() << '\n';
  for (long i = 0; i < samples.values.size(); ++i) {
    const double re = samples.values(i).real();
    const double im = samples.values(i).imag();
    os.write(reinterpret_cast<const char*>(&re), sizeof(double));
    os.write(reinterpret_cast<const char*>(&im), sizeof(double));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

PhaseSpaceSamples read_samples_bin(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument("cannot open: " + path);
  std::string header;
  if (!std::getline(is, header)) throw std::invalid_argument("truncated header: " + path);
  const jsonv h = jsonv::parse(header);
  require_kind(h, "phase_space_samples");
  PhaseSpaceSamples samples;
  samples.grid = make_phase_space_grid(
      make_box(vector_from_json(h.at("y_lo")), vector_from_json(h.at("y_hi"))),
      h.at("ystep").get<double>(),
      make_box(vector_from_json(h.at("eta_lo")), vector_from_json(h.at("eta_hi"))),
      h.at("etastep").get<double>());
  samples.window_scale = h.at("R").get<double>();
  const long count = h.at("count").get<long>();
  if (count != samples.grid.node_count()) {
    throw std::invalid_argument("samples header count does not match its grid");
  }
  samples.values.resize(count);
  for (long i = 0; i < count; ++i) {
    double re = 0.0;
    double im = 0.0;
    is.read(reinterpret_cast<char*>(&re), sizeof(double));
    is.read(reinterpret_cast<char*>(&im), sizeof(double));
    samples.values(i) = cplx(re, im);
  }
  if (!is) throw std::invalid_argument("truncated sample block: " + path);
  return samples;
}

void write_samples_csv(const PhaseSpaceSamples& samples, std::ostream& os) {
  const int d = samples.grid.dim;
  for (int k = 0; k < d; ++k) os << "y" << (k + 1) << ',';
  for (int k = 0; k < d; ++k) os << "eta" << (k + 1) << ',';
  os << "re,im\n";
  Eigen::VectorXd y(d), eta(d);
  for (long flat = 0; flat < samples.grid.node_count(); ++flat) {
    samples.grid.node(flat, y, eta);
    for (int k = 0; k < d; ++k) os << fmt_double(y(k)) << ',';
    for (int k = 0; k < d; ++k) os << fmt_double(eta(k)) << ',';
    os << fmt_double(samples.values(flat).real()) << ','
       << fmt_double(samples.values(flat).imag()) << '\n';
  }
}

}  // namespace ful
