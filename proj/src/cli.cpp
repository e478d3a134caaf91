#include "ful/cli.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ful/io.hpp"

namespace ful {

namespace {

// ---------------------------------------------------------------- logging

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("FUL_LOG");
    if (env == nullptr) return 0;
    const std::string s(env);
    if (s == "debug") return 2;
    if (s == "info") return 1;
    if (s == "error") return 0;
    std::cerr << "ful: unknown FUL_LOG value '" << s << "', using 'error'\n";
    return 0;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[info] " << msg << '\n';
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[debug] " << msg << '\n';
}

// ---------------------------------------------------------------- parsing

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse number '" + item + "' in '" + text + "'");
    }
    while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
    if (pos != item.size()) {
      throw std::invalid_argument("trailing junk in number '" + item + "'");
    }
    vals.push_back(v);
  }
  if (vals.empty()) throw std::invalid_argument("empty vector literal '" + text + "'");
  Eigen::VectorXd v(static_cast<int>(vals.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = vals[static_cast<size_t>(i)];
  return v;
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<Eigen::VectorXd> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_vector(row));
  if (rows.empty()) throw std::invalid_argument("empty matrix literal '" + text + "'");
  Eigen::MatrixXd m(static_cast<int>(rows.size()), rows[0].size());
  for (int i = 0; i < m.rows(); ++i) {
    if (rows[static_cast<size_t>(i)].size() != m.cols()) {
      throw std::invalid_argument("ragged matrix literal '" + text + "'");
    }
    m.row(i) = rows[static_cast<size_t>(i)].transpose();
  }
  return m;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

// ---------------------------------------------------------------- shared flags

struct MapFlags {
  std::string family = "identity";
  double r = 0.5;
  std::string matrix;
  std::string offset;
};

void add_map_flags(CLI::App* cmd, MapFlags& mf) {
  cmd->add_option("--map", mf.family, "map family: identity | power | affine")
      ->check(CLI::IsMember({"identity", "power", "affine"}));
  cmd->add_option("--map-r", mf.r, "power map exponent r (growth |x|^r)");
  cmd->add_option("--map-m", mf.matrix, "affine matrix, rows 'a,b;c,d'");
  cmd->add_option("--map-b", mf.offset, "affine offset 'x,y'");
}

MapSpec make_map(const MapFlags& mf, int dim) {
  if (mf.family == "identity") return MapSpec::identity(dim);
  if (mf.family == "power") return MapSpec::power_bracket(dim, mf.r);
  if (mf.matrix.empty()) throw std::invalid_argument("--map affine requires --map-m");
  Eigen::MatrixXd m = parse_matrix(mf.matrix);
  if (m.rows() != dim || m.cols() != dim) {
    throw std::invalid_argument("--map-m must be " + std::to_string(dim) + "x" +
                                std::to_string(dim));
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  if (!mf.offset.empty()) {
    b = parse_vector(mf.offset);
    if (b.size() != dim) throw std::invalid_argument("--map-b has the wrong dimension");
  }
  return MapSpec::affine(m, b);
}

struct GridFlags {
  std::string y_lo = "-6";
  std::string y_hi = "6";
  double y_step = 0.25;
  std::string eta_lo = "-6";
  std::string eta_hi = "6";
  double eta_step = 0.25;
};

void add_grid_flags(CLI::App* cmd, GridFlags& gf) {
  cmd->add_option("--gy-lo", gf.y_lo, "position box lower corner 'x1,x2,...'");
  cmd->add_option("--gy-hi", gf.y_hi, "position box upper corner");
  cmd->add_option("--gy-step", gf.y_step, "position step")->check(CLI::PositiveNumber);
  cmd->add_option("--ge-lo", gf.eta_lo, "frequency box lower corner");
  cmd->add_option("--ge-hi", gf.eta_hi, "frequency box upper corner");
  cmd->add_option("--ge-step", gf.eta_step, "frequency step")->check(CLI::PositiveNumber);
}

PhaseSpaceGrid make_grid(const GridFlags& gf, int dim) {
  Eigen::VectorXd ylo = parse_vector(gf.y_lo);
  Eigen::VectorXd yhi = parse_vector(gf.y_hi);
  Eigen::VectorXd elo = parse_vector(gf.eta_lo);
  Eigen::VectorXd ehi = parse_vector(gf.eta_hi);
  if (ylo.size() != dim || yhi.size() != dim || elo.size() != dim || ehi.size() != dim) {
    throw std::invalid_argument("grid corners must have dimension " + std::to_string(dim));
  }
  return make_phase_space_grid(make_box(ylo, yhi), gf.y_step, make_box(elo, ehi),
                               gf.eta_step);
}

// ---------------------------------------------------------------- io helpers

PointSet load_point_set(const std::string& path) {
  return point_set_from_json(load_json(path));
}

WavePacketSum load_packets(const std::string& path) {
  return wave_packet_sum_from_json(load_json(path));
}

void emit_json(const jsonv& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    save_json(j, path);
    log_info("wrote " + path);
  }
}

void write_error_report(const std::string& path, const std::string& type,
                        const std::string& msg) {
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "error_report";
  j["type"] = type;
  j["error"] = msg;
  emit_json(j, path);
}

/// Run fn; on a domain error, still emit a machine-readable report and
/// return exit code 2 (domain failures are data for threshold hunts).
template <typename Fn>
int guarded(const std::string& report_path, Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError& e) {
    std::cerr << "ful: " << e.what() << '\n';
    write_error_report(report_path, "domain_error", e.what());
    return 2;
  }
}

void write_residual_csv(const SolveReport& rep, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "iteration,residual_norm\n";
  for (size_t i = 0; i < rep.residual_norms.size(); ++i) {
    os << i << ',' << fmt_double(rep.residual_norms[i]) << '\n';
  }
  log_info("wrote " + path);
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> target_from_json(const jsonv& j, int na,
                                                               int nb) {
  if (j.value("schema", -1) != kSchemaVersion || j.value("kind", std::string()) != "target") {
    throw std::invalid_argument("target file: expected kind 'target' with schema 1");
  }
  auto read_side = [](const jsonv& arr, int n, const char* name) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != n) {
      throw std::invalid_argument(std::string("target ") + name +
                                  " length does not match its point set");
    }
    Eigen::VectorXcd v(n);
    int i = 0;
    for (const auto& e : arr) v(i++) = complex_from_json(e);
    return v;
  };
  return {read_side(j.at("alpha"), na, "alpha"), read_side(j.at("beta"), nb, "beta")};
}

Eigen::VectorXd shift_direction(const SolveConfig& cfg, int dim) {
  if (!cfg.delta) {
    throw std::invalid_argument("translate requires delta in the solver config");
  }
  return std::sqrt(*cfg.delta) * Eigen::VectorXd::Unit(dim, 0);
}

// ---------------------------------------------------------------- sweep

struct SweepExperiment {
  std::vector<std::string> columns;  // data columns; a status column is appended
  std::function<void(double, std::map<std::string, std::string>&)> compute;
};

double param_or(const jsonv& params, const char* key, double fallback) {
  return params.is_object() ? params.value(key, fallback) : fallback;
}

std::string param_or(const jsonv& params, const char* key, const std::string& fallback) {
  return params.is_object() ? params.value(key, fallback) : fallback;
}

SweepExperiment make_quad_order_experiment(const jsonv& params,
                                           const std::string& variable) {
  if (variable != "delta" && variable != "k") {
    throw std::invalid_argument("quad-order sweeps support variable delta or k");
  }
  SweepExperiment ex;
  ex.columns = {"delta", "k", "atoms", "abs_error"};
  ex.compute = [params, variable](double v, std::map<std::string, std::string>& row) {
    double delta = param_or(params, "delta", 0.2);
    double kreal = param_or(params, "k", 3.0);
    if (variable == "delta") delta = v;
    if (variable == "k") kreal = v;
    if (kreal != std::floor(kreal) || kreal < 1.0) {
      throw std::invalid_argument("k must be a positive integer");
    }
    const int k = static_cast<int>(kreal);
    const double p = param_or(params, "p", 1.0);
    const double wlo = param_or(params, "window_lo", -5.0);
    const double whi = param_or(params, "window_hi", 5.0);
    const double eradius = param_or(params, "e_radius", 8.0);
    const double estep = param_or(params, "e_step_factor", 0.25) * delta * delta;
    const double center = param_or(params, "center", 1.0 / 3.0);

    const long npts = 2 * static_cast<long>(std::floor(eradius / estep)) + 1;
    if (npts > 2'000'000) throw std::invalid_argument("sample grid too fine");
    Eigen::MatrixXd pts(npts, 1);
    for (long i = 0; i < npts; ++i) {
      pts(i, 0) = (static_cast<double>(i) - static_cast<double>(npts / 2)) * estep;
    }
    const PointSet e = make_point_set(1, pts, eradius + 1.0, "uniform grid");

    const SignedMeasure mu = global_measure(e, make_density_params(p, delta), k,
                                            make_box1d(wlo, whi),
                                            param_or(params, "size_constant", 4.0));
    const WavePacketSum f = make_wave_packet_sum(
        1, {make_wave_packet(1.0, Eigen::VectorXd::Constant(1, center),
                             Eigen::VectorXd::Zero(1), 1.0)});
    const cplx integral = integrate(mu, f);
    const cplx exact = eval(fourier(f), Eigen::VectorXd::Zero(1));
    row["delta"] = fmt_double(delta);
    row["k"] = std::to_string(k);
    row["atoms"] = std::to_string(mu.size());
    row["abs_error"] = fmt_double(std::abs(integral - exact));
  };
  return ex;
}

SweepExperiment make_contraction_experiment(const jsonv& params,
                                            const std::string& variable) {
  if (variable != "delta" && variable != "radius") {
    throw std::invalid_argument("contraction sweeps support variable delta or radius");
  }
  SweepExperiment ex;
  ex.columns = {"delta", "radius", "points", "max_ratio"};
  ex.compute = [params, variable](double v, std::map<std::string, std::string>& row) {
    const double t = param_or(params, "t", 2.0 / 3.0);
    const double nmax = param_or(params, "n_max", 200.0);
    double delta = param_or(params, "delta", 6.0);
    if (variable == "delta") delta = v;
    double radius = param_or(params, "radius", delta * std::pow(nmax, t));
    if (variable == "radius") radius = v;
    const double p = param_or(params, "p", 0.5);
    const double q = param_or(params, "q", 0.5);
    const std::string mode_str = param_or(params, "mode", std::string("subcritical"));
    if (mode_str != "subcritical" && mode_str != "critical") {
      throw std::invalid_argument("mode must be subcritical or critical");
    }
    const ParametrixMode mode = (mode_str == "critical") ? ParametrixMode::kCritical
                                                         : ParametrixMode::kSubcritical;

    auto set = std::make_shared<const PointSet>(power_set(1, t, delta, radius));
    SolveConfig cfg = default_solve_config(p, q, mode);
    cfg.delta = delta;
    cfg.width_constant = param_or(params, "width_constant", 1.0);
    std::shared_ptr<const PointSet> probe_set = set;
    if (param_or(params, "translate", 1.0) != 0.0) {
      probe_set = translate_set(*set, shift_direction(cfg, 1));
    }
    const Parametrix par = build_parametrix(probe_set, probe_set, p, q, mode,
                                            cfg.width_constant, cfg.delta);
    const ContractionReport rep = contraction_probe(par, cfg.weight_a, cfg.weight_b);
    row["delta"] = fmt_double(delta);
    row["radius"] = fmt_double(radius);
    row["points"] = std::to_string(set->size());
    row["max_ratio"] = fmt_double(rep.max_ratio);
  };
  return ex;
}

SweepExperiment make_nu_error_experiment(const jsonv& params,
                                         const std::string& variable) {
  if (variable != "delta" && variable != "s") {
    throw std::invalid_argument("nu-error sweeps support variable delta or s");
  }
  SweepExperiment ex;
  ex.columns = {"delta", "y", "eta", "s", "error", "bound_ratio"};
  ex.compute = [params, variable](double v, std::map<std::string, std::string>& row) {
    double delta = param_or(params, "delta", 0.4);
    double s = param_or(params, "s", 4.0);
    if (variable == "delta") delta = v;
    if (variable == "s") s = v;
    const double r = param_or(params, "map_r", 0.5);
    const double p = param_or(params, "p", 1.0);
    const double q = param_or(params, "q", 1.0);
    const double radius = param_or(params, "radius", 12.0);
    const Eigen::VectorXd y =
        Eigen::VectorXd::Constant(1, param_or(params, "y", 3.0));
    const Eigen::VectorXd eta =
        Eigen::VectorXd::Constant(1, param_or(params, "eta", 0.0));
    const PhaseSpaceGrid grid = make_phase_space_grid(
        make_box1d(param_or(params, "grid_y_lo", -3.0), param_or(params, "grid_y_hi", 9.0)),
        param_or(params, "grid_y_step", 0.25),
        make_box1d(param_or(params, "grid_eta_lo", -26.0),
                   param_or(params, "grid_eta_hi", 26.0)),
        param_or(params, "grid_eta_step", 0.25));

    const SignedMeasure mu =
        lattice_measure(MapSpec::power_bracket(1, r), delta, radius);
    const NuPacket nu = nu_packet(y, eta, p, q, mu, mu);
    const double err = nu_error_norm(nu, s, grid);
    const double bound = 0.5 * std::pow(jbracket(y), -s) * std::pow(jbracket(eta), -s);
    row["delta"] = fmt_double(delta);
    row["y"] = fmt_double(y(0));
    row["eta"] = fmt_double(eta(0));
    row["s"] = fmt_double(s);
    row["error"] = fmt_double(err);
    row["bound_ratio"] = fmt_double(err / bound);
  };
  return ex;
}

SweepExperiment make_experiment(const std::string& name, const jsonv& params,
                                const std::string& variable) {
  if (name == "quad-order") return make_quad_order_experiment(params, variable);
  if (name == "contraction") return make_contraction_experiment(params, variable);
  if (name == "nu-error") return make_nu_error_experiment(params, variable);
  throw std::invalid_argument("unknown sweep experiment '" + name +
                              "' (expected quad-order | contraction | nu-error)");
}

// ---------------------------------------------------------------- subcommands

struct GenSetOpts {
  int d = 1;
  double t = 0.5;
  double delta = 1.0;
  double radius = 10.0;
  std::string out;
  bool dry = false;
};

int run_gen_set(const GenSetOpts& o) {
  if (o.dry) {
    std::cout << "dry-run: gen-set d=" << o.d << " t=" << fmt_double(o.t)
              << " delta=" << fmt_double(o.delta) << " radius=" << fmt_double(o.radius)
              << "; would write " << o.out << '\n';
    return 0;
  }
  const PointSet s = power_set(o.d, o.t, o.delta, o.radius);
  log_debug("generated " + std::to_string(s.size()) + " points");
  save_json(to_json(s), o.out);
  log_info("wrote " + o.out);
  return 0;
}

struct CheckOpts {
  std::string set_path;
  double p = 1.0;
  double delta = 1.0;
  std::string mode = "separated";
  std::string window_lo;
  std::string window_hi;
  double resolution = 0.1;
  std::string report;
  bool dry = false;
};

int run_check(const CheckOpts& o) {
  const PointSet s = load_point_set(o.set_path);
  const bool want_sep = (o.mode == "separated" || o.mode == "both");
  const bool want_dense = (o.mode == "dense" || o.mode == "both");
  if (want_dense && (o.window_lo.empty() || o.window_hi.empty())) {
    throw std::invalid_argument("dense checks need --window-lo and --window-hi");
  }
  if (o.dry) {
    std::cout << "dry-run: check mode=" << o.mode << " on " << s.size()
              << " points (p=" << fmt_double(o.p) << ", delta=" << fmt_double(o.delta)
              << ")\n";
    return 0;
  }
  const DensityParams prm = make_density_params(o.p, o.delta);
  jsonv j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "check_report";
  if (want_sep) j["separated"] = to_json(check_separated(s, prm));
  if (want_dense) {
    const Box window = make_box(parse_vector(o.window_lo), parse_vector(o.window_hi));
    j["dense"] = to_json(check_dense(s, prm, window, o.resolution));
  }
  emit_json(j, o.report);
  return 0;
}

struct QuadOpts {
  std::string mode = "global";
  std::string set_path;
  double p = 1.0;
  double delta = 1.0;
  int k = 3;
  std::string window_lo;
  std::string window_hi;
  double size_constant = 4.0;
  MapFlags map;
  int d = 1;
  double radius = 10.0;
  std::string out;
  std::string integrand;
  std::string report;
  bool dry = false;
};

int run_quad(const QuadOpts& o) {
  if (o.mode == "global") {
    if (o.set_path.empty() || o.window_lo.empty() || o.window_hi.empty()) {
      throw std::invalid_argument("quad --mode global needs --set, --window-lo, --window-hi");
    }
    const PointSet e = load_point_set(o.set_path);
    const Box window = make_box(parse_vector(o.window_lo), parse_vector(o.window_hi));
    if (o.dry) {
      std::cout << "dry-run: quad global k=" << o.k << " on " << e.size()
                << " sample points; would write " << o.out << '\n';
      return 0;
    }
    return guarded(o.report, [&] {
      const SignedMeasure mu = global_measure(e, make_density_params(o.p, o.delta), o.k,
                                              window, o.size_constant);
      save_json(to_json(mu), o.out);
      log_info("wrote " + o.out);
      if (!o.integrand.empty()) {
        const WavePacketSum f = load_packets(o.integrand);
        jsonv j;
        j["schema"] = kSchemaVersion;
        j["kind"] = "quad_report";
        j["atoms"] = mu.size();
        j["tv"] = mu.total_variation();
        j["integral"] = complex_to_json(integrate(mu, f));
        j["error_bound"] =
            error_bound_estimate(f, o.k, make_density_params(o.p, o.delta), window);
        emit_json(j, o.report);
      }
      return 0;
    });
  }
  if (o.mode != "lattice") throw std::invalid_argument("quad --mode must be global or lattice");
  const MapSpec map = make_map(o.map, o.d);
  if (o.dry) {
    std::cout << "dry-run: quad lattice map=" << map.describe()
              << " delta=" << fmt_double(o.delta) << " radius=" << fmt_double(o.radius)
              << "; would write " << o.out << '\n';
    return 0;
  }
  return guarded(o.report, [&] {
    const SignedMeasure mu = lattice_measure(map, o.delta, o.radius);
    save_json(to_json(mu), o.out);
    log_info("wrote " + o.out);
    return 0;
  });
}

struct GaborOpts {
  std::string packets;
  std::string from;
  double scale = 1.0;
  GridFlags grid;
  std::string out;
  std::string format = "csv";
  double s = 4.0;
  std::string report;
  std::vector<std::string> probes;
  bool dry = false;
};

int run_gabor(const GaborOpts& o) {
  if (o.packets.empty() && o.from.empty()) {
    throw std::invalid_argument("gabor needs --packets or --from");
  }
  WavePacketSum f;
  bool have_f = false;
  if (!o.packets.empty()) {
    f = load_packets(o.packets);
    have_f = true;
  }
  if (o.dry) {
    std::cout << "dry-run: gabor " << (o.from.empty() ? "transform" : "re-analysis")
              << (o.out.empty() ? "" : "; would write " + o.out)
              << (o.report.empty() ? "" : "; would write " + o.report) << '\n';
    return 0;
  }
  PhaseSpaceSamples samples;
  if (!o.from.empty()) {
    samples = read_samples_bin(o.from);
  } else {
    samples = gabor_transform(f, make_grid(o.grid, f.dim), o.scale);
  }
  if (!o.out.empty()) {
    if (o.format == "bin") {
      write_samples_bin(samples, o.out);
    } else {
      std::ofstream os(o.out);
      if (!os) throw std::runtime_error("cannot open for writing: " + o.out);
      write_samples_csv(samples, os);
    }
    log_info("wrote " + o.out);
  }
  if (!o.report.empty() || !o.probes.empty()) {
    jsonv j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "gabor_report";
    j["boundary_mass"] = boundary_mass(samples);
    j["s"] = o.s;
    j["s_norm"] = s_norm(samples, o.s);
    jsonv probes = jsonv::array();
    for (const std::string& text : o.probes) {
      const Eigen::VectorXd x = parse_vector(text);
      jsonv pr;
      pr["x"] = text;
      const cplx recon = gabor_invert(samples, x);
      pr["reconstructed"] = complex_to_json(recon);
      if (have_f) {
        const cplx exact = eval(f, x);
        pr["exact"] = complex_to_json(exact);
        pr["abs_error"] = std::abs(recon - exact);
      }
      probes.push_back(std::move(pr));
    }
    j["probes"] = std::move(probes);
    emit_json(j, o.report);
  }
  return 0;
}

struct SolveOpts {
  std::string a_path;
  std::string b_path;
  std::string config;
  std::string target;
  int unit_at = -1;
  std::string report;
  std::string csv;
  std::string solution;
  bool dry = false;
};

int run_solve(const SolveOpts& o) {
  auto a = std::make_shared<const PointSet>(load_point_set(o.a_path));
  auto b = std::make_shared<const PointSet>(load_point_set(o.b_path));
  const SolveConfig cfg = solve_config_from_json(load_json(o.config));
  Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(a->size());
  Eigen::VectorXcd beta = Eigen::VectorXcd::Zero(b->size());
  if (!o.target.empty()) {
    std::tie(alpha, beta) = target_from_json(load_json(o.target), a->size(), b->size());
  } else if (o.unit_at >= 0) {
    if (o.unit_at >= a->size()) throw std::invalid_argument("--unit-at index out of range");
    alpha(o.unit_at) = 1.0;
  } else {
    throw std::invalid_argument("solve needs --target or --unit-at");
  }
  if (o.dry) {
    std::cout << "dry-run: solve |A|=" << a->size() << " |B|=" << b->size()
              << " tol=" << fmt_double(cfg.tol) << " max_iter=" << cfg.max_iter << '\n';
    return 0;
  }
  try {
    auto [fsol, rep] = neumann_solve(a, b, alpha, beta, cfg);
    emit_json(to_json(rep), o.report);
    if (!o.csv.empty()) write_residual_csv(rep, o.csv);
    if (!o.solution.empty()) {
      save_json(to_json(fsol), o.solution);
      log_info("wrote " + o.solution);
    }
    return 0;
  } catch (const DivergenceError& e) {
    std::cerr << "ful: " << e.what() << '\n';
    jsonv j = to_json(e.report);
    j["error"] = e.what();
    emit_json(j, o.report);
    if (!o.csv.empty()) write_residual_csv(e.report, o.csv);
    return 2;
  }
}

struct KernelOpts {
  std::string a_path;
  std::string b_path;
  std::string xstar;
  std::string config;
  std::string report;
  std::string csv;
  std::string solution;
  bool dry = false;
};

int run_kernel(const KernelOpts& o) {
  auto a = std::make_shared<const PointSet>(load_point_set(o.a_path));
  auto b = std::make_shared<const PointSet>(load_point_set(o.b_path));
  const SolveConfig cfg = solve_config_from_json(load_json(o.config));
  const Eigen::VectorXd xstar = parse_vector(o.xstar);
  if (o.dry) {
    std::cout << "dry-run: kernel element at xstar=" << o.xstar << " over |A|="
              << a->size() << " |B|=" << b->size() << '\n';
    return 0;
  }
  try {
    auto [fsol, rep] = kernel_element(a, b, xstar, cfg);
    emit_json(to_json(rep), o.report);
    if (!o.csv.empty()) write_residual_csv(rep, o.csv);
    if (!o.solution.empty()) {
      save_json(to_json(fsol), o.solution);
      log_info("wrote " + o.solution);
    }
    return 0;
  } catch (const DivergenceError& e) {
    std::cerr << "ful: " << e.what() << '\n';
    jsonv j = to_json(e.report);
    j["error"] = e.what();
    emit_json(j, o.report);
    if (!o.csv.empty()) write_residual_csv(e.report, o.csv);
    return 2;
  }
}

struct ProbeOpts {
  std::string a_path;
  std::string b_path;
  std::string config;
  std::string report;
  bool dry = false;
};

int run_probe(const ProbeOpts& o) {
  auto a = std::make_shared<const PointSet>(load_point_set(o.a_path));
  auto b = std::make_shared<const PointSet>(load_point_set(o.b_path));
  const SolveConfig cfg = solve_config_from_json(load_json(o.config));
  if (o.dry) {
    std::cout << "dry-run: contraction probe |A|=" << a->size() << " |B|=" << b->size()
              << (cfg.translate ? " (translated)" : "") << '\n';
    return 0;
  }
  std::shared_ptr<const PointSet> pa = a;
  std::shared_ptr<const PointSet> pb = b;
  if (cfg.translate) {
    const Eigen::VectorXd u = shift_direction(cfg, a->dim);
    pa = translate_set(*a, u);
    pb = translate_set(*b, u);
  }
  const Parametrix par =
      build_parametrix(pa, pb, cfg.p, cfg.q, cfg.mode, cfg.width_constant, cfg.delta);
  const ContractionReport rep = contraction_probe(par, cfg.weight_a, cfg.weight_b);
  jsonv j = to_json(rep);
  j["translated"] = cfg.translate;
  emit_json(j, o.report);
  return 0;
}

struct PoissonOpts {
  MapFlags map;
  std::string packets;
  int mmax = 3;
  double rel_tol = 1e-10;
  int max_depth = 15;
  std::string report;
  bool dry = false;
};

int run_poisson(const PoissonOpts& o) {
  const WavePacketSum f = load_packets(o.packets);
  const MapSpec map = make_map(o.map, f.dim);
  if (o.dry) {
    std::cout << "dry-run: poisson check map=" << map.describe() << " mmax=" << o.mmax
              << " on " << f.packets.size() << " packets\n";
    return 0;
  }
  return guarded(o.report, [&] {
    PoissonQuadSpec spec;
    spec.rel_tol = o.rel_tol;
    spec.max_depth = o.max_depth;
    const PoissonReport rep = twisted_poisson_check(map, f, o.mmax, spec);
    emit_json(to_json(rep), o.report);
    return 0;
  });
}

struct NuErrorOpts {
  std::string y = "3";
  std::string eta = "0";
  double p = 1.0;
  double q = 1.0;
  std::string mu_a;
  std::string mu_b;
  double s = 4.0;
  GridFlags grid;
  std::string report;
  bool dry = false;
};

int run_nu_error(const NuErrorOpts& o) {
  const Eigen::VectorXd y = parse_vector(o.y);
  const Eigen::VectorXd eta = parse_vector(o.eta);
  const SignedMeasure mu_a = signed_measure_from_json(load_json(o.mu_a));
  const SignedMeasure mu_b = signed_measure_from_json(load_json(o.mu_b));
  if (o.dry) {
    std::cout << "dry-run: nu-error at y=" << o.y << " eta=" << o.eta
              << " s=" << fmt_double(o.s) << " (" << mu_a.size() << "/" << mu_b.size()
              << " atoms)\n";
    return 0;
  }
  return guarded(o.report, [&] {
    const NuPacket nu = nu_packet(y, eta, o.p, o.q, mu_a, mu_b);
    const double err = nu_error_norm(nu, o.s, make_grid(o.grid, static_cast<int>(y.size())));
    const double bound =
        0.5 * std::pow(jbracket(y), -o.s) * std::pow(jbracket(eta), -o.s);
    jsonv j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "nu_error_report";
    j["side"] = (nu.side == NuSide::kA) ? "A" : "B";
    j["s"] = o.s;
    j["error"] = err;
    j["bound"] = bound;
    j["bound_ratio"] = err / bound;
    emit_json(j, o.report);
    return 0;
  });
}

struct SweepOpts {
  std::string config;
  std::string out;
  int jobs = 0;
  bool dry = false;
};

int run_sweep(const SweepOpts& o) {
  const jsonv cfg = load_json(o.config);
  if (cfg.value("schema", -1) != kSchemaVersion ||
      cfg.value("kind", std::string()) != "sweep") {
    throw std::invalid_argument("sweep config: expected kind 'sweep' with schema 1");
  }
  const std::string experiment = cfg.at("experiment").get<std::string>();
  const std::string variable = cfg.at("variable").get<std::string>();
  if (variable != "delta" && variable != "s" && variable != "k" && variable != "radius") {
    throw std::invalid_argument("sweep variable must be one of delta, s, k, radius");
  }
  std::vector<double> values;
  for (const auto& v : cfg.value("values", jsonv::array())) values.push_back(v.get<double>());
  const jsonv params = cfg.value("params", jsonv::object());
  const SweepExperiment ex = make_experiment(experiment, params, variable);

  int jobs = o.jobs;
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (o.dry) {
    std::cout << "dry-run: sweep experiment=" << experiment << " variable=" << variable
              << " rows=" << values.size() << " jobs=" << jobs << "; would write "
              << o.out << '\n';
    return 0;
  }

  // Rows are computed in a worker pool but buffered and written in input
  // order, so reruns of the same config are byte-identical.
  std::vector<std::string> rows(values.size());
  auto build_row = [&](size_t i) {
    std::map<std::string, std::string> cells;
    std::string status = "ok";
    try {
      ex.compute(values[i], cells);
    } catch (const std::exception& err) {
      cells.clear();
      cells[variable] = fmt_double(values[i]);
      status = csv_quote(err.what());
    }
    std::string line;
    for (const std::string& col : ex.columns) {
      auto it = cells.find(col);
      line += (it == cells.end()) ? std::string() : it->second;
      line += ',';
    }
    line += status;
    rows[i] = std::move(line);
  };
  if (jobs <= 1 || values.size() <= 1) {
    for (size_t i = 0; i < values.size(); ++i) build_row(i);
  } else {
    std::atomic<size_t> next{0};
    const int workers = std::min<int>(jobs, static_cast<int>(values.size()));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1)) {
          build_row(i);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  std::ofstream os(o.out);
  if (!os) throw std::runtime_error("cannot open for writing: " + o.out);
  for (const std::string& col : ex.columns) os << col << ',';
  os << "status\n";
  for (const std::string& row : rows) os << row << '\n';
  if (!os) throw std::runtime_error("write failed: " + o.out);
  log_info("wrote " + o.out + " (" + std::to_string(rows.size()) + " rows)");
  return 0;
}

}  // namespace

int cli_run(std::vector<std::string> args) {
  CLI::App app{"Sampling, quadrature, and phase-space interpolation toolkit"};
  app.name("ful");
  app.require_subcommand(1);
  app.fallthrough(true);

  unsigned long seed = 0;
  app.add_option("--seed", seed, "experiment seed, echoed for reproducibility");

  int rc = 0;

  GenSetOpts gen;
  CLI::App* cmd_gen = app.add_subcommand("gen-set", "generate a power-law point set");
  cmd_gen->add_option("--d", gen.d, "dimension")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--t", gen.t, "radial exponent in (0, 1]")->required();
  cmd_gen->add_option("--delta", gen.delta, "spacing parameter")->check(CLI::PositiveNumber)->required();
  cmd_gen->add_option("--radius", gen.radius, "truncation radius")->check(CLI::PositiveNumber)->required();
  cmd_gen->add_option("--out", gen.out, "output point-set JSON")->required();
  cmd_gen->add_flag("--dry-run", gen.dry, "validate and print the plan only");
  cmd_gen->callback([&] { rc = run_gen_set(gen); });

  CheckOpts chk;
  CLI::App* cmd_chk = app.add_subcommand("check", "separation / density reports for a point set");
  cmd_chk->add_option("--set", chk.set_path, "point-set JSON")->check(CLI::ExistingFile)->required();
  cmd_chk->add_option("--p", chk.p, "ball decay exponent p")->required();
  cmd_chk->add_option("--delta", chk.delta, "ball radius parameter delta")->check(CLI::PositiveNumber)->required();
  cmd_chk->add_option("--mode", chk.mode, "separated | dense | both")
      ->check(CLI::IsMember({"separated", "dense", "both"}));
  cmd_chk->add_option("--window-lo", chk.window_lo, "density window lower corner");
  cmd_chk->add_option("--window-hi", chk.window_hi, "density window upper corner");
  cmd_chk->add_option("--resolution", chk.resolution, "density probe grid step")->check(CLI::PositiveNumber);
  cmd_chk->add_option("--report", chk.report, "report JSON path (default stdout)");
  cmd_chk->add_flag("--dry-run", chk.dry, "validate and print the plan only");
  cmd_chk->callback([&] { rc = run_check(chk); });

  QuadOpts qd;
  CLI::App* cmd_qd = app.add_subcommand("quad", "build a sampling or lattice measure");
  cmd_qd->add_option("--mode", qd.mode, "global | lattice")->check(CLI::IsMember({"global", "lattice"}));
  cmd_qd->add_option("--set", qd.set_path, "sample point-set JSON (global mode)")->check(CLI::ExistingFile);
  cmd_qd->add_option("--p", qd.p, "density exponent p");
  cmd_qd->add_option("--delta", qd.delta, "density / lattice spacing delta")->check(CLI::PositiveNumber);
  cmd_qd->add_option("--k", qd.k, "polynomial exactness order")->check(CLI::Range(1, kMaxExactnessOrder));
  cmd_qd->add_option("--window-lo", qd.window_lo, "integration window lower corner");
  cmd_qd->add_option("--window-hi", qd.window_hi, "integration window upper corner");
  cmd_qd->add_option("--size-constant", qd.size_constant, "cube size constant")->check(CLI::PositiveNumber);
  add_map_flags(cmd_qd, qd.map);
  cmd_qd->add_option("--d", qd.d, "dimension (lattice mode)")->check(CLI::PositiveNumber);
  cmd_qd->add_option("--radius", qd.radius, "truncation radius (lattice mode)")->check(CLI::PositiveNumber);
  cmd_qd->add_option("--out", qd.out, "output measure JSON")->required();
  cmd_qd->add_option("--integrand", qd.integrand, "packet-sum JSON to integrate")->check(CLI::ExistingFile);
  cmd_qd->add_option("--report", qd.report, "integration report JSON path");
  cmd_qd->add_flag("--dry-run", qd.dry, "validate and print the plan only");
  cmd_qd->callback([&] { rc = run_quad(qd); });

  GaborOpts gb;
  CLI::App* cmd_gb = app.add_subcommand("gabor", "window transform of a packet sum");
  cmd_gb->add_option("--packets", gb.packets, "packet-sum JSON")->check(CLI::ExistingFile);
  cmd_gb->add_option("--from", gb.from, "reuse samples from a binary file")->check(CLI::ExistingFile);
  cmd_gb->add_option("--scale", gb.scale, "window scale R")->check(CLI::PositiveNumber);
  add_grid_flags(cmd_gb, gb.grid);
  cmd_gb->add_option("--out", gb.out, "samples output path");
  cmd_gb->add_option("--format", gb.format, "csv | bin")->check(CLI::IsMember({"csv", "bin"}));
  cmd_gb->add_option("--s", gb.s, "norm exponent for the report");
  cmd_gb->add_option("--report", gb.report, "diagnostics report JSON path");
  cmd_gb->add_option("--probe", gb.probes, "reconstruction probe point 'x1,x2,...' (repeatable)");
  cmd_gb->add_flag("--dry-run", gb.dry, "validate and print the plan only");
  cmd_gb->callback([&] { rc = run_gabor(gb); });

  SolveOpts sv;
  CLI::App* cmd_sv = app.add_subcommand("solve", "interpolate values on A and transform values on B");
  cmd_sv->add_option("--a", sv.a_path, "point set A JSON")->check(CLI::ExistingFile)->required();
  cmd_sv->add_option("--b", sv.b_path, "point set B JSON")->check(CLI::ExistingFile)->required();
  cmd_sv->add_option("--config", sv.config, "solver config JSON")->check(CLI::ExistingFile)->required();
  cmd_sv->add_option("--target", sv.target, "target values JSON")->check(CLI::ExistingFile);
  cmd_sv->add_option("--unit-at", sv.unit_at, "unit target at this A index");
  cmd_sv->add_option("--report", sv.report, "solve report JSON path (default stdout)");
  cmd_sv->add_option("--csv", sv.csv, "residual history CSV path");
  cmd_sv->add_option("--solution", sv.solution, "solution packet-sum JSON path");
  cmd_sv->add_flag("--dry-run", sv.dry, "validate and print the plan only");
  cmd_sv->callback([&] { rc = run_solve(sv); });

  KernelOpts kn;
  CLI::App* cmd_kn = app.add_subcommand("kernel", "interpolation kernel element at xstar");
  cmd_kn->add_option("--a", kn.a_path, "point set A JSON")->check(CLI::ExistingFile)->required();
  cmd_kn->add_option("--b", kn.b_path, "point set B JSON")->check(CLI::ExistingFile)->required();
  cmd_kn->add_option("--xstar", kn.xstar, "kernel node 'x1,x2,...'")->required();
  cmd_kn->add_option("--config", kn.config, "solver config JSON")->check(CLI::ExistingFile)->required();
  cmd_kn->add_option("--report", kn.report, "solve report JSON path (default stdout)");
  cmd_kn->add_option("--csv", kn.csv, "residual history CSV path");
  cmd_kn->add_option("--solution", kn.solution, "solution packet-sum JSON path");
  cmd_kn->add_flag("--dry-run", kn.dry, "validate and print the plan only");
  cmd_kn->callback([&] { rc = run_kernel(kn); });

  ProbeOpts pb;
  CLI::App* cmd_pb = app.add_subcommand("probe", "contraction probe of the packet family");
  cmd_pb->add_option("--a", pb.a_path, "point set A JSON")->check(CLI::ExistingFile)->required();
  cmd_pb->add_option("--b", pb.b_path, "point set B JSON")->check(CLI::ExistingFile)->required();
  cmd_pb->add_option("--config", pb.config, "solver config JSON")->check(CLI::ExistingFile)->required();
  cmd_pb->add_option("--report", pb.report, "probe report JSON path (default stdout)");
  cmd_pb->add_flag("--dry-run", pb.dry, "validate and print the plan only");
  cmd_pb->callback([&] { rc = run_probe(pb); });

  PoissonOpts ps;
  CLI::App* cmd_ps = app.add_subcommand("poisson", "lattice sum vs dual integral comparison");
  add_map_flags(cmd_ps, ps.map);
  cmd_ps->add_option("--packets", ps.packets, "packet-sum JSON")->check(CLI::ExistingFile)->required();
  cmd_ps->add_option("--mmax", ps.mmax, "dual truncation |m|_inf <= mmax")->check(CLI::NonNegativeNumber);
  cmd_ps->add_option("--rel-tol", ps.rel_tol, "panel relative tolerance")->check(CLI::PositiveNumber);
  cmd_ps->add_option("--max-depth", ps.max_depth, "adaptive bisection depth")->check(CLI::PositiveNumber);
  cmd_ps->add_option("--report", ps.report, "report JSON path (default stdout)");
  cmd_ps->add_flag("--dry-run", ps.dry, "validate and print the plan only");
  cmd_ps->callback([&] { rc = run_poisson(ps); });

  NuErrorOpts ne;
  CLI::App* cmd_ne = app.add_subcommand("nu-error", "phase-space approximation error of a sampled window");
  cmd_ne->add_option("--y", ne.y, "position 'y1,y2,...'")->required();
  cmd_ne->add_option("--eta", ne.eta, "frequency 'eta1,eta2,...'")->required();
  cmd_ne->add_option("--p", ne.p, "position-side exponent p")->check(CLI::PositiveNumber);
  cmd_ne->add_option("--q", ne.q, "frequency-side exponent q")->check(CLI::PositiveNumber);
  cmd_ne->add_option("--mu-a", ne.mu_a, "position-side measure JSON")->check(CLI::ExistingFile)->required();
  cmd_ne->add_option("--mu-b", ne.mu_b, "frequency-side measure JSON")->check(CLI::ExistingFile)->required();
  cmd_ne->add_option("--s", ne.s, "norm exponent s");
  add_grid_flags(cmd_ne, ne.grid);
  cmd_ne->add_option("--report", ne.report, "report JSON path (default stdout)");
  cmd_ne->add_flag("--dry-run", ne.dry, "validate and print the plan only");
  cmd_ne->callback([&] { rc = run_nu_error(ne); });

  SweepOpts sw;
  CLI::App* cmd_sw = app.add_subcommand("sweep", "run an experiment across parameter values");
  cmd_sw->add_option("--config", sw.config, "sweep config JSON")->check(CLI::ExistingFile)->required();
  cmd_sw->add_option("--out", sw.out, "output CSV path")->required();
  cmd_sw->add_option("--jobs", sw.jobs, "worker threads (default: logical cores)");
  cmd_sw->add_flag("--dry-run", sw.dry, "validate and print the plan only");
  cmd_sw->callback([&] { rc = run_sweep(sw); });

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const DomainError& e) {
    std::cerr << "ful: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ful: " << e.what() << '\n';
    return 1;
  }
  if (seed != 0) log_info("seed=" + std::to_string(seed));
  return rc;
}

}  // namespace ful
