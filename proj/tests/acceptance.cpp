// Acceptance gate: every release-blocking behavior of the library and CLI,
// checked end to end at fixed tolerances.  Each check prints one PASS/FAIL
// line; the exit status is the number of failures.
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ful/cli.hpp"
#include "ful/gabor.hpp"
#include "ful/geometry.hpp"
#include "ful/io.hpp"
#include "ful/lattice.hpp"
#include "ful/quadrature.hpp"
#include "ful/solver.hpp"
#include "ful/wavepacket.hpp"

using namespace ful;
namespace fs = std::filesystem;

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------- check 1

bool check_cube_exactness(std::string& detail) {
  std::mt19937 rng(90210);
  std::uniform_real_distribution<double> corner(-2.0, 2.0);
  std::uniform_real_distribution<double> side(0.3, 1.7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  int done = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = (trial % 2 == 0) ? 1 : 2;
    const int k = 1 + static_cast<int>(rng() % 4);
    int nmono = 1;
    for (int i = 1; i <= d; ++i) nmono = nmono * (k - 1 + i) / i;
    Cube q;
    q.corner = Eigen::VectorXd::NullaryExpr(d, [&](int) { return corner(rng); });
    q.side = side(rng);
    const int want = 6 * nmono + 6;
    Eigen::MatrixXd pts(want, d);
    for (int i = 0; i < want; ++i)
      for (int c = 0; c < d; ++c) pts(i, c) = q.corner(c) + q.side * unit(rng);
    const PointSet e =
        make_point_set(d, pts, pts.rowwise().norm().maxCoeff() + 1.0, "random");
    const SignedMeasure mu = local_measure(q, e, k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; a + b < ((d == 2) ? k : a + 1); ++b) {
        const cplx got = integrate(mu, [&](const Eigen::VectorXd& x) {
          double m = std::pow(x(0), a);
          if (d == 2) m *= std::pow(x(1), b);
          return cplx(m, 0.0);
        });
        double exact = (std::pow(q.corner(0) + q.side, a + 1) -
                        std::pow(q.corner(0), a + 1)) / (a + 1);
        if (d == 2) {
          exact *= (std::pow(q.corner(1) + q.side, b + 1) -
                    std::pow(q.corner(1), b + 1)) / (b + 1);
        }
        worst = std::max(worst, std::abs(got.real() - exact) / (1.0 + std::abs(exact)));
        worst = std::max(worst, std::abs(got.imag()));
      }
    }
    ++done;
  }
  detail = std::to_string(done) + " random cubes, worst relative error " + fmt(worst);
  return worst <= 1e-10;
}

// ---------------------------------------------------------------- check 2

double quad_fixture_error(double delta, int k) {
  // Cube caps of 0.5 * delta / <x> keep every spacing in the asymptotic
  // regime of the order-k local rules; the candidate grid is dense enough
  // that edge cubes still hold more candidates than moments.
  const double estep = 0.05 * delta * delta;
  const long n = 2 * static_cast<long>(std::floor(8.0 / estep)) + 1;
  Eigen::MatrixXd pts(n, 1);
  for (long i = 0; i < n; ++i) pts(i, 0) = static_cast<double>(i - n / 2) * estep;
  const PointSet e = make_point_set(1, pts, 9.0, "uniform grid");
  const SignedMeasure mu = global_measure(e, make_density_params(1.0, delta), k,
                                          make_box1d(-5.0, 5.0), 0.5);
  const WavePacketSum f =
      make_wave_packet_sum(1, {make_wave_packet(1.0, v1(0.0), v1(0.0), 1.0)});
  return std::abs(integrate(mu, f) - cplx(1.0, 0.0));
}

bool check_convergence_order(std::string& detail) {
  const double deltas[3] = {0.4, 0.2, 0.1};
  std::ostringstream os;
  bool ok = true;
  for (int k : {2, 3}) {
    double err[3];
    for (int i = 0; i < 3; ++i) err[i] = quad_fixture_error(deltas[i], k);
    for (int i = 0; i + 1 < 3; ++i) {
      const double order = std::log2(err[i] / err[i + 1]);
      os << "k=" << k << " halving " << i + 1 << ": order " << fmt(order) << "; ";
      if (!(order >= k - 0.7)) ok = false;
    }
  }
  detail = os.str();
  return ok;
}

// ---------------------------------------------------------------- check 3

bool check_three_node_rule(std::string& detail) {
  Eigen::MatrixXd pts(3, 1);
  pts << 0.0, 0.5, 1.0;
  const PointSet e = make_point_set(1, pts, 1.5, "nodes");
  Cube q;
  q.corner = v1(0.0);
  q.side = 1.0;
  const SignedMeasure mu = local_measure(q, e, 3);
  if (mu.size() != 3) {
    detail = "expected 3 nodes, got " + std::to_string(mu.size());
    return false;
  }
  const double expect[3] = {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(mu.weights(i) - expect[i]));
  const cplx quartic = integrate(mu, [](const Eigen::VectorXd& x) {
    return cplx(std::pow(x(0), 4.0), 0.0);
  });
  worst = std::max(worst, std::abs(quartic.real() - 5.0 / 24.0));
  detail = "max deviation from the closed-form weights " + fmt(worst);
  return worst <= 1e-12;
}

// ---------------------------------------------------------------- check 4

double inversion_error(double step) {
  const WavePacketSum f =
      make_wave_packet_sum(1, {make_wave_packet(1.0, v1(0.0), v1(0.0), 1.0)});
  const PhaseSpaceGrid g = make_phase_space_grid(make_box1d(-6.0, 6.0), step,
                                                 make_box1d(-6.0, 6.0), step);
  const PhaseSpaceSamples s = gabor_transform(f, g, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double x = -2.2 + 4.4 * i / 49.0;
    const cplx exact = eval(f, v1(x));
    const cplx recon = gabor_invert(s, v1(x));
    worst = std::max(worst, std::abs(recon - exact) / std::abs(exact));
  }
  return worst;
}

bool check_inversion(std::string& detail) {
  const double coarse = inversion_error(0.25);
  const double fine = inversion_error(0.125);
  detail = "relative error " + fmt(coarse) + " at step 0.25, " + fmt(fine) +
           " at step 0.125";
  return coarse <= 1e-3 && fine < coarse;
}

// ---------------------------------------------------------------- check 5

bool check_rotation_symmetry(std::string& detail) {
  std::mt19937 rng(5150);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> sc(0.7, 1.5);
  const PhaseSpaceGrid g = make_phase_space_grid(make_box1d(-3.0, 3.0), 0.5,
                                                 make_box1d(-3.0, 3.0), 0.5);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<WavePacket> packets;
    for (int i = 0; i < 3; ++i) {
      packets.push_back(
          make_wave_packet(cplx(amp(rng), amp(rng)), v1(u(rng)), v1(u(rng)), sc(rng)));
    }
    const WavePacketSum f = make_wave_packet_sum(1, std::move(packets));
    const PhaseSpaceSamples sf = gabor_transform(f, g, 1.0);
    const PhaseSpaceSamples sfh = gabor_transform(fourier(f), g, 1.0);
    for (long flat = 0; flat < g.node_count(); ++flat) {
      Eigen::VectorXd y, eta;
      g.node(flat, y, eta);
      const long iy = std::lround((-eta(0) + 3.0) / 0.5);
      const long ie = std::lround((y(0) + 3.0) / 0.5);
      const long rotated = iy * g.eta_count() + ie;
      worst = std::max(worst,
                       std::abs(std::abs(sfh.values(flat)) - std::abs(sf.values(rotated))));
    }
  }
  detail = "5 random packet sums, worst magnitude mismatch " + fmt(worst);
  return worst <= 1e-9;
}

// ---------------------------------------------------------------- checks 6, 7

bool check_sparse_contraction(std::string& detail) {
  const double radius = 6.0 * std::pow(200.0, 2.0 / 3.0);
  auto a = std::make_shared<const PointSet>(power_set(1, 2.0 / 3.0, 6.0, radius));
  SolveConfig cfg = default_solve_config(0.5, 0.5, ParametrixMode::kSubcritical);
  cfg.delta = 6.0;
  cfg.translate = true;
  cfg.tol = 1e-12;
  cfg.max_iter = 40;

  auto shifted = translate_set(*a, v1(std::sqrt(6.0)));
  const Parametrix par =
      build_parametrix(shifted, shifted, 0.5, 0.5, ParametrixMode::kSubcritical, 1.0);
  const ContractionReport probe = contraction_probe(par, cfg.weight_a, cfg.weight_b);

  int star = -1;
  for (int i = 0; i < a->size(); ++i)
    if (std::abs(a->points(i, 0) - 6.0) < 1e-9) star = i;
  if (star < 0) {
    detail = "fixture point 6.0 missing";
    return false;
  }
  Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(a->size());
  alpha(star) = 1.0;
  const auto [f, rep] = neumann_solve(a, a, alpha, Eigen::VectorXcd::Zero(a->size()), cfg);
  double worst_ratio = 0.0;
  for (size_t j = 0; j + 1 < rep.residual_norms.size(); ++j) {
    if (rep.residual_norms[j] > 1e-300) {
      worst_ratio = std::max(worst_ratio, rep.residual_norms[j + 1] / rep.residual_norms[j]);
    }
  }
  detail = std::to_string(a->size()) + " points per side, probe ratio " +
           fmt(probe.max_ratio) + ", worst step ratio " + fmt(worst_ratio) + ", " +
           std::to_string(rep.iterations) + " iterations, final sups " +
           fmt(rep.final_sup_a) + "/" + fmt(rep.final_sup_b);
  return probe.max_ratio <= 0.5 && rep.converged && rep.iterations <= 40 &&
         worst_ratio <= 0.55 && rep.final_sup_a <= 1e-6 && rep.final_sup_b <= 1e-6;
}

bool check_dense_breakdown(std::string& detail) {
  const double radius = 0.3 * std::pow(200.0, 2.0 / 3.0);
  auto a = std::make_shared<const PointSet>(power_set(1, 2.0 / 3.0, 0.3, radius));
  SolveConfig cfg = default_solve_config(0.5, 0.5, ParametrixMode::kSubcritical);
  cfg.delta = 0.3;
  cfg.max_iter = 25;

  const Parametrix par =
      build_parametrix(a, a, 0.5, 0.5, ParametrixMode::kSubcritical, 1.0);
  const ContractionReport probe = contraction_probe(par, cfg.weight_a, cfg.weight_b);
  bool diverged = false;
  std::string how;
  Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(a->size());
  alpha(a->size() / 2) = 1.0;
  try {
    const auto [f, rep] = neumann_solve(a, a, alpha, alpha * 0.0, cfg);
    (void)f;
    diverged = !rep.converged;
    how = diverged ? "no convergence in 25 iterations" : "converged unexpectedly";
  } catch (const DivergenceError&) {
    diverged = true;
    how = "solver reported divergence";
  }
  detail = "probe ratio " + fmt(probe.max_ratio) + ", " + how;
  return probe.max_ratio > 1.0 || diverged;
}

// ---------------------------------------------------------------- check 8

bool check_critical_kernel(std::string& detail) {
  const int n = 150;
  Eigen::MatrixXd pts(2 * n, 1);
  for (int i = 1; i <= n; ++i) {
    pts(2 * (i - 1), 0) = -10.0 * std::sqrt(static_cast<double>(i));
    pts(2 * (i - 1) + 1, 0) = 10.0 * std::sqrt(static_cast<double>(i));
  }
  auto a = std::make_shared<const PointSet>(
      make_point_set(1, pts, 10.0 * std::sqrt(150.0) + 1.0, "sqrt lattice"));
  SolveConfig cfg = default_solve_config(1.0, 1.0, ParametrixMode::kCritical);
  cfg.delta = 10.0;
  cfg.tol = 1e-8;
  cfg.max_iter = 40;
  const auto [f, rep] = kernel_element(a, a, v1(5.0), cfg);
  const WavePacketSum fh = fourier(f);
  const double peak_err = std::abs(eval(f, v1(5.0)) - cplx(1.0, 0.0));
  double sup_a = 0.0, sup_b = 0.0;
  for (int i = 0; i < a->size(); ++i) {
    sup_a = std::max(sup_a, std::abs(eval(f, a->point(i))));
    sup_b = std::max(sup_b, std::abs(eval(fh, a->point(i))));
  }
  detail = std::to_string(a->size()) + " points per side, peak error " + fmt(peak_err) +
           ", residual sups " + fmt(sup_a) + "/" + fmt(sup_b) + ", " +
           std::to_string(rep.iterations) + " iterations";
  return rep.converged && peak_err <= 1e-4 && sup_a <= 1e-4 && sup_b <= 1e-4;
}

// ---------------------------------------------------------------- check 9

bool check_lattice_duality(std::string& detail) {
  const WavePacketSum f =
      make_wave_packet_sum(1, {make_wave_packet(1.0, v1(0.0), v1(0.0), 1.0)});
  const PoissonReport flat = twisted_poisson_check(MapSpec::identity(1), f, 3);
  const PoissonReport curved =
      twisted_poisson_check(MapSpec::power_bracket(1, 0.5), f, 20);
  detail = "identity gap " + fmt(flat.abs_gap) + "; curved gap " + fmt(curved.abs_gap) +
           ", outer-shell mass " + fmt(curved.m_tail);
  return flat.abs_gap <= 1e-10 && curved.abs_gap <= 1e-6 && curved.m_tail <= 1e-8;
}

// ---------------------------------------------------------------- check 10

double nu_fixture_error(double delta) {
  const SignedMeasure mu = lattice_measure(MapSpec::power_bracket(1, 0.5), delta, 12.0);
  const NuPacket nu = nu_packet(v1(3.0), v1(0.0), 1.0, 1.0, mu, mu);
  const PhaseSpaceGrid grid = make_phase_space_grid(make_box1d(-3.0, 9.0), 0.25,
                                                    make_box1d(-26.0, 26.0), 0.25);
  return nu_error_norm(nu, 4.0, grid);
}

bool check_sampled_window_decay(std::string& detail) {
  const double deltas[4] = {0.8, 0.4, 0.2, 0.1};
  double err[4];
  std::ostringstream os;
  bool decreasing = true;
  for (int i = 0; i < 4; ++i) {
    err[i] = nu_fixture_error(deltas[i]);
    if (i > 0 && !(err[i] < err[i - 1])) decreasing = false;
    os << "spacing " << deltas[i] << ": " << fmt(err[i]) << "; ";
  }
  const double bound = 0.5 * std::pow(jbracket(3.0), -4.0);
  os << "target " << fmt(bound);
  detail = os.str();
  return decreasing && err[3] <= bound;
}

// ---------------------------------------------------------------- check 11

bool check_geometry_cross_checks(std::string& detail) {
  std::mt19937 rng(321);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  std::uniform_real_distribution<double> param(0.1, 2.0);
  int checked = 0;
  double worst_sep = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 2);
    const int n = 2 + static_cast<int>(rng() % 11);
    Eigen::MatrixXd pts(n, d);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) pts(i, c) = coord(rng);
    const PointSet s = make_point_set(d, pts, 10.0, "random");
    const DensityParams prm = make_density_params(param(rng), param(rng));
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.size(); ++i)
      for (int j = i + 1; j < s.size(); ++j)
        margin = std::min(margin, (s.point(i) - s.point(j)).norm() -
                                      prm.delta *
                                          (std::pow(jbracket(s.point(i)), -prm.p) +
                                           std::pow(jbracket(s.point(j)), -prm.p)));
    const SeparationReport rep = check_separated(s, prm);
    worst_sep = std::max(worst_sep, std::abs(rep.worst_margin - margin));
    if (rep.ok != !(margin < 0.0)) {
      detail = "separation verdict mismatch on trial " + std::to_string(trial);
      return false;
    }
    ++checked;
  }

  // Density gap against an independent probe sweep on the same lattice.
  double worst_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 8);
    Eigen::MatrixXd pts(n, 1);
    for (int i = 0; i < n; ++i) pts(i, 0) = coord(rng);
    const PointSet s = make_point_set(1, pts, 10.0, "random");
    const DensityParams prm = make_density_params(param(rng), param(rng));
    const Box window = make_box1d(-1.0, 1.0);
    const double res = 0.1;
    const DensityReport rep = check_dense(s, prm, window, res);
    double gap = -std::numeric_limits<double>::infinity();
    for (double z = -1.0; z <= 1.0 + 1e-12; z += res) {
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < s.size(); ++i)
        best = std::min(best, std::abs(z - s.points(i, 0)) -
                                  prm.delta * std::pow(jbracket(s.points(i, 0)), -prm.p));
      gap = std::max(gap, best);
    }
    worst_gap = std::max(worst_gap, std::abs(rep.worst_gap - gap));
  }

  // Sampled transforms of a discrete measure, two independent evaluation paths.
  double worst_nu = 0.0;
  const PhaseSpaceGrid grid = make_phase_space_grid(make_box1d(-1.0, 2.0), 1.0,
                                                    make_box1d(-1.0, 1.0), 1.0);
  std::uniform_real_distribution<double> atom(-1.0, 3.0);
  std::uniform_real_distribution<double> wt(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    SignedMeasure mu;
    mu.dim = 1;
    mu.atoms = Eigen::MatrixXd::NullaryExpr(6, 1, [&](int, int) { return atom(rng); });
    mu.weights = Eigen::VectorXd::NullaryExpr(6, [&](int) { return wt(rng); });
    for (int side = 0; side < 2; ++side) {
      const NuPacket nu = (side == 0)
                              ? nu_packet(v1(2.0), v1(0.5), 1.0, 1.0, mu, mu)
                              : nu_packet(v1(0.5), v1(3.0), 1.0, 1.0, mu, mu);
      const PhaseSpaceSamples got = nu_error_samples(nu, grid, false);
      const WavePacketSum probe_f =
          (side == 0) ? make_wave_packet_sum(1, {nu.window})
                      : fourier(make_wave_packet_sum(1, {nu.window}));
      for (long flat = 0; flat < grid.node_count(); ++flat) {
        Eigen::VectorXd z, zeta;
        grid.node(flat, z, zeta);
        const WavePacket pr = gabor_atom(1, 1.0, z, zeta);
        const cplx direct = integrate(mu, [&](const Eigen::VectorXd& x) {
          return eval(probe_f, x) * std::conj(eval(pr, x));
        });
        worst_nu = std::max(worst_nu, std::abs(got.values(flat) - direct));
      }
    }
  }

  detail = std::to_string(checked) + " separation trials (worst margin diff " +
           fmt(worst_sep) + "), worst density-gap diff " + fmt(worst_gap) +
           ", worst two-path sample diff " + fmt(worst_nu);
  return worst_sep <= 1e-10 && worst_gap <= 1e-9 && worst_nu <= 1e-12;
}

// ---------------------------------------------------------------- check 12

bool check_sweep_determinism(std::string& detail) {
  const fs::path dir =
      fs::temp_directory_path() /
      ("ful_acceptance_" + std::to_string(static_cast<long>(::getpid())));
  fs::create_directories(dir);
  jsonv cfg;
  cfg["schema"] = 1;
  cfg["kind"] = "sweep";
  cfg["experiment"] = "contraction";
  cfg["variable"] = "delta";
  cfg["values"] = {1.0, 2.0, 4.0, 8.0};
  cfg["params"] = {{"n_max", 25.0}, {"p", 0.5}, {"q", 0.5}, {"translate", 1.0}};
  const std::string cpath = (dir / "sweep.json").string();
  save_json(cfg, cpath);
  const std::string out1 = (dir / "a.csv").string();
  const std::string out2 = (dir / "b.csv").string();
  if (cli_run({"sweep", "--config", cpath, "--out", out1, "--jobs", "2"}) != 0 ||
      cli_run({"sweep", "--config", cpath, "--out", out2, "--jobs", "2"}) != 0) {
    detail = "sweep command failed";
    return false;
  }
  auto slurp = [](const std::string& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  };
  const std::string t1 = slurp(out1);
  if (t1 != slurp(out2)) {
    detail = "parallel reruns differ";
    return false;
  }
  // Ratio column must fall strictly as the spacing widens.
  std::istringstream rows(t1);
  std::string line;
  std::getline(rows, line);
  double prev = std::numeric_limits<double>::infinity();
  int parsed = 0;
  bool decreasing = true;
  while (std::getline(rows, line)) {
    std::istringstream cells(line);
    std::string cell;
    for (int c = 0; c < 4; ++c) std::getline(cells, cell, ',');
    const double ratio = std::stod(cell);
    if (!(ratio < prev)) decreasing = false;
    prev = ratio;
    ++parsed;
  }
  detail = "4-row sweep run twice with 2 workers: byte-identical, ratios " +
           std::string(decreasing ? "strictly decreasing" : "NOT decreasing");
  return parsed == 4 && decreasing;
}

struct Check {
  std::string name;
  std::function<bool(std::string&)> fn;
};

}  // namespace

int main() {
  const std::vector<Check> checks = {
      {"cube quadrature exactness", check_cube_exactness},
      {"quadrature convergence order", check_convergence_order},
      {"three-node rule weights", check_three_node_rule},
      {"window-transform inversion", check_inversion},
      {"transform rotation symmetry", check_rotation_symmetry},
      {"sparse-pair interpolation contraction", check_sparse_contraction},
      {"dense-pair contraction breakdown", check_dense_breakdown},
      {"critical kernel element", check_critical_kernel},
      {"lattice-dual summation", check_lattice_duality},
      {"sampled-window error decay", check_sampled_window_decay},
      {"geometry and sampling cross-checks", check_geometry_cross_checks},
      {"sweep determinism", check_sweep_determinism},
  };
  int failures = 0;
  for (size_t i = 0; i < checks.size(); ++i) {
    std::string detail;
    bool ok = false;
    try {
      ok = checks[i].fn(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("[%s] %02zu %s — %s\n", ok ? "PASS" : "FAIL", i + 1,
                checks[i].name.c_str(), detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu checks passed\n", checks.size() - failures, checks.size());
  return failures;
}
