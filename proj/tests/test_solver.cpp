#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <memory>
#include <random>

#include "ful/solver.hpp"

using namespace ful;

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

std::shared_ptr<const PointSet> set1d(std::initializer_list<double> xs, double radius) {
  Eigen::MatrixXd pts(static_cast<int>(xs.size()), 1);
  int i = 0;
  for (double x : xs) pts(i++, 0) = x;
  return std::make_shared<const PointSet>(make_point_set(1, pts, radius, "test"));
}

Eigen::VectorXcd random_coefs(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(u(rng), u(rng));
  return v;
}

}  // namespace

TEST_CASE("restriction operator samples both sides") {
  auto a = set1d({-1.0, 0.5}, 2.0);
  auto b = set1d({0.0, 2.0}, 3.0);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const WavePacketSum f = make_wave_packet_sum(
      1, {make_wave_packet(cplx(u(rng), u(rng)), v1(0.2), v1(0.4), 1.1),
          make_wave_packet(cplx(u(rng), u(rng)), v1(-0.5), v1(-0.3), 0.8)});
  const auto [fa, fb] = apply_F(a, b, f);
  REQUIRE(fa.size() == 2);
  REQUIRE(fb.size() == 2);
  const WavePacketSum fh = fourier(f);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(fa.values(i) - eval(f, a->point(i))) < 1e-14);
    CHECK(std::abs(fb.values(i) - eval(fh, b->point(i))) < 1e-14);
  }
}

TEST_CASE("parametrix packets have the advertised structure") {
  auto a = set1d({1.0, 3.0}, 4.0);
  auto b = set1d({2.0}, 3.0);
  const Parametrix par = build_parametrix(a, b, 0.5, 0.8, ParametrixMode::kSubcritical, 0.9);
  REQUIRE(par.packets_a.size() == 2);
  REQUIRE(par.packets_b.size() == 1);

  // Site packets: unit bumps at the points of A with width <a>^-p.
  const WavePacket& phi = par.packets_a[0];
  CHECK(std::abs(phi.amp - cplx(1.0, 0.0)) < 1e-14);
  CHECK(phi.center(0) == doctest::Approx(1.0));
  CHECK(phi.freq(0) == doctest::Approx(0.0));
  CHECK(phi.scale == doctest::Approx(0.9 * std::pow(jbracket(1.0), -0.5)).epsilon(1e-13));

  // Spectral packets: the transform is a unit bump at b with width <b>^-q.
  const WavePacket psi_hat = fourier(par.packets_b[0]);
  CHECK(std::abs(psi_hat.amp - cplx(1.0, 0.0)) < 1e-13);
  CHECK(psi_hat.center(0) == doctest::Approx(2.0));
  CHECK(std::abs(psi_hat.freq(0)) < 1e-13);
  CHECK(psi_hat.scale == doctest::Approx(0.9 * std::pow(jbracket(2.0), -0.8)).epsilon(1e-13));

  // Critical mode multiplies both widths by sqrt(delta).
  const Parametrix crit =
      build_parametrix(a, b, 0.5, 0.8, ParametrixMode::kCritical, 0.9, 4.0);
  CHECK(crit.packets_a[0].scale == doctest::Approx(2.0 * par.packets_a[0].scale));
  CHECK(fourier(crit.packets_b[0]).scale == doctest::Approx(2.0 * psi_hat.scale));

  CHECK_THROWS_AS(build_parametrix(a, b, -1.0, 0.8, ParametrixMode::kSubcritical),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_parametrix(a, b, 0.5, 0.8, ParametrixMode::kCritical),
                  std::invalid_argument);  // critical mode needs delta
}

TEST_CASE("restriction matrix columns are restricted packets") {
  auto a = set1d({-2.0, 1.0, 4.0}, 5.0);
  auto b = set1d({0.5, 2.5}, 3.0);
  const Parametrix par = build_parametrix(a, b, 0.6, 0.7, ParametrixMode::kSubcritical);
  const Eigen::MatrixXcd m = fp_matrix(par);
  REQUIRE(m.rows() == 5);
  REQUIRE(m.cols() == 5);
  const int na = 3;
  for (int j : {0, 2, 3, 4}) {
    Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(3);
    Eigen::VectorXcd beta = Eigen::VectorXcd::Zero(2);
    if (j < na) alpha(j) = 1.0;
    else beta(j - na) = 1.0;
    const WavePacketSum col = apply_P(par, alpha, beta);
    const auto [fa, fb] = apply_F(a, b, col);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(m(i, j) - fa.values(i)) < 1e-13);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(m(na + i, j) - fb.values(i)) < 1e-13);
  }
}

TEST_CASE("contraction probe matches a direct recomputation") {
  auto a = set1d({-2.0, 1.5}, 3.0);
  auto b = set1d({0.8, 2.2}, 3.0);
  const Parametrix par = build_parametrix(a, b, 0.6, 0.6, ParametrixMode::kSubcritical);
  const WeightSpec wa = polynomial_max_weight(4.0, 8.0, 1e-4, 1.0);
  const WeightSpec wb = polynomial_max_weight(3.0, 8.0, 1e-4, 1.0);
  const ContractionReport rep = contraction_probe(par, wa, wb);
  REQUIRE(rep.ratios_a.size() == 2);
  REQUIRE(rep.ratios_b.size() == 2);
  double expect_max = 0.0;
  for (int j = 0; j < 2; ++j) {
    const WavePacket phi_hat = fourier(par.packets_a[j]);
    double mass = 0.0;
    for (int i = 0; i < 2; ++i)
      mass += std::abs(eval(phi_hat, b->point(i))) * point_weight(wb, b->point(i));
    const double ratio = mass / point_weight(wa, a->point(j));
    CHECK(rep.ratios_a(j) == doctest::Approx(ratio).epsilon(1e-12));
    expect_max = std::max(expect_max, ratio);
  }
  for (int j = 0; j < 2; ++j) {
    double mass = 0.0;
    for (int i = 0; i < 2; ++i)
      mass += std::abs(eval(par.packets_b[j], a->point(i))) * point_weight(wa, a->point(i));
    const double ratio = mass / point_weight(wb, b->point(j));
    CHECK(rep.ratios_b(j) == doctest::Approx(ratio).epsilon(1e-12));
    expect_max = std::max(expect_max, ratio);
  }
  CHECK(rep.max_ratio == doctest::Approx(expect_max).epsilon(1e-12));
}

TEST_CASE("zero target converges immediately to the zero function") {
  auto a = set1d({1.0, 2.0}, 3.0);
  auto b = set1d({1.5}, 2.0);
  const Parametrix par = build_parametrix(a, b, 0.5, 0.5, ParametrixMode::kSubcritical);
  const WeightSpec w = polynomial_max_weight(6.0, 10.0, 1e-6, 1.0);
  const auto [f, rep] = neumann_iterate(par, Eigen::VectorXcd::Zero(2),
                                        Eigen::VectorXcd::Zero(1), w, w, 1e-8, 20);
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
  REQUIRE(rep.residual_norms.size() == 1);
  CHECK(rep.residual_norms[0] == doctest::Approx(0.0));
  CHECK(f.size() == 0);
}

TEST_CASE("the returned function reproduces the target up to the final residual") {
  auto a = set1d({1.5, 2.5}, 3.0);
  auto b = set1d({0.8, 1.2}, 2.0);
  const Parametrix par = build_parametrix(a, b, 0.6, 0.7, ParametrixMode::kSubcritical);
  const WeightSpec w = polynomial_max_weight(6.0, 10.0, 1e-6, 1.0);
  std::mt19937 rng(41);
  const Eigen::VectorXcd alpha = random_coefs(rng, 2);
  const Eigen::VectorXcd beta = random_coefs(rng, 2);
  const auto [f, rep] =
      neumann_iterate(par, alpha, beta, w, w, 1e-30, 6, 1e12);
  const auto [fa, fb] = apply_F(a, b, f);
  double sup_a = 0.0, sup_b = 0.0;
  for (int i = 0; i < 2; ++i) {
    sup_a = std::max(sup_a, std::abs(alpha(i) - fa.values(i)));
    sup_b = std::max(sup_b, std::abs(beta(i) - fb.values(i)));
  }
  CHECK(rep.final_sup_a == doctest::Approx(sup_a).epsilon(1e-10));
  CHECK(rep.final_sup_b == doctest::Approx(sup_b).epsilon(1e-10));
  CHECK(rep.residual_norms.size() == static_cast<size_t>(rep.iterations) + 1);
}

TEST_CASE("solving the transformed problem commutes with the transform") {
  // Interpolating (alpha, beta) on (A, B) and then taking the transform must
  // agree with interpolating the swapped data on (B, -A): the packet family
  // is closed under the exchange, so the two iterations are exactly
  // conjugate, residual history included.
  auto a = set1d({1.5, 2.5}, 3.0);
  auto b = set1d({0.8, 1.2}, 2.0);
  auto neg_a = set1d({-2.5, -1.5}, 3.0);
  const Parametrix par1 = build_parametrix(a, b, 0.6, 0.7, ParametrixMode::kSubcritical);
  const Parametrix par2 =
      build_parametrix(b, neg_a, 0.7, 0.6, ParametrixMode::kSubcritical);
  const WeightSpec wa = polynomial_max_weight(6.0, 10.0, 1e-6, 1.0);
  const WeightSpec wb = polynomial_max_weight(4.0, 10.0, 1e-6, 1.0);
  std::mt19937 rng(1234);
  const Eigen::VectorXcd alpha = random_coefs(rng, 2);
  const Eigen::VectorXcd beta = random_coefs(rng, 2);
  // -A sorts in reverse order, so the alpha data flips index.
  Eigen::VectorXcd alpha_flipped(2);
  alpha_flipped << alpha(1), alpha(0);

  const auto [f1, rep1] = neumann_iterate(par1, alpha, beta, wa, wb, 1e-30, 6, 1e12);
  const auto [f2, rep2] =
      neumann_iterate(par2, beta, alpha_flipped, wb, wa, 1e-30, 6, 1e12);

  REQUIRE(rep1.residual_norms.size() == rep2.residual_norms.size());
  for (size_t j = 0; j < rep1.residual_norms.size(); ++j) {
    CHECK(rep1.residual_norms[j] ==
          doctest::Approx(rep2.residual_norms[j]).epsilon(1e-11));
  }
  const WavePacketSum f1_hat = fourier(f1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int probe = 0; probe < 8; ++probe) {
    const Eigen::VectorXd x = v1(u(rng));
    const cplx lhs = eval(f1_hat, x);
    const cplx rhs = eval(f2, x);
    CHECK(std::abs(lhs - rhs) < 1e-11 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("widely separated sets contract and the solve interpolates") {
  const double radius = 6.0 * std::pow(40.0, 2.0 / 3.0);
  auto a = std::make_shared<const PointSet>(power_set(1, 2.0 / 3.0, 6.0, radius));
  SolveConfig cfg = default_solve_config(0.5, 0.5, ParametrixMode::kSubcritical);
  cfg.delta = 6.0;
  cfg.translate = true;  // 0 lies in both sets
  cfg.tol = 1e-12;
  cfg.max_iter = 60;

  // Contraction probe on the shifted sets the solver actually uses.
  const Eigen::VectorXd u = v1(std::sqrt(6.0));
  auto at = translate_set(*a, u);
  const Parametrix par =
      build_parametrix(at, at, 0.5, 0.5, ParametrixMode::kSubcritical, 1.0);
  const ContractionReport probe = contraction_probe(par, cfg.weight_a, cfg.weight_b);
  CHECK(probe.max_ratio <= 0.5);

  int star = -1;
  for (int i = 0; i < a->size(); ++i)
    if (std::abs(a->points(i, 0) - 6.0) < 1e-9) star = i;
  REQUIRE(star >= 0);
  Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(a->size());
  alpha(star) = 1.0;
  const Eigen::VectorXcd beta = Eigen::VectorXcd::Zero(a->size());
  const auto [f, rep] = neumann_solve(a, a, alpha, beta, cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 40);
  for (size_t j = 0; j + 1 < rep.residual_norms.size(); ++j) {
    if (rep.residual_norms[j] > 0.0) {
      CHECK(rep.residual_norms[j + 1] / rep.residual_norms[j] <= 0.55);
    }
  }
  // The solution interpolates on the original, untranslated sets.
  const auto [fa, fb] = apply_F(a, a, f);
  CHECK(std::abs(fa.values(star) - cplx(1.0, 0.0)) <= 1e-6);
  for (int i = 0; i < a->size(); ++i) {
    if (i != star) CHECK(std::abs(fa.values(i)) <= 1e-6);
    CHECK(std::abs(fb.values(i)) <= 1e-6);
  }
}

TEST_CASE("dense sets break the contraction") {
  const double radius = 0.3 * std::pow(30.0, 2.0 / 3.0);
  auto a = std::make_shared<const PointSet>(power_set(1, 2.0 / 3.0, 0.3, radius));
  SolveConfig cfg = default_solve_config(0.5, 0.5, ParametrixMode::kSubcritical);
  cfg.delta = 0.3;
  cfg.max_iter = 25;

  const Parametrix par =
      build_parametrix(a, a, 0.5, 0.5, ParametrixMode::kSubcritical, 1.0);
  const ContractionReport probe = contraction_probe(par, cfg.weight_a, cfg.weight_b);

  Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(a->size());
  alpha(a->size() / 2) = 1.0;
  bool diverged = false;
  try {
    const auto [f, rep] = neumann_solve(a, a, alpha, alpha * 0.0, cfg);
    (void)f;
    if (!rep.converged) diverged = true;
  } catch (const DivergenceError& e) {
    diverged = true;
    REQUIRE(e.report.residual_norms.size() >= 2);
    CHECK(e.report.residual_norms.back() > e.report.residual_norms.front());
  }
  CHECK((probe.max_ratio > 1.0 || diverged));
}

TEST_CASE("kernel elements peak at the marked point and vanish on the data") {
  auto a = set1d({-12.0, -8.0, 8.0, 12.0}, 13.0);
  SolveConfig cfg = default_solve_config(0.6, 0.6, ParametrixMode::kSubcritical);
  cfg.tol = 1e-10;
  const auto [f, rep] = kernel_element(a, a, v1(3.0), cfg);
  CHECK(rep.converged);
  const WavePacketSum fh = fourier(f);
  CHECK(std::abs(eval(f, v1(3.0)) - cplx(1.0, 0.0)) <= 1e-5);
  for (int i = 0; i < a->size(); ++i) {
    CHECK(std::abs(eval(f, a->point(i))) <= 1e-5);
    CHECK(std::abs(eval(fh, a->point(i))) <= 1e-5);
  }
  CHECK_THROWS_AS(kernel_element(a, a, v1(8.0), cfg), std::invalid_argument);
}

TEST_CASE("default configurations pick the canonical weights") {
  const SolveConfig sub = default_solve_config(0.5, 0.5, ParametrixMode::kSubcritical);
  CHECK(sub.weight_a.family == WeightSpec::Family::kPolynomialMax);
  CHECK(sub.weight_a.r == doctest::Approx(1.0));  // both exponents below one
  CHECK(sub.weight_b.r == doctest::Approx(1.0));
  CHECK(sub.weight_a.s0 == doctest::Approx(6.0));
  CHECK(sub.weight_a.s == doctest::Approx(10.0));

  const SolveConfig crit = default_solve_config(1.0, 1.0, ParametrixMode::kCritical);
  CHECK(crit.weight_a.family == WeightSpec::Family::kLogCubed);
  CHECK(crit.weight_a.r == doctest::Approx(1.0));

  const SolveConfig crit2 = default_solve_config(4.0, 0.25, ParametrixMode::kCritical);
  CHECK(crit2.weight_a.r == doctest::Approx(2.0));
  CHECK(crit2.weight_b.r == doctest::Approx(0.5));

  CHECK_THROWS_AS(default_solve_config(1.2, 1.2, ParametrixMode::kSubcritical),
                  std::invalid_argument);
}

TEST_CASE("translated solves require the shift scale") {
  auto a = set1d({0.0, 5.0}, 6.0);
  SolveConfig cfg = default_solve_config(0.5, 0.5, ParametrixMode::kSubcritical);
  cfg.translate = true;  // no delta set
  Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(2);
  alpha(1) = 1.0;
  CHECK_THROWS_AS(neumann_solve(a, a, alpha, alpha * 0.0, cfg), std::invalid_argument);
}

TEST_CASE("translation shifts points and keeps them ordered") {
  const PointSet s = power_set(1, 1.0, 1.0, 2.5);
  auto t = translate_set(s, v1(0.7));
  REQUIRE(t->size() == s.size());
  for (int i = 0; i < s.size(); ++i) {
    CHECK(t->points(i, 0) == doctest::Approx(s.points(i, 0) + 0.7));
  }
  double maxnorm = 0.0;
  for (int i = 0; i < t->size(); ++i) maxnorm = std::max(maxnorm, t->point(i).norm());
  CHECK(t->radius >= maxnorm);
}
