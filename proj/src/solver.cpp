#include "ful/solver.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ful {
namespace {

constexpr double kPi = std::numbers::pi;

double width_for(double bracket, double exponent, double width_constant,
                 ParametrixMode mode, const std::optional<double>& delta) {
  double w = width_constant * std::pow(bracket, -exponent);
  if (mode == ParametrixMode::kCritical) w *= std::sqrt(*delta);
  return w;
}

double block_weighted_norm(const Eigen::VectorXcd& r, const Eigen::VectorXd& pw_a,
                           const Eigen::VectorXd& pw_b) {
  const int na = static_cast<int>(pw_a.size());
  const int nb = static_cast<int>(pw_b.size());
  double acc = 0.0;
  for (int i = 0; i < na; ++i) acc += std::abs(r[i]) * pw_a[i];
  for (int i = 0; i < nb; ++i) acc += std::abs(r[na + i]) * pw_b[i];
  return acc;
}

Eigen::VectorXd point_weights(const PointSet& s, const WeightSpec& w) {
  Eigen::VectorXd pw(s.size());
  for (int i = 0; i < s.size(); ++i) pw[i] = point_weight(w, s.point(i));
  return pw;
}

}  // namespace

std::pair<RapidSequence, RapidSequence> apply_F(
    std::shared_ptr<const PointSet> a, std::shared_ptr<const PointSet> b,
    const WavePacketSum& f) {
  if (!a || !b) throw std::invalid_argument("apply_F: null set");
  Eigen::VectorXcd va(a->size()), vb(b->size());
  for (int i = 0; i < a->size(); ++i) va[i] = eval(f, a->point(i));
  WavePacketSum fhat = fourier(f);
  for (int i = 0; i < b->size(); ++i) vb[i] = eval(fhat, b->point(i));
  return {make_rapid_sequence(std::move(a), std::move(va)),
          make_rapid_sequence(std::move(b), std::move(vb))};
}

Parametrix build_parametrix(std::shared_ptr<const PointSet> a,
                            std::shared_ptr<const PointSet> b, double p, double q,
                            ParametrixMode mode, double width_constant,
                            std::optional<double> delta) {
  if (!a || !b) throw std::invalid_argument("parametrix: null set");
  if (a->size() == 0 && b->size() == 0)
    throw std::invalid_argument("parametrix: both sets are empty");
  if (a->dim != b->dim) throw std::invalid_argument("parametrix: dimension mismatch");
  if (!(p > 0) || !(q > 0)) throw std::invalid_argument("parametrix: p, q must be > 0");
  if (!(width_constant > 0))
    throw std::invalid_argument("parametrix: width constant must be > 0");
  if (mode == ParametrixMode::kCritical && (!delta || !(*delta > 0)))
    throw std::invalid_argument("parametrix: critical mode requires delta > 0");

  const int d = a->dim;
  Parametrix par;
  par.a = std::move(a);
  par.b = std::move(b);
  par.p = p;
  par.q = q;
  par.mode = mode;
  par.width_constant = width_constant;
  par.delta = delta;

  par.packets_a.reserve(par.a->size());
  for (int i = 0; i < par.a->size(); ++i) {
    Eigen::VectorXd a0 = par.a->point(i);
    double w = width_for(jbracket(a0), p, width_constant, mode, delta);
    par.packets_a.push_back(
        WavePacket{cplx(1.0, 0.0), a0, Eigen::VectorXd::Zero(d), w});
  }

  // The spectral packet is defined through its transform: a unit bump of
  // width w at b0.  Physically that is amplitude w^d, frequency b0, scale 1/w.
  par.packets_b.reserve(par.b->size());
  for (int i = 0; i < par.b->size(); ++i) {
    Eigen::VectorXd b0 = par.b->point(i);
    double w = width_for(jbracket(b0), q, width_constant, mode, delta);
    par.packets_b.push_back(WavePacket{cplx(std::pow(w, d), 0.0),
                                       Eigen::VectorXd::Zero(d), b0, 1.0 / w});
  }
  return par;
}

WavePacketSum apply_P(const Parametrix& par, const Eigen::VectorXcd& alpha,
                      const Eigen::VectorXcd& beta) {
  if (alpha.size() != par.a->size() || beta.size() != par.b->size())
    throw std::invalid_argument("apply_P: coefficient length mismatch");
  WavePacketSum f{par.a->dim, {}};
  for (int i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == cplx(0.0)) continue;
    WavePacket pk = par.packets_a[i];
    pk.amp *= alpha[i];
    f.packets.push_back(std::move(pk));
  }
  for (int i = 0; i < beta.size(); ++i) {
    if (beta[i] == cplx(0.0)) continue;
    WavePacket pk = par.packets_b[i];
    pk.amp *= beta[i];
    f.packets.push_back(std::move(pk));
  }
  return f;
}

Eigen::MatrixXcd fp_matrix(const Parametrix& par) {
  const int na = par.a->size();
  const int nb = par.b->size();
  Eigen::MatrixXcd m(na + nb, na + nb);

  auto fill_column = [&](int col, const WavePacket& pk) {
    WavePacket pk_hat = fourier(pk);
    for (int i = 0; i < na; ++i) m(i, col) = eval(pk, par.a->point(i));
    for (int i = 0; i < nb; ++i) m(na + i, col) = eval(pk_hat, par.b->point(i));
  };

  for (int j = 0; j < na; ++j) fill_column(j, par.packets_a[j]);
  for (int j = 0; j < nb; ++j) fill_column(na + j, par.packets_b[j]);
  return m;
}

SolveConfig default_solve_config(double p, double q, ParametrixMode mode) {
  if (!(p > 0) || !(q > 0))
    throw std::invalid_argument("solve config: p, q must be > 0");
  SolveConfig cfg;
  cfg.p = p;
  cfg.q = q;
  cfg.mode = mode;
  if (mode == ParametrixMode::kSubcritical) {
    double pt, qt;
    if (p < 1.0 && q < 1.0) {
      pt = qt = 1.0;
    } else {
      if (!(p * q < 1.0))
        throw std::invalid_argument(
            "solve config: subcritical mode needs p*q < 1");
      double eps = 0.5 * (1.0 / (p * q) - 1.0);
      pt = p * (1.0 + eps);
      qt = 1.0 / pt;
      if (!(pt > p && qt > q))
        throw std::invalid_argument("solve config: no admissible exponent pair");
    }
    cfg.weight_a = polynomial_max_weight(6.0, 10.0, 1e-6, std::sqrt(pt));
    cfg.weight_b = polynomial_max_weight(6.0, 10.0, 1e-6, std::sqrt(qt));
  } else {
    cfg.weight_a = log_cubed_weight(std::sqrt(p));
    cfg.weight_b = log_cubed_weight(std::sqrt(q));
  }
  return cfg;
}

std::pair<WavePacketSum, SolveReport> neumann_iterate(
    const Parametrix& par, const Eigen::VectorXcd& alpha,
    const Eigen::VectorXcd& beta, const WeightSpec& wa, const WeightSpec& wb,
    double tol, int max_iter, double divergence_factor) {
  const int na = par.a->size();
  const int nb = par.b->size();
  if (alpha.size() != na || beta.size() != nb)
    throw std::invalid_argument("solve: target length mismatch");
  if (!(tol > 0) || max_iter < 1)
    throw std::invalid_argument("solve: need tol > 0 and max_iter >= 1");

  const Eigen::VectorXd pw_a = point_weights(*par.a, wa);
  const Eigen::VectorXd pw_b = point_weights(*par.b, wb);

  Eigen::VectorXcd r(na + nb);
  r.head(na) = alpha;
  r.tail(nb) = beta;

  SolveReport rep;
  const double norm0 = block_weighted_norm(r, pw_a, pw_b);
  rep.residual_norms.push_back(norm0);
  if (norm0 == 0.0) {
    rep.converged = true;
    return {WavePacketSum{par.a->dim, {}}, rep};
  }

  const Eigen::MatrixXcd m = fp_matrix(par);
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(na + nb);

  for (int it = 1; it <= max_iter; ++it) {
    acc += r;
    r -= m * r;
    double nrm = block_weighted_norm(r, pw_a, pw_b);
    rep.residual_norms.push_back(nrm);
    rep.iterations = it;
    if (nrm >= divergence_factor * norm0) {
      rep.final_sup_a = na ? r.head(na).cwiseAbs().maxCoeff() : 0.0;
      rep.final_sup_b = nb ? r.tail(nb).cwiseAbs().maxCoeff() : 0.0;
      throw DivergenceError(
          "solve: residual grew past " + std::to_string(divergence_factor) +
              "x the initial norm after " + std::to_string(it) + " iterations",
          rep);
    }
    if (nrm <= tol * norm0) {
      rep.converged = true;
      break;
    }
  }

  rep.final_sup_a = na ? r.head(na).cwiseAbs().maxCoeff() : 0.0;
  rep.final_sup_b = nb ? r.tail(nb).cwiseAbs().maxCoeff() : 0.0;
  return {apply_P(par, acc.head(na), acc.tail(nb)), rep};
}

std::shared_ptr<const PointSet> translate_set(const PointSet& s,
                                              const Eigen::VectorXd& u) {
  if (u.size() != s.dim) throw std::invalid_argument("translate: dimension mismatch");
  PointSet out;
  out.dim = s.dim;
  out.radius = s.radius + u.norm();
  out.provenance = "translate(" + s.provenance + ")";
  out.points = s.points;
  out.points.rowwise() += u.transpose();
  return std::make_shared<const PointSet>(std::move(out));
}

std::pair<WavePacketSum, SolveReport> neumann_solve(
    std::shared_ptr<const PointSet> a, std::shared_ptr<const PointSet> b,
    const Eigen::VectorXcd& alpha, const Eigen::VectorXcd& beta,
    const SolveConfig& cfg) {
  if (!a || !b) throw std::invalid_argument("solve: null set");

  if (!cfg.translate) {
    Parametrix par = build_parametrix(a, b, cfg.p, cfg.q, cfg.mode,
                                      cfg.width_constant, cfg.delta);
    return neumann_iterate(par, alpha, beta, cfg.weight_a, cfg.weight_b, cfg.tol,
                           cfg.max_iter, cfg.divergence_factor);
  }

  if (!cfg.delta || !(*cfg.delta > 0))
    throw std::invalid_argument("solve: translate requires delta > 0");

  // Conjugate by g(x) = e^{2 pi i u.x} f(x - u): both sets shift by
  // u = delta^(1/2) e_1, targets pick up unit-modulus phases, and packet
  // parameters map back in closed form.  Magnitudes, hence norms and
  // convergence behavior, are unchanged.
  const int d = a->dim;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
  u[0] = std::sqrt(*cfg.delta);

  auto at = translate_set(*a, u);
  auto bt = translate_set(*b, u);

  Eigen::VectorXcd alpha_t(alpha.size()), beta_t(beta.size());
  for (int i = 0; i < alpha.size(); ++i) {
    Eigen::VectorXd as = at->point(i);  // a + u; order preserved by the shift
    alpha_t[i] = alpha[i] * std::polar(1.0, 2.0 * kPi * u.dot(as));
  }
  for (int i = 0; i < beta.size(); ++i) {
    Eigen::VectorXd b0 = b->point(i);
    beta_t[i] = beta[i] * std::polar(1.0, -2.0 * kPi * u.dot(b0));
  }

  Parametrix par = build_parametrix(at, bt, cfg.p, cfg.q, cfg.mode,
                                    cfg.width_constant, cfg.delta);
  auto [g, rep] = neumann_iterate(par, alpha_t, beta_t, cfg.weight_a, cfg.weight_b,
                                  cfg.tol, cfg.max_iter, cfg.divergence_factor);

  // f(x) = e^{-2 pi i u.(x+u)} g(x+u).
  WavePacketSum f{d, {}};
  f.packets.reserve(g.packets.size());
  for (const auto& pk : g.packets) {
    WavePacket out = pk;
    out.center = pk.center - u;
    out.freq = pk.freq - u;
    out.amp = pk.amp * std::polar(1.0, 2.0 * kPi * (pk.freq - u).dot(u));
    f.packets.push_back(std::move(out));
  }
  return {std::move(f), std::move(rep)};
}

ContractionReport contraction_probe(const Parametrix& par, const WeightSpec& wa,
                                    const WeightSpec& wb) {
  const int na = par.a->size();
  const int nb = par.b->size();
  const Eigen::VectorXd pw_a = point_weights(*par.a, wa);
  const Eigen::VectorXd pw_b = point_weights(*par.b, wb);
  const Eigen::MatrixXcd m = fp_matrix(par);

  ContractionReport rep;
  rep.ratios_a.resize(na);
  rep.ratios_b.resize(nb);
  for (int j = 0; j < na; ++j) {
    double leak = 0.0;
    for (int i = 0; i < nb; ++i) leak += std::abs(m(na + i, j)) * pw_b[i];
    rep.ratios_a[j] = leak / pw_a[j];
  }
  for (int j = 0; j < nb; ++j) {
    double leak = 0.0;
    for (int i = 0; i < na; ++i) leak += std::abs(m(i, na + j)) * pw_a[i];
    rep.ratios_b[j] = leak / pw_b[j];
  }
  double ma = na ? rep.ratios_a.maxCoeff() : 0.0;
  double mb = nb ? rep.ratios_b.maxCoeff() : 0.0;
  rep.max_ratio = std::max(ma, mb);
  return rep;
}

std::pair<WavePacketSum, SolveReport> kernel_element(
    std::shared_ptr<const PointSet> a, std::shared_ptr<const PointSet> b,
    const Eigen::VectorXd& xstar, const SolveConfig& cfg) {
  if (!a || !b) throw std::invalid_argument("kernel: null set");
  if (xstar.size() != a->dim)
    throw std::invalid_argument("kernel: xstar dimension mismatch");
  for (int i = 0; i < a->size(); ++i) {
    double scale = std::max({1.0, xstar.norm(), a->point(i).norm()});
    if ((a->point(i) - xstar).norm() <= 1e-12 * scale)
      throw std::invalid_argument("kernel: xstar coincides with a point of A");
  }

  Eigen::MatrixXd pts(a->size() + 1, a->dim);
  pts.topRows(a->size()) = a->points;
  pts.row(a->size()) = xstar.transpose();
  double radius = std::max(a->radius, xstar.norm() * (1.0 + 1e-12) + 1e-12);
  auto augmented = std::make_shared<const PointSet>(make_point_set(
      a->dim, std::move(pts), radius, "augment(" + a->provenance + ")"));

  int star_index = -1;
  for (int i = 0; i < augmented->size(); ++i) {
    if ((augmented->point(i) - xstar).norm() == 0.0) {
      star_index = i;
      break;
    }
  }
  if (star_index < 0) throw std::runtime_error("kernel: lost track of xstar");

  Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(augmented->size());
  alpha[star_index] = 1.0;
  Eigen::VectorXcd beta = Eigen::VectorXcd::Zero(b->size());
  return neumann_solve(augmented, std::move(b), alpha, beta, cfg);
}

}  // namespace ful
