#include "ful/lattice.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

namespace ful {

namespace {

constexpr double kPi = std::numbers::pi;
// e^{-pi u^2} < 3e-25 beyond this many window widths; contributions cut here
// are far below every tolerance used downstream.
constexpr double kGaussianReach = 4.25;
constexpr long kMaxLatticeEnumeration = 25'000'000;

/// Visit every n in Z^d with |n|_inf <= bound, lexicographic order.
template <typename Fn>
void for_each_lattice_box(int dim, long bound, Fn&& fn) {
  Eigen::VectorXd n = Eigen::VectorXd::Constant(dim, -static_cast<double>(bound));
  while (true) {
    fn(n);
    int axis = dim - 1;
    while (axis >= 0) {
      n(axis) += 1.0;
      if (n(axis) <= static_cast<double>(bound)) break;
      n(axis) = -static_cast<double>(bound);
      --axis;
    }
    if (axis < 0) return;
  }
}

/// Visit the shell |n|_inf == s (for s = 0, just the origin).
template <typename Fn>
void for_each_lattice_shell(int dim, long s, Fn&& fn) {
  for_each_lattice_box(dim, s, [&](const Eigen::VectorXd& n) {
    if (static_cast<long>(n.cwiseAbs().maxCoeff()) == s) fn(n);
  });
}

/// Axis-aligned box outside which every packet of f is below ~3e-25 of its
/// amplitude (reach kGaussianReach window widths from each center).
Box envelope_box(const WavePacketSum& f) {
  const int d = f.dim;
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, 0.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, 0.0);
  bool first = true;
  for (const WavePacket& p : f.packets) {
    const double reach = kGaussianReach * p.scale;
    Eigen::VectorXd plo = p.center.array() - reach;
    Eigen::VectorXd phi = p.center.array() + reach;
    if (first) {
      lo = plo;
      hi = phi;
      first = false;
    } else {
      lo = lo.cwiseMin(plo);
      hi = hi.cwiseMax(phi);
    }
  }
  return make_box(lo, hi);
}

/** Oscillatory term  int f(x) exp(-2 pi i m . inverse(x)) dx  over `box` by
 *  nested adaptive Gauss-Kronrod panels, each axis split at 0 (the kink of
 *  the radial maps).  Throws QuadratureFailure when the error estimate of a
 *  panel stays far above the requested tolerance.
 */
class OscillatoryTerm {
 public:
  OscillatoryTerm(const WavePacketSum& f, const MapSpec& map,
                  const Eigen::VectorXd& m, const Box& box,
                  const PoissonQuadSpec& spec)
      : f_(f), map_(map), m_(m), box_(box), spec_(spec), x_(box.dim()) {}

  cplx value() { return integrate_axis(0); }

 private:
  cplx integrate_axis(int axis) {
    const double lo = box_.lo(axis);
    const double hi = box_.hi(axis);
    std::vector<std::pair<double, double>> segments;
    if (lo < 0.0 && hi > 0.0) {
      segments = {{lo, 0.0}, {0.0, hi}};
    } else {
      segments = {{lo, hi}};
    }
    const bool innermost = (axis + 1 == box_.dim());
    cplx total = 0.0;
    for (const auto& [a, b] : segments) {
      auto g = [&](double t) -> cplx {
        x_(axis) = t;
        if (!innermost) return integrate_axis(axis + 1);
        return eval(f_, x_) * std::polar(1.0, -2.0 * kPi * m_.dot(map_.inverse(x_)));
      };
      double err = 0.0;
      double l1 = 0.0;
      total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
          g, a, b, spec_.max_depth, spec_.rel_tol, &err, &l1);
      if (err > 1e-8 * (1.0 + l1)) {
        std::ostringstream msg;
        msg << "oscillatory panel [" << a << ", " << b << "] on axis " << axis
            << " stalled at error estimate " << err << " (mass " << l1 << ")";
        throw QuadratureFailure(msg.str());
      }
    }
    return total;
  }

  const WavePacketSum& f_;
  const MapSpec& map_;
  const Eigen::VectorXd& m_;
  const Box& box_;
  const PoissonQuadSpec& spec_;
  Eigen::VectorXd x_;
};

}  // namespace

SignedMeasure lattice_measure(const MapSpec& map, double delta, double radius) {
  if (!(delta > 0.0)) throw std::invalid_argument("lattice_measure: delta must be > 0");
  if (!(radius > 0.0)) throw std::invalid_argument("lattice_measure: radius must be > 0");
  const int d = map.dim();
  const double bound = map.max_preimage_norm(radius / delta);
  const long nmax = static_cast<long>(std::ceil(bound)) + 1;
  double count = std::pow(2.0 * static_cast<double>(nmax) + 1.0, d);
  if (count > static_cast<double>(kMaxLatticeEnumeration)) {
    throw std::invalid_argument("lattice_measure: enumeration too large; shrink radius/delta");
  }

  const double slack = 1.0 + 1e-9;
  std::vector<std::pair<Eigen::VectorXd, double>> rows;
  for_each_lattice_box(d, nmax, [&](const Eigen::VectorXd& n) {
    Eigen::VectorXd atom = delta * map.forward(n);
    if (atom.norm() > radius * slack) return;
    const double det = map.jacobian_det(n);
    if (!(det > 0.0)) {
      std::ostringstream msg;
      msg << "lattice_measure: non-positive Jacobian determinant " << det
          << " at lattice site " << n.transpose();
      throw OrientationError(msg.str());
    }
    rows.emplace_back(std::move(atom), std::pow(delta, d) * det);
  });

  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.first.data(), a.first.data() + a.first.size(),
                                        b.first.data(), b.first.data() + b.first.size());
  });

  SignedMeasure mu;
  mu.dim = d;
  mu.atoms.resize(static_cast<int>(rows.size()), d);
  mu.weights.resize(static_cast<int>(rows.size()));
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    mu.atoms.row(i) = rows[static_cast<size_t>(i)].first.transpose();
    mu.weights(i) = rows[static_cast<size_t>(i)].second;
  }
  std::ostringstream prov;
  prov.precision(17);
  prov << "lattice(map=" << map.describe() << ", delta=" << delta
       << ", radius=" << radius << ")";
  mu.provenance = prov.str();
  return mu;
}

PoissonReport twisted_poisson_check(const MapSpec& map, const WavePacketSum& f,
                                    int mmax, const PoissonQuadSpec& spec) {
  if (f.dim != map.dim()) {
    throw std::invalid_argument("twisted_poisson_check: dimension mismatch");
  }
  if (mmax < 0) throw std::invalid_argument("twisted_poisson_check: mmax must be >= 0");
  PoissonReport report;
  if (f.packets.empty()) return report;

  const int d = f.dim;
  const Box box = envelope_box(f);

  // Lattice side: expand by sup-norm shells until two consecutive shells are
  // negligible, but never stop before every site with |map(n)| inside the
  // envelope has been visited.
  const long settle_floor =
      static_cast<long>(std::ceil(map.max_preimage_norm(box.max_norm()))) + 1;
  cplx lhs = 0.0;
  int quiet_shells = 0;
  double tail = 0.0;
  for (long s = 0;; ++s) {
    double shell_abs = 0.0;
    for_each_lattice_shell(d, s, [&](const Eigen::VectorXd& n) {
      const cplx term = map.jacobian_det(n) * eval(f, map.forward(n));
      lhs += term;
      shell_abs += std::abs(term);
    });
    if (s >= settle_floor && shell_abs < spec.shell_cutoff * std::max(1.0, std::abs(lhs))) {
      tail += shell_abs;
      if (++quiet_shells == 2) break;
    } else {
      quiet_shells = 0;
      tail = 0.0;
    }
    if (s > settle_floor + 100000) {
      throw QuadratureFailure("twisted_poisson_check: lattice sum did not settle");
    }
  }
  report.lhs = lhs;
  report.lattice_tail = tail;

  // Dual side.  For identity/affine maps every term reduces to a transform
  // value: with tau(x) = Minv x + t0, the term at m is
  // exp(-2 pi i m.t0) fhat(Minv^T m).
  const bool closed_form = (map.family() != MapSpec::Family::kPowerBracket);
  Eigen::MatrixXd minv;
  Eigen::VectorXd t0;
  WavePacketSum fhat = fourier(f);
  if (closed_form) {
    t0 = map.inverse(Eigen::VectorXd::Zero(d));
    minv.resize(d, d);
    for (int j = 0; j < d; ++j) {
      minv.col(j) = map.inverse(Eigen::VectorXd::Unit(d, j)) - t0;
    }
  }

  cplx rhs = 0.0;
  double m_tail = 0.0;
  for_each_lattice_box(d, mmax, [&](const Eigen::VectorXd& m) {
    cplx term;
    if (closed_form) {
      term = std::polar(1.0, -2.0 * kPi * m.dot(t0)) * eval(fhat, minv.transpose() * m);
    } else {
      term = OscillatoryTerm(f, map, m, box, spec).value();
    }
    rhs += term;
    if (static_cast<long>(m.cwiseAbs().maxCoeff()) == static_cast<long>(mmax)) {
      m_tail += std::abs(term);
    }
  });
  report.rhs = rhs;
  report.m_tail = m_tail;
  report.abs_gap = std::abs(lhs - rhs);
  return report;
}

NuPacket nu_packet(const Eigen::VectorXd& y, const Eigen::VectorXd& eta, double p,
                   double q, const SignedMeasure& mu_a, const SignedMeasure& mu_b) {
  const int d = static_cast<int>(y.size());
  if (eta.size() != d) throw std::invalid_argument("nu_packet: y/eta dimension mismatch");
  if (mu_a.dim != d || mu_b.dim != d) {
    throw std::invalid_argument("nu_packet: measure dimension mismatch");
  }
  if (!(p > 0.0) || !(q > 0.0)) throw std::invalid_argument("nu_packet: p, q must be > 0");

  NuPacket nu;
  // Position-dominant (ties included) -> physical side.
  nu.side = (std::pow(jbracket(y), std::sqrt(p)) >= std::pow(jbracket(eta), std::sqrt(q)))
                ? NuSide::kA
                : NuSide::kB;
  nu.measure = (nu.side == NuSide::kA) ? mu_a : mu_b;
  nu.window = gabor_atom(d, 1.0, y, eta);
  nu.y = y;
  nu.eta = eta;
  nu.p = p;
  nu.q = q;
  return nu;
}

PhaseSpaceSamples nu_error_samples(const NuPacket& nu, const PhaseSpaceGrid& grid,
                                   bool include_reference) {
  const int d = grid.dim;
  if (nu.measure.dim != d || nu.window.center.size() != d) {
    throw std::invalid_argument("nu_error_samples: dimension mismatch");
  }

  // On the transform side the atom itself moves through the transform; the
  // grid then probes the same object against the frequency measure.
  const WavePacket probe_pk =
      (nu.side == NuSide::kA) ? nu.window : fourier(nu.window);

  // Atoms outside the reach of probe_pk contribute below ~1e-24 relative and
  // are dropped once up front.
  const double reach = kGaussianReach * probe_pk.scale;
  std::vector<Eigen::VectorXd> xs;
  std::vector<cplx> base;
  for (int j = 0; j < nu.measure.size(); ++j) {
    Eigen::VectorXd x = nu.measure.atoms.row(j).transpose();
    if ((x - probe_pk.center).norm() > reach) continue;
    base.push_back(nu.measure.weights(j) * eval(probe_pk, x));
    xs.push_back(std::move(x));
  }

  PhaseSpaceSamples out;
  out.grid = grid;
  out.window_scale = 1.0;
  out.values.resize(grid.node_count());

  const double amp = std::pow(2.0, 0.25 * d);  // grid atom amplitude, scale 1
  const long ecount = grid.eta_count();
  Eigen::VectorXd z(d), zeta(d);
  std::vector<Eigen::VectorXd> zxs;   // atoms within reach of the current z
  std::vector<cplx> zbase;            // base[j] * amp * exp(-pi |x_j - z|^2)
  for (long flat = 0; flat < grid.node_count(); ++flat) {
    grid.node(flat, z, zeta);
    if (flat % ecount == 0) {
      zxs.clear();
      zbase.clear();
      for (size_t j = 0; j < xs.size(); ++j) {
        const double u2 = (xs[j] - z).squaredNorm();
        if (u2 > kGaussianReach * kGaussianReach) continue;
        zbase.push_back(base[j] * amp * std::exp(-kPi * u2));
        zxs.push_back(xs[j]);
      }
    }
    cplx v = 0.0;
    for (size_t j = 0; j < zxs.size(); ++j) {
      v += zbase[j] * std::polar(1.0, -2.0 * kPi * zeta.dot(zxs[j]));
    }
    if (include_reference) {
      v -= packet_inner(probe_pk, gabor_atom(d, 1.0, z, zeta));
    }
    out.values(flat) = v;
  }
  return out;
}

double nu_error_norm(const NuPacket& nu, double s, const PhaseSpaceGrid& grid) {
  return s_norm(nu_error_samples(nu, grid, true), s);
}

}  // namespace ful
