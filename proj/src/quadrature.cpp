#include "ful/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ful {
namespace {

constexpr double kEnlargeFraction = 0.05;  // 10% total sidelength enlargement
constexpr int kMaxTreeDepth = 44;

long binom(int n, int r) {
  long v = 1;
  for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
  return v;
}

/// Exponent vectors of all monomials of degree <= deg in graded-lex order.
std::vector<Eigen::VectorXi> monomial_exponents(int dim, int deg) {
  std::vector<Eigen::VectorXi> out;
  Eigen::VectorXi alpha = Eigen::VectorXi::Zero(dim);
  auto rec = [&](auto&& self, int axis, int remaining) -> void {
    if (axis == dim - 1) {
      alpha[axis] = remaining;
      out.push_back(alpha);
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      alpha[axis] = a;
      self(self, axis + 1, remaining - a);
    }
  };
  for (int total = 0; total <= deg; ++total) rec(rec, 0, total);
  return out;
}

double eval_monomial(const Eigen::VectorXd& u, const Eigen::VectorXi& alpha) {
  double v = 1.0;
  for (int i = 0; i < u.size(); ++i)
    for (int a = 0; a < alpha[i]; ++a) v *= u[i];
  return v;
}

/// \int_{box} u^alpha du for box inside [0,1]^d, in closed form.
double monomial_moment(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                       const Eigen::VectorXi& alpha) {
  double v = 1.0;
  for (int i = 0; i < lo.size(); ++i) {
    double e = alpha[i] + 1.0;
    v *= (std::pow(hi[i], e) - std::pow(lo[i], e)) / e;
  }
  return v;
}

/// Indices of points of e inside the cube enlarged by 10% of its sidelength.
/// Rows of e are lexicographically sorted, so the first axis admits a binary
/// search; remaining axes are filtered directly.
std::vector<int> candidates_in_cube(const PointSet& e, const Cube& q) {
  const double pad = kEnlargeFraction * q.side;
  const int n = e.size();
  const double lo0 = q.corner[0] - pad;
  const double hi0 = q.corner[0] + q.side + pad;

  int first = 0, last = n;
  {
    int a = 0, b = n;
    while (a < b) {
      int m = (a + b) / 2;
      if (e.points(m, 0) < lo0) a = m + 1; else b = m;
    }
    first = a;
    a = first; b = n;
    while (a < b) {
      int m = (a + b) / 2;
      if (e.points(m, 0) <= hi0) a = m + 1; else b = m;
    }
    last = a;
  }

  std::vector<int> idx;
  for (int i = first; i < last; ++i) {
    bool in = true;
    for (int k = 1; k < e.dim && in; ++k) {
      double c = e.points(i, k);
      in = (c >= q.corner[k] - pad) && (c <= q.corner[k] + q.side + pad);
    }
    if (in) idx.push_back(i);
  }
  return idx;
}

std::string cube_label(const Cube& q) {
  std::ostringstream os;
  os.precision(17);
  os << "cube(corner=[";
  for (int i = 0; i < q.corner.size(); ++i) os << (i ? "," : "") << q.corner[i];
  os << "],side=" << q.side << ")";
  return os.str();
}

}  // namespace

DegenerateSampleSet::DegenerateSampleSet(const std::string& msg,
                                         Eigen::VectorXd corner_, double side_)
    : DomainError(msg), corner(std::move(corner_)), side(side_) {}

SignedMeasure local_measure(const Cube& q, const PointSet& e, int k) {
  Box full{q.corner, q.corner + Eigen::VectorXd::Constant(q.dim(), q.side)};
  return local_measure(q, e, k, full);
}

SignedMeasure local_measure(const Cube& q, const PointSet& e, int k,
                            const Box& clip) {
  const int d = q.dim();
  if (e.dim != d) throw std::invalid_argument("local measure: dimension mismatch");
  if (k < 1) throw std::invalid_argument("local measure: k must be >= 1");
  if (k > kMaxExactnessOrder)
    throw UnsupportedOrder("local measure: exactness order above 6 is not supported");
  if (!(q.side > 0)) throw std::invalid_argument("local measure: cube side must be > 0");

  const int nmono = static_cast<int>(binom(k - 1 + d, d));
  const auto expo = monomial_exponents(d, k - 1);

  std::vector<int> cand = candidates_in_cube(e, q);
  const int m = static_cast<int>(cand.size());
  if (m < nmono)
    throw DegenerateSampleSet(
        "local measure: " + std::to_string(m) + " candidate points for " +
            std::to_string(nmono) + " moments at " + cube_label(q),
        q.corner, q.side);

  // Vandermonde in cube-local coordinates u = (x - corner)/side.
  Eigen::MatrixXd v(m, nmono);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd u = (e.point(cand[i]) - q.corner) / q.side;
    for (int j = 0; j < nmono; ++j) v(i, j) = eval_monomial(u, expo[j]);
  }

  // Greedy pivoted-volume row selection: column pivots of V^T pick rows of V.
  std::vector<int> pick(nmono);
  if (m == nmono) {
    for (int j = 0; j < nmono; ++j) pick[j] = j;
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v.transpose());
    const auto& perm = qr.colsPermutation().indices();
    for (int j = 0; j < nmono; ++j) pick[j] = perm[j];
  }

  Eigen::MatrixXd vsel(nmono, nmono);
  for (int j = 0; j < nmono; ++j) vsel.row(j) = v.row(pick[j]);

  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(vsel);
    double smin = svd.singularValues()(nmono - 1);
    double smax = svd.singularValues()(0);
    if (!(smin > 0) || smax / smin > kConditionGate)
      throw DegenerateSampleSet(
          "local measure: node configuration is numerically rank deficient at " +
              cube_label(q),
          q.corner, q.side);
  }

  // Clip region in local coordinates, intersected with [0,1]^d.
  Eigen::VectorXd clo(d), chi(d);
  for (int i = 0; i < d; ++i) {
    clo[i] = std::clamp((clip.lo[i] - q.corner[i]) / q.side, 0.0, 1.0);
    chi[i] = std::clamp((clip.hi[i] - q.corner[i]) / q.side, 0.0, 1.0);
    if (chi[i] < clo[i]) chi[i] = clo[i];
  }

  Eigen::VectorXd rhs(nmono);
  for (int j = 0; j < nmono; ++j) rhs[j] = monomial_moment(clo, chi, expo[j]);

  Eigen::MatrixXd t = vsel.transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> solver(t);
  Eigen::VectorXd w = solver.solve(rhs);
  w += solver.solve(rhs - t * w);  // one refinement step tightens the residual

  SignedMeasure mu;
  mu.dim = d;
  mu.atoms.resize(nmono, d);
  for (int j = 0; j < nmono; ++j) mu.atoms.row(j) = e.points.row(cand[pick[j]]);
  mu.weights = w * std::pow(q.side, d);
  mu.provenance = "local_measure(k=" + std::to_string(k) + ")";
  return mu;
}

namespace {

struct TreeAccum {
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> weights;
};

void build_cells(const PointSet& s, const DensityParams& prm, int k,
                 const Box& window, double size_constant, const Cube& cell,
                 int depth, TreeAccum& acc) {
  // Skip cells that do not meet the window in a set of positive volume.
  for (int i = 0; i < cell.dim(); ++i) {
    if (cell.corner[i] >= window.hi[i] || cell.corner[i] + cell.side <= window.lo[i])
      return;
  }

  double target = size_constant * prm.delta * std::pow(jbracket(cell.center()), -prm.p);
  if (cell.side > target && depth < kMaxTreeDepth) {
    const int d = cell.dim();
    for (int c = 0; c < (1 << d); ++c) {
      Cube child;
      child.side = 0.5 * cell.side;
      child.corner = cell.corner;
      for (int ax = 0; ax < d; ++ax)
        if ((c >> ax) & 1) child.corner[ax] += child.side;
      build_cells(s, prm, k, window, size_constant, child, depth + 1, acc);
    }
    return;
  }

  SignedMeasure part = local_measure(cell, s, k, window);
  for (int i = 0; i < part.size(); ++i) {
    acc.atoms.push_back(part.atoms.row(i).transpose());
    acc.weights.push_back(part.weights[i]);
  }
}

}  // namespace

SignedMeasure global_measure(const PointSet& s, const DensityParams& prm, int k,
                             const Box& window, double size_constant) {
  if (window.dim() != s.dim)
    throw std::invalid_argument("global measure: window dimension mismatch");
  if (!(size_constant > 0))
    throw std::invalid_argument("global measure: size constant must be > 0");
  if (k < 1) throw std::invalid_argument("global measure: k must be >= 1");
  if (k > kMaxExactnessOrder)
    throw UnsupportedOrder("global measure: exactness order above 6 is not supported");
  if (window.max_norm() > kSafeInteriorFactor * s.radius * (1.0 + 1e-12))
    throw std::invalid_argument(
        "global measure: window exceeds the safe interior (0.8 * radius) of the set");

  SignedMeasure mu;
  mu.dim = s.dim;
  {
    std::ostringstream os;
    os.precision(17);
    os << "global_measure(k=" << k << ",p=" << prm.p << ",delta=" << prm.delta
       << ",C=" << size_constant << ")";
    mu.provenance = os.str();
  }

  if (window.volume() <= 0.0) {
    mu.atoms.resize(0, s.dim);
    mu.weights.resize(0);
    return mu;
  }

  Cube root;
  root.corner = window.lo;
  root.side = (window.hi - window.lo).maxCoeff();

  TreeAccum acc;
  build_cells(s, prm, k, window, size_constant, root, 0, acc);

  mu.atoms.resize(static_cast<int>(acc.atoms.size()), s.dim);
  mu.weights.resize(static_cast<int>(acc.weights.size()));
  for (int i = 0; i < mu.size(); ++i) {
    mu.atoms.row(i) = acc.atoms[i].transpose();
    mu.weights[i] = acc.weights[i];
  }
  return mu;
}

cplx integrate(const SignedMeasure& mu,
               const std::function<cplx(const Eigen::VectorXd&)>& f) {
  cplx acc = 0.0;
  for (int i = 0; i < mu.size(); ++i)
    acc += mu.weights[i] * f(mu.atoms.row(i).transpose());
  return acc;
}

cplx integrate(const SignedMeasure& mu, const WavePacketSum& f) {
  if (f.dim != mu.dim) throw std::invalid_argument("integrate: dimension mismatch");
  cplx acc = 0.0;
  for (int i = 0; i < mu.size(); ++i)
    acc += mu.weights[i] * eval(f, mu.atoms.row(i).transpose());
  return acc;
}

double error_bound_estimate(const WavePacketSum& f, int k, const DensityParams& prm,
                            const Box& window) {
  if (f.dim != window.dim())
    throw std::invalid_argument("error bound: dimension mismatch");
  if (k < 1 || k > kMaxExactnessOrder)
    throw UnsupportedOrder("error bound: order must be in [1, 6]");

  const double step = 0.1;
  const int pad = 10;  // pad * step = unit ball radius
  const int d = f.dim;

  // One grid anchored at window.lo - 1 covers both the sup neighborhoods and
  // the outer integral (inner nodes are exactly pad steps in).
  std::vector<long> counts(d);
  double total = 1.0;
  for (int i = 0; i < d; ++i) {
    counts[i] = static_cast<long>(std::floor((window.hi[i] - window.lo[i]) / step + 1e-9)) + 1 + 2 * pad;
    total *= static_cast<double>(counts[i]);
  }
  if (total > 4e6) throw std::invalid_argument("error bound: window too large for grid");

  const long n = static_cast<long>(total);
  std::vector<double> g(n);
  std::vector<long> stride(d, 1);
  for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * counts[i + 1];

  Eigen::VectorXd x(d);
  for (long flat = 0; flat < n; ++flat) {
    long rem = flat;
    for (int i = 0; i < d; ++i) {
      long ix = rem / stride[i];
      rem %= stride[i];
      x[i] = window.lo[i] + step * static_cast<double>(ix - pad);
    }
    g[flat] = grad_tensor_norm(f, x, k);
  }

  // Neighborhood offsets within the unit ball.
  std::vector<std::vector<long>> offsets;
  {
    std::vector<long> off(d, -pad);
    for (;;) {
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) r2 += static_cast<double>(off[i]) * off[i];
      if (r2 * step * step <= 1.0 + 1e-12) offsets.push_back(off);
      int i = d - 1;
      while (i >= 0 && off[i] == pad) off[i--] = -pad;
      if (i < 0) break;
      ++off[i];
    }
  }

  double acc = 0.0;
  std::vector<long> idx(d, 0);
  for (long flat = 0; flat < n; ++flat) {
    long rem = flat;
    bool inner = true;
    for (int i = 0; i < d; ++i) {
      idx[i] = rem / stride[i];
      rem %= stride[i];
      if (idx[i] < pad || idx[i] > counts[i] - 1 - pad) inner = false;
    }
    if (!inner) continue;
    double sup = 0.0;
    for (const auto& off : offsets) {
      long nf = 0;
      bool ok = true;
      for (int i = 0; i < d; ++i) {
        long j = idx[i] + off[i];
        if (j < 0 || j >= counts[i]) { ok = false; break; }
        nf += j * stride[i];
      }
      if (ok && g[nf] > sup) sup = g[nf];
    }
    for (int i = 0; i < d; ++i) x[i] = window.lo[i] + step * static_cast<double>(idx[i] - pad);
    acc += sup * std::pow(jbracket(x), -prm.p * k);
  }

  return std::pow(prm.delta, k) * acc * std::pow(step, d);
}

}  // namespace ful
