#include "ful/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ful {
namespace {

constexpr double kDedupRelTol = 1e-12;
constexpr double kRadiusSlack = 1e-9;       // relative slack on |x| <= radius
constexpr double kMaxEnumeration = 2.5e7;   // lattice boxes larger than this are refused

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return true;
    if (a[k] > b[k]) return false;
  }
  return false;
}

/// Visit every n in {-nmax..nmax}^d in lexicographic order.
template <typename F>
void for_each_lattice(int dim, long nmax, F&& body) {
  Eigen::VectorXd n(dim);
  std::vector<long> idx(dim, -nmax);
  for (;;) {
    for (int k = 0; k < dim; ++k) n[k] = static_cast<double>(idx[k]);
    body(n);
    int k = dim - 1;
    while (k >= 0 && idx[k] == nmax) idx[k--] = -nmax;
    if (k < 0) break;
    ++idx[k];
  }
}

double fmt_num(double v) { return v; }

}  // namespace

Box make_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() == 0 || lo.size() != hi.size())
    throw std::invalid_argument("box: lo/hi dimension mismatch");
  if ((hi.array() < lo.array()).any())
    throw std::invalid_argument("box: hi < lo");
  return Box{lo, hi};
}

Box make_box1d(double lo, double hi) {
  Eigen::VectorXd l(1), h(1);
  l[0] = lo;
  h[0] = hi;
  return make_box(l, h);
}

PointSet make_point_set(int dim, Eigen::MatrixXd pts, double radius,
                        std::string provenance) {
  if (dim < 1) throw std::invalid_argument("point set: dim must be >= 1");
  if (!(radius > 0)) throw std::invalid_argument("point set: radius must be > 0");
  if (pts.rows() > 0 && pts.cols() != dim)
    throw std::invalid_argument("point set: column count != dim");

  const int n = static_cast<int>(pts.rows());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return lex_less(pts.row(a).transpose(), pts.row(b).transpose());
  });

  Eigen::MatrixXd out(n, dim);
  int kept = 0;
  for (int i : order) {
    Eigen::VectorXd x = pts.row(i).transpose();
    double nx = x.norm();
    if (nx > radius * (1.0 + kRadiusSlack) + kRadiusSlack)
      throw std::invalid_argument("point set: point outside truncation radius");
    if (kept > 0) {
      Eigen::VectorXd prev = out.row(kept - 1).transpose();
      double scale = std::max({1.0, nx, prev.norm()});
      if ((x - prev).norm() <= kDedupRelTol * scale) continue;  // duplicate
    }
    out.row(kept++) = x.transpose();
  }
  out.conservativeResize(kept, dim);

  PointSet s;
  s.dim = dim;
  s.radius = radius;
  s.provenance = std::move(provenance);
  s.points = std::move(out);
  return s;
}

DensityParams make_density_params(double p, double delta) {
  if (!(p >= 0)) throw std::invalid_argument("density params: p must be >= 0");
  if (!(delta > 0)) throw std::invalid_argument("density params: delta must be > 0");
  return DensityParams{p, delta};
}

// ---------------------------------------------------------------------------
// MapSpec

namespace {

/// Solve t (1+t^2)^((r-1)/2) = rho for t >= 0.  The left side is strictly
/// increasing (derivative (1+t^2)^((r-3)/2) (1 + r t^2) > 0), so safeguarded
/// Newton from a power-law initial guess converges for every rho >= 0.
double invert_radial_power(double r, double rho) {
  if (rho == 0.0) return 0.0;
  auto f = [&](double t) { return t * std::pow(1.0 + t * t, 0.5 * (r - 1.0)) - rho; };
  auto df = [&](double t) {
    return std::pow(1.0 + t * t, 0.5 * (r - 3.0)) * (1.0 + r * t * t);
  };
  double lo = 0.0;
  double hi = std::max(rho >= 1.0 ? std::pow(rho, 1.0 / r) : rho, 1.0);
  for (int guard = 0; f(hi) < 0.0; ++guard) {
    hi *= 2.0;
    if (guard > 300) throw std::runtime_error("radial inverse: bracket failed");
  }
  double t = std::min(hi, rho >= 1.0 ? std::pow(rho, 1.0 / r) : rho);
  for (int it = 0; it < 100; ++it) {
    double val = f(t);
    if (val > 0.0) hi = t; else lo = t;
    double step = val / df(t);
    double next = t - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-16 * (1.0 + std::abs(t))) return next;
    t = next;
  }
  return t;
}

}  // namespace

MapSpec MapSpec::identity(int dim) {
  if (dim < 1) throw std::invalid_argument("map: dim must be >= 1");
  MapSpec m;
  m.family_ = Family::kIdentity;
  m.dim_ = dim;
  return m;
}

MapSpec MapSpec::power_bracket(int dim, double r) {
  if (dim < 1) throw std::invalid_argument("map: dim must be >= 1");
  if (!(r > 0)) throw std::invalid_argument("map: power exponent must be > 0");
  MapSpec m;
  m.family_ = Family::kPowerBracket;
  m.dim_ = dim;
  m.r_ = r;
  return m;
}

MapSpec MapSpec::affine(const Eigen::MatrixXd& mat, const Eigen::VectorXd& b) {
  if (mat.rows() < 1 || mat.rows() != mat.cols() || mat.rows() != b.size())
    throw std::invalid_argument("map: affine shape mismatch");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(mat);
  if (!lu.isInvertible())
    throw std::invalid_argument("map: affine matrix is singular");
  MapSpec m;
  m.family_ = Family::kAffine;
  m.dim_ = static_cast<int>(mat.rows());
  m.m_ = mat;
  m.b_ = b;
  m.m_inv_ = lu.inverse();
  m.m_det_ = mat.determinant();
  return m;
}

Eigen::VectorXd MapSpec::forward(const Eigen::VectorXd& x) const {
  switch (family_) {
    case Family::kIdentity:
      return x;
    case Family::kPowerBracket:
      return x * std::pow(1.0 + x.squaredNorm(), 0.5 * (r_ - 1.0));
    case Family::kAffine:
      return m_ * x + b_;
  }
  return x;
}

Eigen::VectorXd MapSpec::inverse(const Eigen::VectorXd& y) const {
  switch (family_) {
    case Family::kIdentity:
      return y;
    case Family::kPowerBracket: {
      double rho = y.norm();
      if (rho == 0.0) return Eigen::VectorXd::Zero(y.size());
      double t = invert_radial_power(r_, rho);
      return (t / rho) * y;
    }
    case Family::kAffine:
      return m_inv_ * (y - b_);
  }
  return y;
}

double MapSpec::jacobian_det(const Eigen::VectorXd& x) const {
  switch (family_) {
    case Family::kIdentity:
      return 1.0;
    case Family::kPowerBracket: {
      // D = <x>^(r-1) I + (r-1) <x>^(r-3) x x^T, hence
      // det = <x>^(d(r-1)) (1 + (r-1)|x|^2 / <x>^2).
      double q = x.squaredNorm();
      double br2 = 1.0 + q;
      return std::pow(br2, 0.5 * dim_ * (r_ - 1.0)) * (1.0 + (r_ - 1.0) * q / br2);
    }
    case Family::kAffine:
      return m_det_;
  }
  return 1.0;
}

double MapSpec::max_preimage_norm(double rho) const {
  if (!(rho >= 0)) throw std::invalid_argument("map: negative radius");
  switch (family_) {
    case Family::kIdentity:
      return rho;
    case Family::kPowerBracket:
      return invert_radial_power(r_, rho);
    case Family::kAffine:
      // |x| = |M^-1 (y - b)| <= ||M^-1||_F (rho + |b|).
      return m_inv_.norm() * (rho + b_.norm());
  }
  return rho;
}

std::string MapSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family_) {
    case Family::kIdentity:
      os << "identity(d=" << dim_ << ")";
      break;
    case Family::kPowerBracket:
      os << "power_bracket(d=" << dim_ << ",r=" << fmt_num(r_) << ")";
      break;
    case Family::kAffine:
      os << "affine(d=" << dim_ << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Set generators

PointSet power_set(int dim, double t, double delta, double radius) {
  if (dim < 1) throw std::invalid_argument("power set: dim must be >= 1");
  if (!(t > 0 && t <= 1)) throw std::invalid_argument("power set: need 0 < t <= 1");
  if (!(delta > 0)) throw std::invalid_argument("power set: delta must be > 0");
  if (!(radius > 0)) throw std::invalid_argument("power set: radius must be > 0");

  // |delta |n|^(t-1) n| = delta |n|^t <= radius  iff  |n| <= (radius/delta)^(1/t)
  long nmax = static_cast<long>(std::floor(std::pow(radius / delta, 1.0 / t) + 1e-9));
  if (std::pow(2.0 * nmax + 1.0, dim) > kMaxEnumeration)
    throw std::invalid_argument("power set: truncation radius too large to enumerate");

  std::vector<Eigen::VectorXd> rows;
  for_each_lattice(dim, nmax, [&](const Eigen::VectorXd& n) {
    double mag = n.norm();
    if (mag == 0.0) {
      rows.push_back(Eigen::VectorXd::Zero(dim));
      return;
    }
    if (delta * std::pow(mag, t) > radius * (1.0 + kRadiusSlack)) return;
    rows.push_back(delta * std::pow(mag, t - 1.0) * n);
  });

  Eigen::MatrixXd pts(static_cast<int>(rows.size()), dim);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) pts.row(i) = rows[i].transpose();

  std::ostringstream os;
  os.precision(17);
  os << "power_set(d=" << dim << ",t=" << t << ",delta=" << delta
     << ",radius=" << radius << ")";
  return make_point_set(dim, std::move(pts), radius, os.str());
}

PointSet image_lattice_set(const MapSpec& map, double delta, double radius) {
  if (!(delta > 0)) throw std::invalid_argument("image lattice: delta must be > 0");
  if (!(radius > 0)) throw std::invalid_argument("image lattice: radius must be > 0");

  long nmax = static_cast<long>(std::ceil(map.max_preimage_norm(radius / delta))) + 1;
  if (std::pow(2.0 * nmax + 1.0, map.dim()) > kMaxEnumeration)
    throw std::invalid_argument("image lattice: truncation radius too large to enumerate");

  std::vector<Eigen::VectorXd> rows;
  for_each_lattice(map.dim(), nmax, [&](const Eigen::VectorXd& n) {
    Eigen::VectorXd y = delta * map.forward(n);
    if (y.norm() > radius * (1.0 + kRadiusSlack)) return;
    rows.push_back(y);
  });

  Eigen::MatrixXd pts(static_cast<int>(rows.size()), map.dim());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) pts.row(i) = rows[i].transpose();

  std::ostringstream os;
  os.precision(17);
  os << "image_lattice_set(map=" << map.describe() << ",delta=" << delta
     << ",radius=" << radius << ")";
  return make_point_set(map.dim(), std::move(pts), radius, os.str());
}

PointSet rescale_set(const PointSet& s, double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("rescale: lambda must be > 0");
  PointSet out;
  out.dim = s.dim;
  out.radius = s.radius * lambda;
  out.provenance = "rescale(" + s.provenance + ")";
  out.points = s.points * lambda;
  return out;
}

// ---------------------------------------------------------------------------
// Density / separation checks

SeparationReport check_separated(const PointSet& s, const DensityParams& prm) {
  SeparationReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const int n = s.size();
  if (n < 2) return rep;

  Eigen::VectorXd ball(n);
  for (int i = 0; i < n; ++i)
    ball[i] = prm.delta * std::pow(jbracket(s.point(i)), -prm.p);

  // Rows are sorted lexicographically, so visiting pairs in (i, j) order and
  // replacing only on strict improvement resolves ties to the smallest pair.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double margin = (s.point(i) - s.point(j)).norm() - (ball[i] + ball[j]);
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.worst_i = i;
        rep.worst_j = j;
      }
    }
  }
  rep.ok = rep.worst_margin >= 0.0;
  return rep;
}

DensityReport check_dense(const PointSet& s, const DensityParams& prm,
                          const Box& window, double resolution) {
  if (window.dim() != s.dim)
    throw std::invalid_argument("density check: window dimension mismatch");
  if (!(resolution > 0))
    throw std::invalid_argument("density check: resolution must be > 0");
  if (window.max_norm() > kSafeInteriorFactor * s.radius * (1.0 + 1e-12))
    throw std::invalid_argument(
        "density check: window exceeds the safe interior (0.8 * radius) of the set");

  const int d = s.dim;
  std::vector<long> counts(d);
  double total = 1.0;
  for (int k = 0; k < d; ++k) {
    counts[k] = static_cast<long>(std::floor((window.hi[k] - window.lo[k]) / resolution + 1e-9)) + 1;
    total *= static_cast<double>(counts[k]);
  }
  if (total > 2e7)
    throw std::invalid_argument("density check: probe grid too large");

  const int n = s.size();
  Eigen::VectorXd ball(n);
  for (int i = 0; i < n; ++i)
    ball[i] = prm.delta * std::pow(jbracket(s.point(i)), -prm.p);

  DensityReport rep;
  rep.worst_gap = -std::numeric_limits<double>::infinity();

  std::vector<long> idx(d, 0);
  Eigen::VectorXd z(d);
  for (;;) {
    for (int k = 0; k < d; ++k) z[k] = window.lo[k] + resolution * static_cast<double>(idx[k]);
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double g = (z - s.point(i)).norm() - ball[i];
      if (g < gap) gap = g;
    }
    // Probes are visited in lexicographic order; strict improvement keeps the
    // lexicographically smallest probe among exact ties.
    if (gap > rep.worst_gap) {
      rep.worst_gap = gap;
      rep.worst_point = z;
    }
    int k = d - 1;
    while (k >= 0 && idx[k] == counts[k] - 1) idx[k--] = 0;
    if (k < 0) break;
    ++idx[k];
  }
  rep.ok = rep.worst_gap <= 0.0;
  return rep;
}

}  // namespace ful
