#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>

namespace ful {

/** Japanese bracket <x> = sqrt(1 + |x|^2), a smooth proxy for max(1, |x|).
 *
 *  All radius and width formulas in this library are expressed through the
 *  bracket so that they stay finite and positive at the origin.
 */
inline double jbracket(double x) { return std::sqrt(1.0 + x * x); }

template <typename Derived>
double jbracket(const Eigen::MatrixBase<Derived>& x) {
  return std::sqrt(1.0 + x.squaredNorm());
}

/// Axis-aligned box [lo_1, hi_1] x ... x [lo_d, hi_d].
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const { return (hi - lo).prod(); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
    return (x.array() >= lo.array() - tol).all() &&
           (x.array() <= hi.array() + tol).all();
  }
  /// Largest |x| over the box (attained at a corner).
  double max_norm() const {
    return lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm();
  }
};

Box make_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
Box make_box1d(double lo, double hi);

/** Finite point set in R^d with a stated truncation radius.
 *
 *  Invariants (enforced by make_point_set): points are pairwise distinct at
 *  relative tolerance 1e-12, all lie within `radius` of the origin, and rows
 *  are sorted lexicographically so equal inputs serialize identically.
 */
struct PointSet {
  int dim = 0;
  double radius = 0.0;
  std::string provenance;
  Eigen::MatrixXd points;  // one point per row

  int size() const { return static_cast<int>(points.rows()); }
  Eigen::VectorXd point(int i) const { return points.row(i).transpose(); }
};

PointSet make_point_set(int dim, Eigen::MatrixXd pts, double radius,
                        std::string provenance);

/// Parameters (p, delta) of the ball family B(x, delta * <x>^-p).
struct DensityParams {
  double p = 0.0;
  double delta = 1.0;
};

DensityParams make_density_params(double p, double delta);

/** Diffeomorphism of R^d from a small closed-form family.
 *
 *  Families: identity; the radial power map x -> x <x>^(r-1) with r > 0
 *  (magnitude grows like |x|^r at infinity, derivative 1 at the origin);
 *  and invertible affine maps x -> Mx + b.
 */
class MapSpec {
 public:
  enum class Family { kIdentity, kPowerBracket, kAffine };

  static MapSpec identity(int dim);
  static MapSpec power_bracket(int dim, double r);
  static MapSpec affine(const Eigen::MatrixXd& m, const Eigen::VectorXd& b);

  int dim() const { return dim_; }
  Family family() const { return family_; }
  double exponent() const { return r_; }
  const Eigen::MatrixXd& matrix() const { return m_; }
  const Eigen::VectorXd& offset() const { return b_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& y) const;
  /// Determinant of the Jacobian of forward() at x.
  double jacobian_det(const Eigen::VectorXd& x) const;
  /// Some s such that |forward(n)| <= rho implies |n| <= s.
  double max_preimage_norm(double rho) const;
  std::string describe() const;

 private:
  MapSpec() = default;
  Family family_ = Family::kIdentity;
  int dim_ = 1;
  double r_ = 1.0;          // power-bracket exponent
  Eigen::MatrixXd m_;       // affine matrix
  Eigen::VectorXd b_;       // affine offset
  Eigen::MatrixXd m_inv_;   // cached inverse of m_
  double m_det_ = 1.0;
};

/** {delta * |n|^(t-1) n : n in Z^d, |image| <= radius}; n = 0 maps to the
 *  origin.  0 < t <= 1: magnitudes grow like delta |n|^t, so the set thins
 *  out linearly in direction count but densifies radially as t decreases.
 */
PointSet power_set(int dim, double t, double delta, double radius);

/// {delta * map(n) : n in Z^d, |image| <= radius}.
PointSet image_lattice_set(const MapSpec& map, double delta, double radius);

/// Scale every point (and the truncation radius) by lambda > 0.
PointSet rescale_set(const PointSet& s, double lambda);

struct SeparationReport {
  bool ok = true;
  /// min over pairs of |x-y| - delta(<x>^-p + <y>^-p); >= 0 iff ok.
  double worst_margin = 0.0;
  int worst_i = -1;
  int worst_j = -1;
};

/** Are the balls B(x, delta <x>^-p), x in S, pairwise disjoint?
 *  Ties for the worst pair resolve to the lexicographically smallest pair.
 */
SeparationReport check_separated(const PointSet& s, const DensityParams& prm);

struct DensityReport {
  bool ok = true;
  /// max over probes of min_x (|z-x| - delta <x>^-p); <= 0 iff ok.
  double worst_gap = 0.0;
  Eigen::VectorXd worst_point;
};

/** Do the balls B(x, delta <x>^-p) cover `window`, probed on a grid of the
 *  given resolution?  The window must lie inside the safe interior of the
 *  set's truncation radius (factor 0.8), otherwise coverage failures near
 *  the cut could be artifacts; that case is an invalid_argument.
 */
DensityReport check_dense(const PointSet& s, const DensityParams& prm,
                          const Box& window, double resolution);

/// Fraction of the truncation radius inside which density checks are honest.
inline constexpr double kSafeInteriorFactor = 0.8;

}  // namespace ful
