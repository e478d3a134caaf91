#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <string>

#include "ful/errors.hpp"
#include "ful/geometry.hpp"
#include "ful/wavepacket.hpp"

namespace ful {

/** Atomic signed measure  sum_i weights[i] * dirac(atoms.row(i)).
 *
 *  Weights are real; integration against complex integrands happens through
 *  integrate().  Atom order is meaningful (it is the deterministic traversal
 *  order of the construction) and round-trips through serialization.
 */
struct SignedMeasure {
  int dim = 0;
  Eigen::MatrixXd atoms;     // one atom per row
  Eigen::VectorXd weights;
  std::string provenance;

  int size() const { return static_cast<int>(atoms.rows()); }
  double total_variation() const { return weights.cwiseAbs().sum(); }
};

/// Axis-aligned cube: corner + [0, side]^d.
struct Cube {
  Eigen::VectorXd corner;
  double side = 1.0;

  int dim() const { return static_cast<int>(corner.size()); }
  Eigen::VectorXd center() const {
    return corner + Eigen::VectorXd::Constant(corner.size(), 0.5 * side);
  }
};

/// Too few usable sample points near a cube, or a numerically rank-deficient
/// node configuration (condition number beyond 1e8).
struct DegenerateSampleSet : DomainError {
  DegenerateSampleSet(const std::string& msg, Eigen::VectorXd corner_, double side_);
  Eigen::VectorXd corner;
  double side = 0.0;
};

inline constexpr double kConditionGate = 1e8;
inline constexpr int kMaxExactnessOrder = 6;

/** Signed measure on points of `e` near the cube that integrates every
 *  polynomial of degree <= k-1 over `q` exactly.
 *
 *  Nodes are chosen from e (cube enlarged by 10%) by greedy pivoted-volume
 *  selection on the scaled monomial Vandermonde matrix; the moment system is
 *  solved in cube-local coordinates and rescaled by side^d.  A `clip` box
 *  restricts the matched integrals to q intersect clip (used for boundary
 *  cubes of a partition).
 */
SignedMeasure local_measure(const Cube& q, const PointSet& e, int k);
SignedMeasure local_measure(const Cube& q, const PointSet& e, int k,
                            const Box& clip);

/** Partition the window into dyadic cubes whose sidelength tracks
 *  size_constant * delta * <center>^-p, build a local measure on each, and
 *  concatenate.  Boundary cubes are clipped exactly; cubes that merely touch
 *  the window contribute nothing.
 */
SignedMeasure global_measure(const PointSet& s, const DensityParams& prm, int k,
                             const Box& window, double size_constant = 4.0);

/// sum_i w_i f(x_i).
cplx integrate(const SignedMeasure& mu, const std::function<cplx(const Eigen::VectorXd&)>& f);
cplx integrate(const SignedMeasure& mu, const WavePacketSum& f);

/** A-priori bound  delta^k * int_window sup_{|y-x|<=1} |grad^k f(y)| <x>^{-pk} dx
 *  for the error of a degree-k global measure, evaluated on a step-0.1 grid.
 *  The derivative tensor of the packet sum is exact; only the sup and the
 *  outer integral are discretized.
 */
double error_bound_estimate(const WavePacketSum& f, int k, const DensityParams& prm,
                            const Box& window);

}  // namespace ful
