#pragma once

#include <Eigen/Dense>

#include "ful/errors.hpp"
#include "ful/gabor.hpp"
#include "ful/geometry.hpp"
#include "ful/quadrature.hpp"
#include "ful/wavepacket.hpp"

namespace ful {

/** Riemann-sum surrogate for Lebesgue measure carried by the image lattice
 *  {delta * map(n)}: the atom at delta*map(n) weighs delta^d det Dmap(n),
 *  the volume of the lattice cell it represents.  Truncated to |atom| <=
 *  radius; a non-positive Jacobian determinant on an included site is an
 *  OrientationError.
 */
SignedMeasure lattice_measure(const MapSpec& map, double delta, double radius);

struct PoissonQuadSpec {
  double rel_tol = 1e-10;
  int max_depth = 15;
  /// Stop extending the lattice sum once a shell contributes less than this.
  double shell_cutoff = 1e-18;
};

struct PoissonReport {
  cplx lhs = 0.0;           // sum_n det Dmap(n) f(map(n))
  cplx rhs = 0.0;           // sum_{|m|_inf <= mmax} int f(x) e^{-2 pi i m.inverse(x)} dx
  double abs_gap = 0.0;
  double lattice_tail = 0.0;  // bound on the truncated part of lhs
  double m_tail = 0.0;        // total |term| on the outermost m shell
};

/** Compare the Jacobian-weighted lattice sum of f against its dual integral
 *  expansion truncated at |m|_inf <= mmax.  The m = 0 term is int f; for the
 *  identity (and any affine) map every term reduces to a transform value in
 *  closed form, otherwise terms are evaluated by adaptive Gauss-Kronrod
 *  panels split at the origin.
 */
PoissonReport twisted_poisson_check(const MapSpec& map, const WavePacketSum& f,
                                    int mmax, const PoissonQuadSpec& spec = {});

enum class NuSide { kA, kB };

/** One phase-space test object: the Gabor atom at (y, eta) multiplied by a
 *  discrete surrogate measure.  The side rule compares <y>^sqrt(p) against
 *  <eta>^sqrt(q): position-dominant locations sample the physical measure,
 *  frequency-dominant ones are handled through the transform side, where the
 *  same computation applies to fourier(atom) against mu_b.
 */
struct NuPacket {
  NuSide side = NuSide::kA;
  SignedMeasure measure;    // measure of the chosen side
  WavePacket window;        // Gabor atom chi_{y,eta} at scale 1
  Eigen::VectorXd y;
  Eigen::VectorXd eta;
  double p = 1.0;
  double q = 1.0;
};

NuPacket nu_packet(const Eigen::VectorXd& y, const Eigen::VectorXd& eta, double p,
                   double q, const SignedMeasure& mu_a, const SignedMeasure& mu_b);

/** Gabor samples of (nu - reference): for the physical side, T(chi mu) - T chi
 *  on the grid; for the transform side, the same with fourier(chi) against
 *  the frequency measure.  With include_reference = false the continuum term
 *  is dropped (diagnostic for homogeneity checks).
 */
PhaseSpaceSamples nu_error_samples(const NuPacket& nu, const PhaseSpaceGrid& grid,
                                   bool include_reference = true);

/// s-weighted Riemann norm of nu_error_samples on the grid.
double nu_error_norm(const NuPacket& nu, double s, const PhaseSpaceGrid& grid);

}  // namespace ful
