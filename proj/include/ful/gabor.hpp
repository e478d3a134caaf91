#pragma once

#include <Eigen/Dense>

#include "ful/geometry.hpp"
#include "ful/wavepacket.hpp"

namespace ful {

/** Rectangular phase-space grid: a box of positions y and a box of
 *  frequencies eta, each sampled at a fixed step.  Nodes are ordered with y
 *  lexicographically outermost, then eta, so sample layouts are reproducible.
 */
struct PhaseSpaceGrid {
  int dim = 1;
  Box yrange;
  double ystep = 1.0;
  Box etarange;
  double etastep = 1.0;

  long y_count() const;
  long eta_count() const;
  long node_count() const { return y_count() * eta_count(); }
  /// Decode flat node index into (y, eta).
  void node(long flat, Eigen::VectorXd& y, Eigen::VectorXd& eta) const;
  /// True if the node touches the first/last layer of either box.
  bool on_boundary(long flat) const;
};

PhaseSpaceGrid make_phase_space_grid(const Box& yrange, double ystep,
                                     const Box& etarange, double etastep);

/// Samples of a phase-space function on a grid, tagged with the window scale.
struct PhaseSpaceSamples {
  PhaseSpaceGrid grid;
  double window_scale = 1.0;
  Eigen::VectorXcd values;
};

/** L2-normalized Gaussian window  chi_R(x) = R^{-d/2} 2^{d/4} exp(-pi |x/R|^2)
 *  and its translate-modulate  chi_{R,y,eta}(x) = chi_R(x-y) e^{2 pi i eta.x}.
 */
WavePacket gabor_window(int dim, double scale);
WavePacket gabor_atom(int dim, double scale, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& eta);

/// Tf(y, eta) = <f, chi_{R,y,eta}>, evaluated in closed form per packet.
PhaseSpaceSamples gabor_transform(const WavePacketSum& f, const PhaseSpaceGrid& grid,
                                  double scale);

/** Riemann-sum inversion  f(x) ~= sum_nodes Tf(y,eta) chi_{R,y,eta}(x) dy deta.
 *  Accuracy requires the grid to carry the sample mass; see boundary_mass.
 */
cplx gabor_invert(const PhaseSpaceSamples& samples, const Eigen::VectorXd& x);

/// max |value| on the grid boundary relative to max |value| overall.
double boundary_mass(const PhaseSpaceSamples& samples);

/// Riemann sum of |Tf| <y>^{-s} <eta>^{-s} over the grid.
double s_norm(const PhaseSpaceSamples& samples, double s);

/// Scale balance point  <y>^{1/2} / <eta>^{1/2}  of a phase-space location.
double radius_map(const Eigen::VectorXd& y, const Eigen::VectorXd& eta);

}  // namespace ful
