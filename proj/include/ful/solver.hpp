#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "ful/errors.hpp"
#include "ful/geometry.hpp"
#include "ful/wavepacket.hpp"

namespace ful {

/** Restriction operator  F f = (f on A, fourier(f) on B). */
std::pair<RapidSequence, RapidSequence> apply_F(
    std::shared_ptr<const PointSet> a, std::shared_ptr<const PointSet> b,
    const WavePacketSum& f);

enum class ParametrixMode { kSubcritical, kCritical };

/** Two-sided packet family indexed by the points of A and B.
 *
 *  Site packets (one per a0 in A) are unit-amplitude Gaussians centered at
 *  a0 with width shrinking like <a0>^-p, so each acts as an indicator of its
 *  own site while its transform spreads flatly over frequencies.  Spectral
 *  packets (one per b0 in B) mirror this: their transform is the unit bump
 *  of width <b0>^-q at b0, so the packet itself oscillates at frequency b0
 *  around the origin.  Critical mode multiplies both widths by delta^(1/2).
 */
struct Parametrix {
  std::shared_ptr<const PointSet> a;
  std::shared_ptr<const PointSet> b;
  double p = 1.0;
  double q = 1.0;
  ParametrixMode mode = ParametrixMode::kSubcritical;
  double width_constant = 1.0;
  std::optional<double> delta;
  std::vector<WavePacket> packets_a;  // site packets
  std::vector<WavePacket> packets_b;  // spectral packets
};

Parametrix build_parametrix(std::shared_ptr<const PointSet> a,
                            std::shared_ptr<const PointSet> b, double p, double q,
                            ParametrixMode mode, double width_constant = 1.0,
                            std::optional<double> delta = std::nullopt);

/** P(alpha, beta) = sum_a0 alpha(a0) phi_a0 + sum_b0 beta(b0) psi_b0;
 *  zero coefficients contribute no packet.
 */
WavePacketSum apply_P(const Parametrix& par, const Eigen::VectorXcd& alpha,
                      const Eigen::VectorXcd& beta);

/** Dense matrix of F P on coefficient pairs, blocks [A<-A, A<-B; B<-A, B<-B];
 *  column j holds the relevant packet restricted to both sets.
 */
Eigen::MatrixXcd fp_matrix(const Parametrix& par);

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_norms;  // length iterations + 1, starts at the initial norm
  double final_sup_a = 0.0;
  double final_sup_b = 0.0;
};

/// Residual grew past divergence_factor times the initial norm.
struct DivergenceError : DomainError {
  DivergenceError(const std::string& msg, SolveReport rep)
      : DomainError(msg), report(std::move(rep)) {}
  SolveReport report;
};

struct SolveConfig {
  double p = 1.0;
  double q = 1.0;
  ParametrixMode mode = ParametrixMode::kSubcritical;
  double width_constant = 1.0;
  std::optional<double> delta;      // critical widths and translate shift
  WeightSpec weight_a;
  WeightSpec weight_b;
  double tol = 1e-8;
  int max_iter = 60;
  bool translate = false;           // conjugate by a delta^(1/2) e_1 shift
  double divergence_factor = 10.0;
};

/** Config with the canonical norm exponents for (p, q): subcritical uses the
 *  polynomial-max weight at exponents sqrt(pt), sqrt(qt) where pt qt = 1
 *  dominate p, q (pt = qt = 1 when both are below 1); critical uses the
 *  log-cubed weight at sqrt(p), sqrt(q).
 */
SolveConfig default_solve_config(double p, double q, ParametrixMode mode);

/** Neumann iteration  r_{j+1} = r_j - F P r_j  starting from the target,
 *  accumulating  f = P (sum_j r_j), so that  target - F f  equals the final
 *  residual exactly (telescoping).  Converged means the weighted residual
 *  norm fell below tol times the initial one.
 */
std::pair<WavePacketSum, SolveReport> neumann_iterate(
    const Parametrix& par, const Eigen::VectorXcd& alpha,
    const Eigen::VectorXcd& beta, const WeightSpec& wa, const WeightSpec& wb,
    double tol, int max_iter, double divergence_factor = 10.0);

/** Full solve of  f|_A = alpha, fourier(f)|_B = beta.
 *
 *  With cfg.translate, the problem is conjugated to sets shifted by
 *  delta^(1/2) e_1 (a modulation-translation that changes no magnitudes),
 *  solved there, and mapped back; use it when A or B meets the origin, where
 *  the untranslated site packet has unit mass on the opposite side.
 */
std::pair<WavePacketSum, SolveReport> neumann_solve(
    std::shared_ptr<const PointSet> a, std::shared_ptr<const PointSet> b,
    const Eigen::VectorXcd& alpha, const Eigen::VectorXcd& beta,
    const SolveConfig& cfg);

struct ContractionReport {
  double max_ratio = 0.0;
  Eigen::VectorXd ratios_a;  // per point of A
  Eigen::VectorXd ratios_b;  // per point of B
};

/** Operator-norm surrogate for 1 - F P: for each a0, the weighted mass its
 *  site packet's transform leaks onto B relative to the weight of a0, and
 *  symmetrically for each b0.  max_ratio < 1 predicts solver contraction
 *  (up to the Gaussian tail allowance on the own-side blocks).
 */
ContractionReport contraction_probe(const Parametrix& par, const WeightSpec& wa,
                                    const WeightSpec& wb);

/** Interpolation-kernel element at xstar: solve on (A union {xstar}, B) with
 *  target (unit at xstar, 0).  xstar must not coincide with a point of A.
 */
std::pair<WavePacketSum, SolveReport> kernel_element(
    std::shared_ptr<const PointSet> a, std::shared_ptr<const PointSet> b,
    const Eigen::VectorXd& xstar, const SolveConfig& cfg);

/// Shift every point by u (order-preserving; radius grows by |u|).
std::shared_ptr<const PointSet> translate_set(const PointSet& s,
                                              const Eigen::VectorXd& u);

}  // namespace ful
