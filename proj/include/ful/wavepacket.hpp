#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "ful/geometry.hpp"

namespace ful {

using cplx = std::complex<double>;

/** Gaussian wave packet  A * g((x - center)/scale) * exp(2 pi i freq . x)
 *  with profile g(u) = exp(-pi |u|^2).
 *
 *  The family is closed under Fourier transform, products, translation and
 *  modulation, so packet sums admit exact evaluation of transforms, inner
 *  products and derivatives; nothing in this module is approximated.
 */
struct WavePacket {
  cplx amp{1.0, 0.0};
  Eigen::VectorXd center;
  Eigen::VectorXd freq;
  double scale = 1.0;

  int dim() const { return static_cast<int>(center.size()); }
};

WavePacket make_wave_packet(cplx amp, Eigen::VectorXd center,
                            Eigen::VectorXd freq, double scale);

/// Finite sum of packets sharing one ambient dimension.
struct WavePacketSum {
  int dim = 0;
  std::vector<WavePacket> packets;

  int size() const { return static_cast<int>(packets.size()); }
};

WavePacketSum make_wave_packet_sum(int dim, std::vector<WavePacket> packets);

cplx eval(const WavePacket& p, const Eigen::VectorXd& x);
cplx eval(const WavePacketSum& f, const Eigen::VectorXd& x);

/** Exact Fourier transform, convention  f^(xi) = \int f(x) e^{-2 pi i x.xi} dx.
 *
 *  (A, x0, xi0, R) maps to (A R^d e^{+2 pi i x0.xi0}, xi0, -x0, 1/R); applying
 *  the transform twice reflects the packet through the origin.
 */
WavePacket fourier(const WavePacket& p);
WavePacketSum fourier(const WavePacketSum& f);

/// f(-x) as a packet (A, -center, -freq, scale).
WavePacket reflect(const WavePacket& p);
WavePacketSum reflect(const WavePacketSum& f);

/// Inverse transform = reflect after fourier.
WavePacketSum inverse_fourier(const WavePacketSum& f);

/** Exact L2 pairing  <p, q> = \int p(x) conj(q(x)) dx.
 *
 *  With a = 1/R1^2, b = 1/R2^2, s = a + b, w = (a x1 + b x2)/s, om = f1 - f2:
 *  <p,q> = A1 conj(A2) s^{-d/2}
 *          exp(-pi |x1-x2|^2/(R1^2+R2^2) - pi |om|^2/s) exp(2 pi i om.w).
 */
cplx packet_inner(const WavePacket& p, const WavePacket& q);
cplx l2_inner(const WavePacketSum& f, const WavePacketSum& g);

/// Partial derivative d^alpha f (x), alpha a per-axis order vector, |alpha| <= 6.
cplx eval_partial(const WavePacketSum& f, const Eigen::VectorXd& x,
                  const Eigen::VectorXi& alpha);

/** Frobenius norm of the order-k derivative tensor at x:
 *  sqrt( sum_{|alpha|=k} k!/alpha! |d^alpha f(x)|^2 ).  Orders above 6 throw
 *  UnsupportedOrder.
 */
double grad_tensor_norm(const WavePacketSum& f, const Eigen::VectorXd& x, int k);

inline constexpr int kMaxDerivativeOrder = 6;

/** Complex values attached to the points of a shared PointSet; the value
 *  vector always has exactly one entry per point, in the set's row order.
 */
struct RapidSequence {
  std::shared_ptr<const PointSet> base;
  Eigen::VectorXcd values;

  int size() const { return static_cast<int>(values.size()); }
};

RapidSequence make_rapid_sequence(std::shared_ptr<const PointSet> base,
                                  Eigen::VectorXcd values);
RapidSequence zero_sequence(std::shared_ptr<const PointSet> base);

/** Weight w applied to a point a as w(max(|a|,1)^r).
 *
 *  Families: polynomial-max  w(t) = max(t^s0, c_s t^s)  (grows like t^s0 for
 *  moderate t and switches to t^s beyond the crossover c_s^{-1/(s-s0)}), and
 *  log-cubed  w(t) = exp(log^3 t), which outruns every polynomial while
 *  staying subexponential.  Magnitudes below 1 are clamped to 1.
 */
struct WeightSpec {
  enum class Family { kPolynomialMax, kLogCubed };
  Family family = Family::kPolynomialMax;
  double s0 = 6.0;
  double s = 10.0;
  double c_s = 1e-6;
  double r = 1.0;
};

WeightSpec polynomial_max_weight(double s0, double s, double c_s, double r);
WeightSpec log_cubed_weight(double r);

/// w(t) for t >= 1 (t below 1 is clamped).
double weight_value(const WeightSpec& w, double t);

/// Weighted l1 norm  sum_a |alpha(a)| w(max(|a|,1)^r).
double weighted_norm(const RapidSequence& seq, const WeightSpec& w);

/// Weight of a unit mass at point a, i.e. w(max(|a|,1)^r).
double point_weight(const WeightSpec& w, const Eigen::VectorXd& a);

}  // namespace ful
