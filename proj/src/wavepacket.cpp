#include "ful/wavepacket.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ful/errors.hpp"

namespace ful {
namespace {

constexpr double kPi = std::numbers::pi;

void check_dim(const WavePacket& p) {
  if (p.center.size() < 1 || p.center.size() != p.freq.size())
    throw std::invalid_argument("packet: center/freq dimension mismatch");
  if (!(p.scale > 0)) throw std::invalid_argument("packet: scale must be > 0");
  if (!std::isfinite(p.amp.real()) || !std::isfinite(p.amp.imag()))
    throw std::invalid_argument("packet: amplitude must be finite");
}

/// D^n h / h at t, n = 0..max_n, for h(t) = exp(-pi (t-c)^2 / R^2 + 2 pi i xi t).
/// h'(t) = u(t) h(t) with u = -2 pi (t-c)/R^2 + 2 pi i xi, so the ratio
/// polynomials obey q_{n+1} = q_n' + u q_n (coefficients in s = t - c).
void axis_derivative_ratios(double c, double R, double xi, double t, int max_n,
                            std::vector<cplx>& out) {
  const cplx ulin(-2.0 * kPi / (R * R), 0.0);
  const cplx ucst(0.0, 2.0 * kPi * xi);
  std::vector<cplx> q{1.0}, next;
  const double s = t - c;
  out.assign(max_n + 1, cplx(0.0));
  out[0] = 1.0;
  for (int n = 1; n <= max_n; ++n) {
    next.assign(n + 1, cplx(0.0));
    // q holds q_{n-1} (degree n-1), so its derivative has coefficients
    // (j+1) q[j+1] for j up to n-2 only.
    for (int j = 0; j + 2 <= n; ++j) next[j] += static_cast<double>(j + 1) * q[j + 1];
    for (int j = 0; j < n; ++j) {
      next[j] += ucst * q[j];
      next[j + 1] += ulin * q[j];
    }
    q = next;
    cplx v = 0.0;
    for (int j = n; j >= 0; --j) v = v * s + q[j];
    out[n] = v;
  }
}

template <typename F>
void for_each_multi_index(int dim, int total, Eigen::VectorXi& alpha, int axis, F&& body) {
  if (axis == dim - 1) {
    alpha[axis] = total;
    body(alpha);
    return;
  }
  for (int a = 0; a <= total; ++a) {
    alpha[axis] = a;
    for_each_multi_index(dim, total - a, alpha, axis + 1, body);
  }
}

double multinomial(int k, const Eigen::VectorXi& alpha) {
  double v = std::tgamma(k + 1.0);
  for (int i = 0; i < alpha.size(); ++i) v /= std::tgamma(alpha[i] + 1.0);
  return v;
}

}  // namespace

WavePacket make_wave_packet(cplx amp, Eigen::VectorXd center,
                            Eigen::VectorXd freq, double scale) {
  WavePacket p{amp, std::move(center), std::move(freq), scale};
  check_dim(p);
  return p;
}

WavePacketSum make_wave_packet_sum(int dim, std::vector<WavePacket> packets) {
  if (dim < 1) throw std::invalid_argument("packet sum: dim must be >= 1");
  for (const auto& p : packets) {
    check_dim(p);
    if (p.dim() != dim) throw std::invalid_argument("packet sum: mixed dimensions");
  }
  return WavePacketSum{dim, std::move(packets)};
}

cplx eval(const WavePacket& p, const Eigen::VectorXd& x) {
  double q = (x - p.center).squaredNorm() / (p.scale * p.scale);
  double phase = 2.0 * kPi * p.freq.dot(x);
  return p.amp * std::polar(std::exp(-kPi * q), phase);
}

cplx eval(const WavePacketSum& f, const Eigen::VectorXd& x) {
  cplx v = 0.0;
  for (const auto& p : f.packets) v += eval(p, x);
  return v;
}

WavePacket fourier(const WavePacket& p) {
  const int d = p.dim();
  double rd = std::pow(p.scale, d);
  cplx amp = p.amp * rd * std::polar(1.0, 2.0 * kPi * p.center.dot(p.freq));
  return WavePacket{amp, p.freq, -p.center, 1.0 / p.scale};
}

WavePacketSum fourier(const WavePacketSum& f) {
  WavePacketSum out{f.dim, {}};
  out.packets.reserve(f.packets.size());
  for (const auto& p : f.packets) out.packets.push_back(fourier(p));
  return out;
}

WavePacket reflect(const WavePacket& p) {
  return WavePacket{p.amp, -p.center, -p.freq, p.scale};
}

WavePacketSum reflect(const WavePacketSum& f) {
  WavePacketSum out{f.dim, {}};
  out.packets.reserve(f.packets.size());
  for (const auto& p : f.packets) out.packets.push_back(reflect(p));
  return out;
}

WavePacketSum inverse_fourier(const WavePacketSum& f) { return reflect(fourier(f)); }

cplx packet_inner(const WavePacket& p, const WavePacket& q) {
  if (p.dim() != q.dim()) throw std::invalid_argument("inner: dimension mismatch");
  const int d = p.dim();
  const double a = 1.0 / (p.scale * p.scale);
  const double b = 1.0 / (q.scale * q.scale);
  const double s = a + b;
  const Eigen::VectorXd w = (a * p.center + b * q.center) / s;
  const Eigen::VectorXd om = p.freq - q.freq;
  const double quad = (p.center - q.center).squaredNorm() /
                      (p.scale * p.scale + q.scale * q.scale);
  const double mag = std::pow(s, -0.5 * d) *
                     std::exp(-kPi * quad - kPi * om.squaredNorm() / s);
  return p.amp * std::conj(q.amp) * std::polar(mag, 2.0 * kPi * om.dot(w));
}

cplx l2_inner(const WavePacketSum& f, const WavePacketSum& g) {
  cplx v = 0.0;
  for (const auto& p : f.packets)
    for (const auto& q : g.packets) v += packet_inner(p, q);
  return v;
}

cplx eval_partial(const WavePacketSum& f, const Eigen::VectorXd& x,
                  const Eigen::VectorXi& alpha) {
  if (alpha.size() != f.dim)
    throw std::invalid_argument("partial: order vector dimension mismatch");
  int total = 0;
  for (int i = 0; i < alpha.size(); ++i) {
    if (alpha[i] < 0) throw std::invalid_argument("partial: negative order");
    total += alpha[i];
  }
  if (total > kMaxDerivativeOrder)
    throw UnsupportedOrder("partial: derivative order above 6 is not supported");

  cplx sum = 0.0;
  std::vector<cplx> ratios;
  for (const auto& p : f.packets) {
    cplx factor = eval(p, x);
    for (int axis = 0; axis < f.dim; ++axis) {
      if (alpha[axis] == 0) continue;
      axis_derivative_ratios(p.center[axis], p.scale, p.freq[axis], x[axis],
                             alpha[axis], ratios);
      factor *= ratios[alpha[axis]];
    }
    sum += factor;
  }
  return sum;
}

double grad_tensor_norm(const WavePacketSum& f, const Eigen::VectorXd& x, int k) {
  if (k < 0 || k > kMaxDerivativeOrder)
    throw UnsupportedOrder("derivative tensor: order must be in [0, 6]");
  if (k == 0) return std::abs(eval(f, x));
  double acc = 0.0;
  Eigen::VectorXi alpha(f.dim);
  for_each_multi_index(f.dim, k, alpha, 0, [&](const Eigen::VectorXi& a) {
    double m = multinomial(k, a);
    cplx v = eval_partial(f, x, a);
    acc += m * std::norm(v);
  });
  return std::sqrt(acc);
}

RapidSequence make_rapid_sequence(std::shared_ptr<const PointSet> base,
                                  Eigen::VectorXcd values) {
  if (!base) throw std::invalid_argument("sequence: null base set");
  if (values.size() != base->size())
    throw std::invalid_argument("sequence: value count != point count");
  return RapidSequence{std::move(base), std::move(values)};
}

RapidSequence zero_sequence(std::shared_ptr<const PointSet> base) {
  if (!base) throw std::invalid_argument("sequence: null base set");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(base->size());
  return RapidSequence{std::move(base), std::move(v)};
}

WeightSpec polynomial_max_weight(double s0, double s, double c_s, double r) {
  if (!(s0 >= 0) || !(s >= s0)) throw std::invalid_argument("weight: need 0 <= s0 <= s");
  if (!(c_s > 0)) throw std::invalid_argument("weight: c_s must be > 0");
  if (!(r > 0)) throw std::invalid_argument("weight: exponent r must be > 0");
  return WeightSpec{WeightSpec::Family::kPolynomialMax, s0, s, c_s, r};
}

WeightSpec log_cubed_weight(double r) {
  if (!(r > 0)) throw std::invalid_argument("weight: exponent r must be > 0");
  return WeightSpec{WeightSpec::Family::kLogCubed, 0.0, 0.0, 1.0, r};
}

double weight_value(const WeightSpec& w, double t) {
  t = std::max(t, 1.0);
  switch (w.family) {
    case WeightSpec::Family::kPolynomialMax:
      return std::max(std::pow(t, w.s0), w.c_s * std::pow(t, w.s));
    case WeightSpec::Family::kLogCubed: {
      double l = std::log(t);
      return std::exp(l * l * l);
    }
  }
  return 1.0;
}

double point_weight(const WeightSpec& w, const Eigen::VectorXd& a) {
  return weight_value(w, std::pow(std::max(a.norm(), 1.0), w.r));
}

double weighted_norm(const RapidSequence& seq, const WeightSpec& w) {
  double acc = 0.0;
  for (int i = 0; i < seq.size(); ++i)
    acc += std::abs(seq.values[i]) * point_weight(w, seq.base->point(i));
  return acc;
}

}  // namespace ful
