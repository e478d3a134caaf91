#include "ful/gabor.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ful {
namespace {

long axis_count(double lo, double hi, double step) {
  return static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

void decode(const Box& range, double step, long flat, Eigen::VectorXd& out,
            bool& boundary) {
  const int d = range.dim();
  out.resize(d);
  std::vector<long> counts(d);
  for (int i = 0; i < d; ++i) counts[i] = axis_count(range.lo[i], range.hi[i], step);
  for (int i = d - 1; i >= 0; --i) {
    long ix = flat % counts[i];
    flat /= counts[i];
    out[i] = range.lo[i] + step * static_cast<double>(ix);
    if (ix == 0 || ix == counts[i] - 1) boundary = true;
  }
}

}  // namespace

long PhaseSpaceGrid::y_count() const {
  long n = 1;
  for (int i = 0; i < dim; ++i) n *= axis_count(yrange.lo[i], yrange.hi[i], ystep);
  return n;
}

long PhaseSpaceGrid::eta_count() const {
  long n = 1;
  for (int i = 0; i < dim; ++i) n *= axis_count(etarange.lo[i], etarange.hi[i], etastep);
  return n;
}

void PhaseSpaceGrid::node(long flat, Eigen::VectorXd& y, Eigen::VectorXd& eta) const {
  bool unused = false;
  long ne = eta_count();
  decode(yrange, ystep, flat / ne, y, unused);
  decode(etarange, etastep, flat % ne, eta, unused);
}

bool PhaseSpaceGrid::on_boundary(long flat) const {
  bool b = false;
  Eigen::VectorXd tmp;
  long ne = eta_count();
  decode(yrange, ystep, flat / ne, tmp, b);
  decode(etarange, etastep, flat % ne, tmp, b);
  return b;
}

PhaseSpaceGrid make_phase_space_grid(const Box& yrange, double ystep,
                                     const Box& etarange, double etastep) {
  if (yrange.dim() != etarange.dim())
    throw std::invalid_argument("phase-space grid: y/eta dimension mismatch");
  if (!(ystep > 0) || !(etastep > 0))
    throw std::invalid_argument("phase-space grid: steps must be > 0");
  PhaseSpaceGrid g{yrange.dim(), yrange, ystep, etarange, etastep};
  if (g.node_count() > 50'000'000)
    throw std::invalid_argument("phase-space grid: too many nodes");
  return g;
}

WavePacket gabor_window(int dim, double scale) {
  if (!(scale > 0)) throw std::invalid_argument("gabor window: scale must be > 0");
  double amp = std::pow(2.0, 0.25 * dim) * std::pow(scale, -0.5 * dim);
  return WavePacket{cplx(amp, 0.0), Eigen::VectorXd::Zero(dim),
                    Eigen::VectorXd::Zero(dim), scale};
}

WavePacket gabor_atom(int dim, double scale, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& eta) {
  WavePacket w = gabor_window(dim, scale);
  w.center = y;
  w.freq = eta;
  return w;
}

PhaseSpaceSamples gabor_transform(const WavePacketSum& f, const PhaseSpaceGrid& grid,
                                  double scale) {
  if (f.dim != grid.dim)
    throw std::invalid_argument("gabor transform: dimension mismatch");
  PhaseSpaceSamples out;
  out.grid = grid;
  out.window_scale = scale;
  const long n = grid.node_count();
  out.values.resize(n);
  Eigen::VectorXd y, eta;
  for (long i = 0; i < n; ++i) {
    grid.node(i, y, eta);
    WavePacket atom = gabor_atom(grid.dim, scale, y, eta);
    cplx v = 0.0;
    for (const auto& p : f.packets) v += packet_inner(p, atom);
    out.values[i] = v;
  }
  return out;
}

cplx gabor_invert(const PhaseSpaceSamples& samples, const Eigen::VectorXd& x) {
  const PhaseSpaceGrid& g = samples.grid;
  if (x.size() != g.dim)
    throw std::invalid_argument("gabor invert: dimension mismatch");
  const double cell = std::pow(g.ystep, g.dim) * std::pow(g.etastep, g.dim);
  cplx acc = 0.0;
  Eigen::VectorXd y, eta;
  for (long i = 0; i < g.node_count(); ++i) {
    g.node(i, y, eta);
    acc += samples.values[i] * eval(gabor_atom(g.dim, samples.window_scale, y, eta), x);
  }
  return acc * cell;
}

double boundary_mass(const PhaseSpaceSamples& samples) {
  double all = 0.0, edge = 0.0;
  for (long i = 0; i < samples.grid.node_count(); ++i) {
    double v = std::abs(samples.values[i]);
    if (v > all) all = v;
    if (samples.grid.on_boundary(i) && v > edge) edge = v;
  }
  return all > 0.0 ? edge / all : 0.0;
}

double s_norm(const PhaseSpaceSamples& samples, double s) {
  const PhaseSpaceGrid& g = samples.grid;
  const double cell = std::pow(g.ystep, g.dim) * std::pow(g.etastep, g.dim);
  double acc = 0.0;
  Eigen::VectorXd y, eta;
  for (long i = 0; i < g.node_count(); ++i) {
    g.node(i, y, eta);
    acc += std::abs(samples.values[i]) *
           std::pow(jbracket(y), -s) * std::pow(jbracket(eta), -s);
  }
  return acc * cell;
}

double radius_map(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  if (y.size() != eta.size())
    throw std::invalid_argument("radius map: dimension mismatch");
  return std::sqrt(jbracket(y) / jbracket(eta));
}

}  // namespace ful
