#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "ful/gabor.hpp"
#include "ful/geometry.hpp"
#include "ful/lattice.hpp"
#include "ful/quadrature.hpp"
#include "ful/solver.hpp"
#include "ful/wavepacket.hpp"

namespace ful {

/// JSON documents preserve insertion order so emitted files are stable.
using jsonv = nlohmann::ordered_json;

/// Current on-disk schema version, embedded in every document.
inline constexpr int kSchemaVersion = 1;

/// Shortest decimal string that parses back to exactly x ('.' separator).
std::string fmt_double(double x);

jsonv complex_to_json(cplx v);
cplx complex_from_json(const jsonv& j);

jsonv to_json(const PointSet& s);
PointSet point_set_from_json(const jsonv& j);

jsonv to_json(const WavePacketSum& f);
WavePacketSum wave_packet_sum_from_json(const jsonv& j);

jsonv to_json(const SignedMeasure& mu);
SignedMeasure signed_measure_from_json(const jsonv& j);

jsonv to_json(const SolveConfig& cfg);
SolveConfig solve_config_from_json(const jsonv& j);

jsonv to_json(const SolveReport& rep);
jsonv to_json(const ContractionReport& rep);
jsonv to_json(const PoissonReport& rep);
jsonv to_json(const SeparationReport& rep);
jsonv to_json(const DensityReport& rep);

void save_json(const jsonv& j, const std::string& path);
jsonv load_json(const std::string& path);

/// CSV rows  y_1..y_d, eta_1..eta_d, re, im  (header included).
void write_samples_csv(const PhaseSpaceSamples& samples, std::ostream& os);

/** Compact samples format: one JSON header line (grid, window scale, count)
 *  followed by the raw re/im doubles in node order.  Round-trips exactly.
 */
void write_samples_bin(const PhaseSpaceSamples& samples, const std::string& path);
PhaseSpaceSamples read_samples_bin(const std::string& path);

}  // namespace ful
