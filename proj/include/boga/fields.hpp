#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "boga/volume.hpp"

namespace boga {

enum class RfMode { Mode1, Mode2, CP };
const char *to_string(RfMode m);
RfMode parse_rf_mode(const std::string &s);

/// Parameters of the two-channel effective field model. Phase rolls are the
/// total phase change in radians across the field of view along each axis.
struct FieldSpec {
  Grid grid;
  double depth = 0.6;
  std::array<double, 3> phase_roll_mode1{4.0, 2.5, 0.5};
  std::array<double, 3> phase_roll_mode2{-4.0, -2.5, 0.5};
  /// Amplitude (radians) of a seeded low-order phase perturbation per mode.
  double phase_perturbation = 0.15;
  std::array<double, 3> hole_center_voxel{0.0, 0.0, 0.0};
  double hole_radius_mm = 0.0; // 0 disables the hole
  double hole_floor = 0.03;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Default field layout for `grid`: hole centred on the default phantom's
/// posterior-inferior lobe.
FieldSpec default_field_spec(const Grid &grid);

struct FieldSet {
  ComplexVolume h1;
  ComplexVolume h2;
  ComplexVolume cp;     // h1 + h2
  RealVolume envelope;  // coverage, 1 outside the hole

  const Grid &grid() const { return h1.grid(); }
  const ComplexVolume &field(RfMode m) const;
  /// Voxels where the coverage envelope is below 1.
  Mask hole() const;
  /// Mean of (|h1| + |h2|) / 2 over voxels outside the hole.
  double reference_amplitude() const;
};

/// Mode 1 is depressed towards the anterior/posterior (y) edges and raised
/// towards left/right (x); mode 2 is the mirror image, so their low regions do
/// not overlap. Inside the hole the modulation fades out and both amplitudes
/// fall to `hole_floor` times the reference amplitude at the centre.
FieldSet generate_mode_fields(const FieldSpec &spec);

/// Random smooth complex pair (low-order cosine amplitude and phase terms)
/// with amplitudes bounded away from zero; used by the combination oracle.
std::pair<ComplexVolume, ComplexVolume> random_smooth_field_pair(const Grid &grid, std::uint64_t seed);

} // namespace boga
