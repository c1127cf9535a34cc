#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "boga/tse.hpp"
#include "boga/volume.hpp"

namespace boga {

enum class Convention {
  /// C/D intermediates taken literally, conjugate on S2 included.
  Verbatim,
  /// I = (S4*(S1 + S2) - S3*(S1 - S2)) / (2(|S3|^2 + |S4|^2)).
  Ratio,
};
const char *to_string(Convention c);
Convention parse_convention(const std::string &s);

enum class ContrastKind { T1, T2, PD };
const char *to_string(ContrastKind k);
ContrastKind parse_contrast(const std::string &s);

struct VirtualChannelPair {
  ComplexVolume s3;
  ComplexVolume s4;
};

/// S3 = (S4pre - S3pre) / 2, S4 = (S3pre + S4pre) / 2.
VirtualChannelPair derive_virtual_channels(const ComplexVolume &s3pre, const ComplexVolume &s4pre);

ComplexVolume average_volumes(const ComplexVolume &a, const ComplexVolume &b);

/// Voxels whose |S3|^2 + |S4|^2 is not above this fraction of the median
/// non-zero denominator are flagged invalid.
inline constexpr double kDenominatorFloor = 1e-6;

ComplexVolume boga_combine(const ComplexVolume &s1, const ComplexVolume &s2, const VirtualChannelPair &vc,
                           Convention convention);

struct Reconstruction {
  ContrastKind kind;
  Convention convention;
  int tse_factor;
  ComplexVolume s1, s2;
  VirtualChannelPair vc;
  ComplexVolume image;
};

/// T1: first SP2, second SP1. T2: first SP3, second SP2. PD: first SP2,
/// second the per-mode average of SP1 and SP3. Only mode1/mode2 entries are
/// read.
Reconstruction reconstruct_contrast(const AcquisitionSet &acq, ContrastKind kind, Convention convention);

struct ConventionResidual {
  Convention convention;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  /// Mean of I / (A1/A2) and the spatial CoV of |I|; a constant non-unit
  /// factor would show up here with a near-zero CoV.
  Complex mean_ratio{0.0, 0.0};
  double magnitude_cov = 0.0;
  Index invalid_voxels = 0;
  bool passed = false;
};

struct AuditReport {
  Grid grid;
  int trials = 0;
  std::uint64_t seed = 0;
  Complex a1{3.0, 0.0};
  Complex a2{2.0, 0.0};
  double threshold = 1e-9;
  ConventionResidual verbatim;
  ConventionResidual ratio;

  bool any_passed() const { return verbatim.passed || ratio.passed; }
  /// The passing convention; the ratio form wins if both pass. Throws
  /// ContractViolation if neither does.
  Convention recommended() const;
  nlohmann::json to_json() const;
};

/// Builds S1 = A1 h1, S2 = A1 h2, S3pre = A2 h1, S4pre = A2 h2 from random
/// smooth field pairs and measures |I - A1/A2| for both conventions.
AuditReport audit_conventions(const Grid &grid, int trials, std::uint64_t seed, Complex a1 = {3.0, 0.0},
                              Complex a2 = {2.0, 0.0}, double threshold = 1e-9);

} // namespace boga
