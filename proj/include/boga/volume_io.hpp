#pragma once

#include <filesystem>
#include <variant>

#include "boga/volume.hpp"

namespace boga {

/// On-disk container: `<stem>.vol.json` holds a JSON header (dims, voxel size,
/// dtype, byte order, validity layout); `<stem>.vol.raw` holds the little-endian
/// payload. Complex samples are interleaved (re, im) float32, real samples are
/// float32, and validity flags follow the samples as an LSB-first bitset.
struct VolumePaths {
  std::filesystem::path header;
  std::filesystem::path payload;
};

VolumePaths volume_paths(const std::filesystem::path &stem);

void save_volume(const ComplexVolume &v, const std::filesystem::path &stem);
void save_volume(const RealVolume &v, const std::filesystem::path &stem);

/// Samples rounded to the stored float32 precision, so that
/// load(save(v)) is bit-identical to storage_rounded(v). Flags are kept.
ComplexVolume storage_rounded(const ComplexVolume &v);
RealVolume storage_rounded(const RealVolume &v);

using AnyVolume = std::variant<ComplexVolume, RealVolume>;

AnyVolume load_volume(const std::filesystem::path &stem);
ComplexVolume load_complex_volume(const std::filesystem::path &stem);
RealVolume load_real_volume(const std::filesystem::path &stem);

} // namespace boga
