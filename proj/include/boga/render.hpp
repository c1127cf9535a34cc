#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "boga/volume.hpp"

namespace boga {

struct Window {
  double lo = 0.0;
  double hi = 1.0;
};

struct Image8 {
  Index width = 0;
  Index height = 0;
  std::vector<std::uint8_t> pixels; // row-major

  std::uint8_t at(Index col, Index row) const { return pixels[static_cast<std::size_t>(row * width + col)]; }
};

/// Linear grey-level map lo -> 0, hi -> 255, clamped. Invalid voxels render 0.
/// Slices normal to z are nx wide and ny high; normal to y, nx by nz; normal
/// to x, ny by nz.
Image8 render_slice(const RealVolume &v, Axis axis, Index index, Window window);
/// As above; voxels outside `mask` render 0.
Image8 render_slice(const RealVolume &v, Axis axis, Index index, Window window, const Mask &mask);

/// Binary PGM (P5), 8-bit.
void write_pgm(const Image8 &img, const std::filesystem::path &path);

} // namespace boga
