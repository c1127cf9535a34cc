#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "boga/volume.hpp"

namespace boga {

/// Relaxation times in ms; proton density is dimensionless.
struct TissueClass {
  std::string name;
  double t1 = 1000.0;
  double t2 = 100.0;
  double pd = 0.0;

  void validate() const;
};

/// Axis-aligned ellipsoid in mm, relative to the grid centre.
struct Ellipsoid {
  std::array<double, 3> center_mm{0.0, 0.0, 0.0};
  std::array<double, 3> radii_mm{1.0, 1.0, 1.0};
  std::int32_t tissue = 0;
};

struct PhantomSpec {
  Grid grid;
  std::vector<TissueClass> tissues;
  std::int32_t background = 0;
  std::vector<Ellipsoid> primitives; // later entries overwrite earlier ones
  std::uint64_t seed = 0;
  double jitter_mm = 0.0; // per-primitive centre jitter drawn from `seed`
};

using LabelVolume = Volume<std::int32_t>;

struct Phantom {
  LabelVolume labels;
  std::vector<TissueClass> tissues;
  std::vector<std::string> warnings;

  const Grid &grid() const { return labels.grid(); }
  const TissueClass &tissue_at(Index n) const { return tissues[static_cast<std::size_t>(labels[n])]; }
  std::int32_t find(const std::string &name) const;

  RealVolume t1_map() const;
  RealVolume t2_map() const;
  RealVolume pd_map() const;
  RealVolume label_map() const;
};

namespace tissue {
inline constexpr std::int32_t background = 0;
inline constexpr std::int32_t wm = 1;
inline constexpr std::int32_t gm = 2;
inline constexpr std::int32_t csf = 3;
inline constexpr std::int32_t lobe = 4;
} // namespace tissue

std::vector<TissueClass> default_tissues();

/// Nested head-like ellipsoids (CSF shell, GM shell, WM core) plus a small
/// posterior-inferior lobe that sits under the default coverage hole.
PhantomSpec default_brain_spec(const Grid &grid);

/// Centre of the default posterior-inferior lobe in mm from the grid centre.
std::array<double, 3> default_lobe_center_mm(const Grid &grid);

Phantom generate_phantom(const PhantomSpec &spec);

} // namespace boga
