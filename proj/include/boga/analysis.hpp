#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "boga/volume.hpp"

namespace boga {

struct SNRMap {
  RealVolume snr;
  std::string source;
  bool cp_derived = false;
  bool scaled = false;
};

/// Smooth with a 5x5x5 box, subtract to get a noise image, take the moving
/// 5x5x5 population standard deviation of that, and divide the signal by it.
/// Kernels shrink at the volume border; invalid input voxels are left out of
/// every kernel. Voxels with zero local deviation are flagged invalid.
SNRMap snr_map(const RealVolume &v, std::string source = {}, bool cp_derived = false);

/// Multiplies a CP-derived map by sqrt(2) (two-average equivalent). Refuses
/// maps that are not CP-derived or already scaled.
SNRMap scale_cp_snr(const SNRMap &m);

struct ProfileSeries {
  LineSpec line;
  std::vector<Index> positions;
  std::vector<double> raw;
  std::vector<double> normalized; // 0 where the voxel is invalid
  std::vector<bool> valid;

  double max_deviation() const;
};

ProfileSeries normalized_profile(const RealVolume &v, const LineSpec &line);

/// Keeps voxels at or above `fraction` of their transversal (z) slice maximum.
/// For rendering only.
inline constexpr double kDisplayMaskFraction = 2e-4;
Mask display_mask(const RealVolume &v, double fraction = kDisplayMaskFraction);

struct RegionStats {
  std::string label;
  double mean = 0.0;
  double std = 0.0;
  Index count = 0;

  /// "mean±std" with two and one decimals, e.g. 36.43±28.9.
  std::string formatted() const;
};

RegionStats region_stats(const RealVolume &v, const Mask &region, std::string label = {});
RegionStats region_stats(const SNRMap &m, const Mask &region, std::string label = {});

double coefficient_of_variation(const RealVolume &v, const Mask &region);

/// Compensated (Neumaier) sum.
double stable_sum(std::span<const double> values);

struct StatsRow {
  std::string image;
  RegionStats stats;
};

void write_profile_csv(const ProfileSeries &p, const std::filesystem::path &path);
void write_stats_csv(const std::vector<StatsRow> &rows, const std::filesystem::path &path);

} // namespace boga
