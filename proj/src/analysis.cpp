#include "boga/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "boga/parallel.hpp"

namespace boga {

namespace {

constexpr Index kRadius = 2; // 5-voxel kernels

/// Sum over a (2r+1) window along one axis, truncated at the borders.
std::vector<double> box_pass(const std::vector<double> &in, const Grid &g, Axis axis)
{
  std::vector<double> out(in.size());
  Index const len = g.extent(axis);
  Index const stride = axis == Axis::X ? 1 : axis == Axis::Y ? g.nx : g.nx * g.ny;
  Index const lines = g.size() / len;
  parallel_for(lines, [&](Index l0, Index l1) {
    for (Index l = l0; l < l1; l++) {
      Index base = 0;
      switch (axis) {
      case Axis::X: base = l * g.nx; break;
      case Axis::Y: base = (l % g.nx) + (l / g.nx) * g.nx * g.ny; break;
      case Axis::Z: base = l; break;
      }
      for (Index t = 0; t < len; t++) {
        double s = 0.0;
        for (Index u = std::max<Index>(0, t - kRadius); u <= std::min(len - 1, t + kRadius); u++) {
          s += in[static_cast<std::size_t>(base + u * stride)];
        }
        out[static_cast<std::size_t>(base + t * stride)] = s;
      }
    }
  });
  return out;
}

std::vector<double> box_sum(const std::vector<double> &in, const Grid &g)
{
  return box_pass(box_pass(box_pass(in, g, Axis::X), g, Axis::Y), g, Axis::Z);
}

} // namespace

double stable_sum(std::span<const double> values)
{
  double sum = 0.0, comp = 0.0;
  for (double x : values) {
    double const t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

SNRMap snr_map(const RealVolume &v, std::string source, bool cp_derived)
{
  auto const &g = v.grid();
  if (g.nx < 5 || g.ny < 5 || g.nz < 5) {
    throw Error(ErrorKind::GridTooSmall, "SNR map needs at least 5 voxels along each axis");
  }
  auto const n = static_cast<std::size_t>(g.size());
  std::vector<double> w(n), s(n);
  for (std::size_t i = 0; i < n; i++) {
    bool const ok = v.valid(static_cast<Index>(i));
    w[i] = ok ? 1.0 : 0.0;
    s[i] = ok ? v[static_cast<Index>(i)] : 0.0;
  }
  auto const count = box_sum(w, g);
  auto const total = box_sum(s, g);

  std::vector<double> smooth(n), noise(n), noise2(n);
  for (std::size_t i = 0; i < n; i++) {
    smooth[i] = count[i] > 0.0 ? total[i] / count[i] : 0.0;
    noise[i] = w[i] > 0.0 ? s[i] - smooth[i] : 0.0;
    noise2[i] = noise[i] * noise[i];
  }
  auto const m1 = box_sum(noise, g);
  auto const m2 = box_sum(noise2, g);

  SNRMap out{RealVolume(g), std::move(source), cp_derived, false};
  std::vector<std::uint8_t> valid(n, 1);
  for (std::size_t i = 0; i < n; i++) {
    if (w[i] == 0.0 || count[i] == 0.0) {
      valid[i] = 0;
      continue;
    }
    double const mean = m1[i] / count[i];
    double const sigma = std::sqrt(std::max(0.0, m2[i] / count[i] - mean * mean));
    // Deviation at rounding level of the local mean counts as zero.
    if (!(sigma > 1e-12 * std::abs(smooth[i]))) {
      valid[i] = 0;
      continue;
    }
    out.snr[static_cast<Index>(i)] = s[i] / sigma;
  }
  out.snr.set_validity(std::move(valid));
  return out;
}

SNRMap scale_cp_snr(const SNRMap &m)
{
  if (!m.cp_derived) {
    throw Error(ErrorKind::NotCpDerived, "only CP-mode SNR maps are rescaled");
  }
  if (m.scaled) {
    throw Error(ErrorKind::AlreadyScaled, "SNR map '" + m.source + "' is already scaled");
  }
  SNRMap out = m;
  for (Index n = 0; n < out.snr.size(); n++) {
    out.snr[n] *= std::numbers::sqrt2;
  }
  out.scaled = true;
  return out;
}

double ProfileSeries::max_deviation() const
{
  double d = 0.0;
  for (std::size_t i = 0; i < normalized.size(); i++) {
    if (valid[i]) {
      d = std::max(d, std::abs(normalized[i] - 1.0));
    }
  }
  return d;
}

ProfileSeries normalized_profile(const RealVolume &v, const LineSpec &line)
{
  auto const &g = v.grid();
  line.validate(g);
  ProfileSeries p;
  p.line = line;
  std::vector<double> good;
  for (Index t = line.begin; t < line.resolved_end(g); t++) {
    Index const n = line.voxel(g, t);
    p.positions.push_back(t);
    p.raw.push_back(v[n]);
    p.valid.push_back(v.valid(n));
    if (v.valid(n)) {
      good.push_back(v[n]);
    }
  }
  double const mean = good.empty() ? 0.0 : stable_sum(good) / static_cast<double>(good.size());
  if (mean == 0.0 || !std::isfinite(mean)) {
    throw Error(ErrorKind::ZeroMeanProfile, "profile mean is zero");
  }
  p.normalized.resize(p.raw.size(), 0.0);
  for (std::size_t i = 0; i < p.raw.size(); i++) {
    if (p.valid[i]) {
      p.normalized[i] = p.raw[i] / mean;
    }
  }
  return p;
}

Mask display_mask(const RealVolume &v, double fraction)
{
  auto const &g = v.grid();
  Mask m(g);
  Index const slice = g.nx * g.ny;
  for (Index k = 0; k < g.nz; k++) {
    double peak = 0.0;
    bool any = false;
    for (Index s = 0; s < slice; s++) {
      Index const n = k * slice + s;
      if (v.valid(n)) {
        peak = any ? std::max(peak, v[n]) : v[n];
        any = true;
      }
    }
    if (!any || !(peak > 0.0)) {
      continue;
    }
    double const threshold = fraction * peak;
    for (Index s = 0; s < slice; s++) {
      Index const n = k * slice + s;
      m.set(n, v.valid(n) && v[n] >= threshold);
    }
  }
  return m;
}

std::string RegionStats::formatted() const
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.1f", mean, std);
  return buf;
}

RegionStats region_stats(const RealVolume &v, const Mask &region, std::string label)
{
  require_same_grid(v.grid(), region.grid(), "region stats");
  std::vector<double> values;
  for (Index n = 0; n < v.size(); n++) {
    if (region[n] && v.valid(n)) {
      values.push_back(v[n]);
    }
  }
  if (values.empty()) {
    throw Error(ErrorKind::EmptyRegion, "region '" + label + "' has no valid voxels");
  }
  double const cnt = static_cast<double>(values.size());
  double const mean = stable_sum(values) / cnt;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(), [mean](double x) { return (x - mean) * (x - mean); });
  return RegionStats{std::move(label), mean, std::sqrt(stable_sum(sq) / cnt), static_cast<Index>(values.size())};
}

RegionStats region_stats(const SNRMap &m, const Mask &region, std::string label)
{
  return region_stats(m.snr, region, std::move(label));
}

double coefficient_of_variation(const RealVolume &v, const Mask &region)
{
  auto const s = region_stats(v, region);
  if (!(s.mean > 0.0)) {
    throw Error(ErrorKind::NonPositiveMean, "coefficient of variation needs a positive mean");
  }
  return s.std / s.mean;
}

void write_profile_csv(const ProfileSeries &p, const std::filesystem::path &path)
{
  std::ofstream f(path, std::ios::trunc);
  if (!f) {
    throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
  f << "axis,index,raw,normalized\n";
  char buf[128];
  for (std::size_t i = 0; i < p.raw.size(); i++) {
    std::snprintf(buf, sizeof buf, "%s,%lld,%.17g,%.17g\n", to_string(p.line.axis),
                  static_cast<long long>(p.positions[i]), p.raw[i], p.normalized[i]);
    f << buf;
  }
}

void write_stats_csv(const std::vector<StatsRow> &rows, const std::filesystem::path &path)
{
  std::ofstream f(path, std::ios::trunc);
  if (!f) {
    throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
  f << "image,region,mean,std,count\n";
  char buf[256];
  for (auto const &r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%lld\n", r.image.c_str(), r.stats.label.c_str(), r.stats.mean,
                  r.stats.std, static_cast<long long>(r.stats.count));
    f << buf;
  }
}

} // namespace boga
