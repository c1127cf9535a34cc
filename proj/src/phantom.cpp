#include "boga/phantom.hpp"

#include <cmath>

#include "boga/parallel.hpp"
#include "boga/rng.hpp"

namespace boga {

void TissueClass::validate() const
{
  if (!(t1 > 0.0) || !(t2 > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "tissue '" + name + "': T1 and T2 must be > 0");
  }
  if (t2 > t1) {
    throw Error(ErrorKind::InvalidArgument, "tissue '" + name + "': T2 must not exceed T1");
  }
  if (!(pd >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "tissue '" + name + "': PD must be >= 0");
  }
}

std::int32_t Phantom::find(const std::string &name) const
{
  for (std::size_t i = 0; i < tissues.size(); i++) {
    if (tissues[i].name == name) {
      return static_cast<std::int32_t>(i);
    }
  }
  throw Error(ErrorKind::InvalidArgument, "no tissue named '" + name + "'");
}

namespace {

template <typename Get>
RealVolume map_tissue(const Phantom &p, Get get)
{
  RealVolume m(p.grid());
  for (Index n = 0; n < m.size(); n++) {
    m[n] = get(p.tissue_at(n));
  }
  return m;
}

} // namespace

RealVolume Phantom::t1_map() const { return map_tissue(*this, [](const TissueClass &t) { return t.t1; }); }
RealVolume Phantom::t2_map() const { return map_tissue(*this, [](const TissueClass &t) { return t.t2; }); }
RealVolume Phantom::pd_map() const { return map_tissue(*this, [](const TissueClass &t) { return t.pd; }); }

RealVolume Phantom::label_map() const
{
  RealVolume m(grid());
  for (Index n = 0; n < m.size(); n++) {
    m[n] = labels[n];
  }
  return m;
}

std::vector<TissueClass> default_tissues()
{
  return {
    {"background", 1000.0, 100.0, 0.0},
    {"white matter", 1200.0, 47.0, 0.70},
    {"grey matter", 2000.0, 55.0, 0.80},
    {"csf", 4400.0, 800.0, 1.00},
    {"posterior-inferior lobe", 2000.0, 55.0, 0.80},
  };
}

std::array<double, 3> default_lobe_center_mm(const Grid &g)
{
  double const hy = 0.5 * static_cast<double>(g.ny) * g.dy;
  double const hz = 0.5 * static_cast<double>(g.nz) * g.dz;
  return {0.0, -0.45 * hy, -0.42 * hz};
}

PhantomSpec default_brain_spec(const Grid &g)
{
  double const hx = 0.5 * static_cast<double>(g.nx) * g.dx;
  double const hy = 0.5 * static_cast<double>(g.ny) * g.dy;
  double const hz = 0.5 * static_cast<double>(g.nz) * g.dz;
  auto scaled = [&](double fx, double fy, double fz) { return std::array<double, 3>{fx * hx, fy * hy, fz * hz}; };

  PhantomSpec spec;
  spec.grid = g;
  spec.tissues = default_tissues();
  spec.background = tissue::background;
  spec.primitives = {
    {{0.0, 0.0, 0.0}, scaled(0.80, 0.88, 0.78), tissue::csf},
    {{0.0, 0.0, 0.0}, scaled(0.72, 0.80, 0.68), tissue::gm},
    {{0.0, 0.0, 0.0}, scaled(0.56, 0.64, 0.50), tissue::wm},
    {default_lobe_center_mm(g), scaled(0.28, 0.20, 0.18), tissue::lobe},
  };
  return spec;
}

Phantom generate_phantom(const PhantomSpec &spec)
{
  if (spec.primitives.empty()) {
    throw Error(ErrorKind::EmptySpec, "phantom spec has no primitives");
  }
  if (spec.tissues.empty()) {
    throw Error(ErrorKind::EmptySpec, "phantom spec has no tissue classes");
  }
  for (auto const &t : spec.tissues) {
    t.validate();
  }
  auto const ntissue = static_cast<std::int32_t>(spec.tissues.size());
  if (spec.background < 0 || spec.background >= ntissue) {
    throw Error(ErrorKind::InvalidArgument, "background class out of range");
  }
  if (spec.tissues[static_cast<std::size_t>(spec.background)].pd != 0.0) {
    throw Error(ErrorKind::InvalidArgument, "background class must have PD = 0");
  }

  auto const &g = spec.grid;
  Phantom ph;
  ph.tissues = spec.tissues;

  std::vector<Ellipsoid> prims = spec.primitives;
  CounterRng const rng(spec.seed);
  for (std::size_t p = 0; p < prims.size(); p++) {
    auto &e = prims[p];
    if (e.tissue < 0 || e.tissue >= ntissue) {
      throw Error(ErrorKind::InvalidArgument, "primitive " + std::to_string(p) + " references unknown tissue");
    }
    for (int a = 0; a < 3; a++) {
      if (!(e.radii_mm[static_cast<std::size_t>(a)] > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "primitive " + std::to_string(p) + " has non-positive radius");
      }
      if (spec.jitter_mm > 0.0) {
        double const u = rng.uniform(3 * p + static_cast<std::size_t>(a));
        e.center_mm[static_cast<std::size_t>(a)] += spec.jitter_mm * (2.0 * u - 1.0);
      }
    }
    std::array<double, 3> const half{0.5 * static_cast<double>(g.nx) * g.dx, 0.5 * static_cast<double>(g.ny) * g.dy,
                                     0.5 * static_cast<double>(g.nz) * g.dz};
    bool clipped = false;
    for (std::size_t a = 0; a < 3; a++) {
      clipped = clipped || std::abs(e.center_mm[a]) + e.radii_mm[a] > half[a];
    }
    if (clipped) {
      ph.warnings.push_back("primitive " + std::to_string(p) + " extends outside the grid and was clipped");
    }
  }

  ph.labels = LabelVolume(g, spec.background);
  parallel_for(g.nz, [&](Index k0, Index k1) {
    for (Index k = k0; k < k1; k++) {
      double const z = g.centered_mm(Axis::Z, k);
      for (Index j = 0; j < g.ny; j++) {
        double const y = g.centered_mm(Axis::Y, j);
        for (Index i = 0; i < g.nx; i++) {
          double const x = g.centered_mm(Axis::X, i);
          std::int32_t label = spec.background;
          for (auto const &e : prims) {
            double const ux = (x - e.center_mm[0]) / e.radii_mm[0];
            double const uy = (y - e.center_mm[1]) / e.radii_mm[1];
            double const uz = (z - e.center_mm[2]) / e.radii_mm[2];
            if (ux * ux + uy * uy + uz * uz <= 1.0) {
              label = e.tissue;
            }
          }
          ph.labels(i, j, k) = label;
        }
      }
    }
  });

  std::vector<Index> hits(static_cast<std::size_t>(ntissue), 0);
  for (Index n = 0; n < ph.labels.size(); n++) {
    hits[static_cast<std::size_t>(ph.labels[n])]++;
  }
  for (std::size_t p = 0; p < prims.size(); p++) {
    if (hits[static_cast<std::size_t>(prims[p].tissue)] == 0) {
      ph.warnings.push_back("primitive " + std::to_string(p) + " covers no voxels");
    }
  }
  return ph;
}

} // namespace boga
