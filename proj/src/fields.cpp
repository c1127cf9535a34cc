#include "boga/fields.hpp"

#include <cmath>
#include <numbers>

#include "boga/parallel.hpp"
#include "boga/phantom.hpp"
#include "boga/rng.hpp"

namespace boga {

using std::numbers::pi;

const char *to_string(RfMode m)
{
  switch (m) {
  case RfMode::Mode1: return "mode1";
  case RfMode::Mode2: return "mode2";
  case RfMode::CP: return "cp";
  }
  return "?";
}

RfMode parse_rf_mode(const std::string &s)
{
  if (s == "mode1") return RfMode::Mode1;
  if (s == "mode2") return RfMode::Mode2;
  if (s == "cp") return RfMode::CP;
  throw Error(ErrorKind::InvalidArgument, "unknown RF mode '" + s + "'");
}

void FieldSpec::validate() const
{
  if (!(depth >= 0.0 && depth < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "modulation depth must lie in [0, 1)");
  }
  if (!(hole_floor >= 0.0 && hole_floor <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "hole floor must lie in [0, 1]");
  }
  if (hole_radius_mm < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "hole radius must be >= 0");
  }
  if (hole_radius_mm > 0.0) {
    // The hole covers the grid iff every corner voxel lies within the radius.
    bool covered = true;
    for (int c = 0; c < 8 && covered; c++) {
      double const ci = (c & 1) ? static_cast<double>(grid.nx - 1) : 0.0;
      double const cj = (c & 2) ? static_cast<double>(grid.ny - 1) : 0.0;
      double const ck = (c & 4) ? static_cast<double>(grid.nz - 1) : 0.0;
      double const rx = (ci - hole_center_voxel[0]) * grid.dx;
      double const ry = (cj - hole_center_voxel[1]) * grid.dy;
      double const rz = (ck - hole_center_voxel[2]) * grid.dz;
      covered = std::sqrt(rx * rx + ry * ry + rz * rz) < hole_radius_mm;
    }
    if (covered) {
      throw Error(ErrorKind::InvalidArgument, "coverage hole covers the entire grid");
    }
  }
}

FieldSpec default_field_spec(const Grid &g)
{
  FieldSpec s;
  s.grid = g;
  auto const lobe = default_lobe_center_mm(g);
  // Snapped to a voxel centre so the deepest point of the hole is sampled.
  s.hole_center_voxel = {std::round(0.5 * static_cast<double>(g.nx - 1) + lobe[0] / g.dx),
                         std::round(0.5 * static_cast<double>(g.ny - 1) + lobe[1] / g.dy),
                         std::round(0.5 * static_cast<double>(g.nz - 1) + lobe[2] / g.dz)};
  double const hy = 0.5 * static_cast<double>(g.ny) * g.dy;
  s.hole_radius_mm = 0.30 * hy;
  return s;
}

const ComplexVolume &FieldSet::field(RfMode m) const
{
  switch (m) {
  case RfMode::Mode1: return h1;
  case RfMode::Mode2: return h2;
  case RfMode::CP: return cp;
  }
  return cp;
}

Mask FieldSet::hole() const
{
  Mask m(envelope.grid());
  for (Index n = 0; n < envelope.size(); n++) {
    m.set(n, envelope[n] < 1.0);
  }
  return m;
}

double FieldSet::reference_amplitude() const
{
  double sum = 0.0;
  Index count = 0;
  for (Index n = 0; n < h1.size(); n++) {
    if (envelope[n] >= 1.0) {
      sum += 0.5 * (std::abs(h1[n]) + std::abs(h2[n]));
      count++;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

FieldSet generate_mode_fields(const FieldSpec &spec)
{
  spec.validate();
  auto const &g = spec.grid;

  // Low-order phase perturbation: linear terms plus an xy cross term.
  CounterRng const rng(spec.seed);
  std::array<std::array<double, 4>, 2> pert{};
  for (std::size_t m = 0; m < 2; m++) {
    for (std::size_t t = 0; t < 4; t++) {
      pert[m][t] = spec.phase_perturbation * (2.0 * rng.uniform(4 * m + t) - 1.0);
    }
  }

  FieldSet f{ComplexVolume(g), ComplexVolume(g), ComplexVolume(g), RealVolume(g, 1.0)};
  parallel_for(g.nz, [&](Index k0, Index k1) {
    for (Index k = k0; k < k1; k++) {
      double const uz = g.normalized(Axis::Z, k);
      double const rz = (static_cast<double>(k) - spec.hole_center_voxel[2]) * g.dz;
      for (Index j = 0; j < g.ny; j++) {
        double const uy = g.normalized(Axis::Y, j);
        double const ry = (static_cast<double>(j) - spec.hole_center_voxel[1]) * g.dy;
        for (Index i = 0; i < g.nx; i++) {
          double const ux = g.normalized(Axis::X, i);
          double const rx = (static_cast<double>(i) - spec.hole_center_voxel[0]) * g.dx;

          double dip = 0.0; // 1 at hole centre, 0 at and beyond the rim
          if (spec.hole_radius_mm > 0.0) {
            double const r = std::sqrt(rx * rx + ry * ry + rz * rz);
            if (r < spec.hole_radius_mm) {
              dip = 0.5 * (1.0 + std::cos(pi * r / spec.hole_radius_mm));
            }
          }
          double const env = 1.0 - dip * (1.0 - spec.hole_floor);
          double const c = 0.5 * (std::cos(pi * uy) - std::cos(pi * ux)) * (1.0 - dip);
          double const a1 = env * (1.0 + spec.depth * c);
          double const a2 = env * (1.0 - spec.depth * c);

          auto phase = [&](const std::array<double, 3> &roll, const std::array<double, 4> &p) {
            return 0.5 * (roll[0] * ux + roll[1] * uy + roll[2] * uz) + p[0] * ux + p[1] * uy + p[2] * uz +
                   p[3] * ux * uy;
          };
          Index const n = g.index(i, j, k);
          f.h1[n] = std::polar(a1, phase(spec.phase_roll_mode1, pert[0]));
          f.h2[n] = std::polar(a2, phase(spec.phase_roll_mode2, pert[1]));
          f.cp[n] = f.h1[n] + f.h2[n];
          f.envelope[n] = env;
        }
      }
    }
  });
  return f;
}

std::pair<ComplexVolume, ComplexVolume> random_smooth_field_pair(const Grid &g, std::uint64_t seed)
{
  constexpr int kTerms = 4;
  struct Term {
    std::array<double, 3> freq;
    double offset;
    double weight;
  };
  CounterRng const rng(seed);
  std::uint64_t counter = 0;
  auto draw = [&] { return rng.uniform(counter++); };
  auto make_terms = [&](double total_weight) {
    std::array<Term, kTerms> terms{};
    for (auto &t : terms) {
      for (auto &f : t.freq) {
        f = std::floor(3.0 * draw()) * (draw() < 0.5 ? -1.0 : 1.0); // {-2..2}
      }
      t.offset = 2.0 * pi * draw();
      t.weight = total_weight * draw() / kTerms;
    }
    return terms;
  };
  auto eval = [](const std::array<Term, kTerms> &terms, double ux, double uy, double uz) {
    double s = 0.0;
    for (auto const &t : terms) {
      s += t.weight * std::cos(0.5 * pi * (t.freq[0] * ux + t.freq[1] * uy + t.freq[2] * uz) + t.offset);
    }
    return s;
  };

  std::array<std::array<Term, kTerms>, 2> amp{make_terms(0.6), make_terms(0.6)};
  std::array<std::array<Term, kTerms>, 2> phs{make_terms(3.0), make_terms(3.0)};
  std::array<double, 2> scale{0.5 + draw(), 0.5 + draw()};

  ComplexVolume h1(g), h2(g);
  parallel_for(g.nz, [&](Index k0, Index k1) {
    for (Index k = k0; k < k1; k++) {
      double const uz = g.normalized(Axis::Z, k);
      for (Index j = 0; j < g.ny; j++) {
        double const uy = g.normalized(Axis::Y, j);
        for (Index i = 0; i < g.nx; i++) {
          double const ux = g.normalized(Axis::X, i);
          Index const n = g.index(i, j, k);
          h1[n] = std::polar(scale[0] * (1.0 + eval(amp[0], ux, uy, uz)), eval(phs[0], ux, uy, uz));
          h2[n] = std::polar(scale[1] * (1.0 + eval(amp[1], ux, uy, uz)), eval(phs[1], ux, uy, uz));
        }
      }
    }
  });
  return {std::move(h1), std::move(h2)};
}

} // namespace boga
