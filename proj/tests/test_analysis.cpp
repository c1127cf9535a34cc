#include <cmath>
#include <numbers>

#include <doctest.h>

#include "boga/analysis.hpp"
#include "boga/parallel.hpp"
#include "boga/rng.hpp"
#include "helpers.hpp"

using namespace boga;
using testing::error_kind;

namespace {

/// Interior mean of the estimator on constant 10 + N(0, 1), measured offline
/// over eight independent 64^3 draws (spread between draws 0.015).
constexpr double kSnrOracle = 10.12;

RealVolume noisy_constant(const Grid &g, double level, double sigma, std::uint64_t seed)
{
  RealVolume v(g);
  CounterRng const rng(seed);
  for (Index n = 0; n < g.size(); n++) {
    v[n] = level + sigma * rng.normal_pair(static_cast<std::uint64_t>(n)).first;
  }
  return v;
}

double interior_mean(const RealVolume &m, Index margin)
{
  auto const &g = m.grid();
  double s = 0.0;
  Index c = 0;
  for (Index k = margin; k < g.nz - margin; k++)
    for (Index j = margin; j < g.ny - margin; j++)
      for (Index i = margin; i < g.nx - margin; i++) {
        Index const n = g.index(i, j, k);
        if (m.valid(n)) {
          s += m[n];
          c++;
        }
      }
  return s / static_cast<double>(c);
}

RealVolume from_values(std::initializer_list<double> vals)
{
  RealVolume v(Grid(static_cast<Index>(vals.size()), 1, 1));
  Index n = 0;
  for (double x : vals) {
    v[n++] = x;
  }
  return v;
}

} // namespace

TEST_CASE("SNR of a noisy constant matches the Monte-Carlo value")
{
  auto const v = noisy_constant(Grid(64, 64, 64), 10.0, 1.0, 2024);
  auto const m = snr_map(v);
  double const mean = interior_mean(m.snr, 4);
  CHECK(std::abs(mean - kSnrOracle) < 0.15 * kSnrOracle);
  CHECK(mean == doctest::Approx(kSnrOracle).epsilon(0.01));
}

TEST_CASE("noiseless constant has no SNR")
{
  auto const m = snr_map(RealVolume(Grid(8, 8, 8), 10.0));
  CHECK(m.snr.valid_count() == 0);
  CHECK(error_kind([] { snr_map(RealVolume(Grid(4, 8, 8), 1.0)); }) == ErrorKind::GridTooSmall);
}

TEST_CASE("SNR map is scale invariant")
{
  auto const v = noisy_constant(Grid(20, 18, 16), 5.0, 0.5, 3);
  auto const base = snr_map(v);
  for (double c : {0.125, 4.0, 3.7, 1e-3}) {
    RealVolume s(v.grid());
    for (Index n = 0; n < v.size(); n++) {
      s[n] = c * v[n];
    }
    auto const m = snr_map(s);
    double worst = 0.0;
    for (Index n = 0; n < v.size(); n++) {
      REQUIRE(m.snr.valid(n) == base.snr.valid(n));
      worst = std::max(worst, std::abs(m.snr[n] - base.snr[n]) / std::abs(base.snr[n]));
    }
    CAPTURE(c);
    if (std::exp2(std::round(std::log2(c))) == c) {
      CHECK(worst == 0.0);
    } else {
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("SNR map is translation equivariant in the interior")
{
  Grid const g(30, 24, 20);
  auto const v = noisy_constant(g, 3.0, 1.0, 8);
  Index const sx = 3, sy = 2, sz = 1;
  RealVolume shifted(g);
  for (Index k = 0; k < g.nz; k++)
    for (Index j = 0; j < g.ny; j++)
      for (Index i = 0; i < g.nx; i++) {
        shifted(i, j, k) = v((i - sx + g.nx) % g.nx, (j - sy + g.ny) % g.ny, (k - sz + g.nz) % g.nz);
      }
  auto const a = snr_map(v), b = snr_map(shifted);
  Index const m = 4; // both kernels fully inside
  for (Index k = m; k < g.nz - m - sz; k++)
    for (Index j = m; j < g.ny - m - sy; j++)
      for (Index i = m; i < g.nx - m - sx; i++) {
        REQUIRE(b.snr(i + sx, j + sy, k + sz) == doctest::Approx(a.snr(i, j, k)).epsilon(1e-12));
      }
}

TEST_CASE("SNR map skips invalid voxels and is thread independent")
{
  auto v = noisy_constant(Grid(12, 12, 12), 4.0, 1.0, 5);
  v.set_valid(100, false);
  set_thread_count(1);
  auto const a = snr_map(v);
  set_thread_count(3);
  auto const b = snr_map(v);
  set_thread_count(1);
  CHECK(bit_identical(a.snr, b.snr));
  CHECK_FALSE(a.snr.valid(100));
}

TEST_CASE("CP SNR scaling")
{
  RealVolume v(Grid(3, 1, 1));
  v[0] = 10.0;
  v[1] = 0.0;
  v[2] = 7.0;
  v.set_valid(2, false);
  SNRMap const m{v, "cp", true, false};
  auto const s = scale_cp_snr(m);
  CHECK(std::abs(s.snr[0] - 14.1421356) < 1e-7);
  CHECK(s.snr[0] == 10.0 * std::numbers::sqrt2);
  CHECK(s.snr[1] == 0.0);
  CHECK_FALSE(s.snr.valid(2));
  CHECK(s.scaled);
  CHECK(error_kind([&] { scale_cp_snr(s); }) == ErrorKind::AlreadyScaled);
  CHECK(error_kind([&] { scale_cp_snr(SNRMap{v, "boga", false, false}); }) == ErrorKind::NotCpDerived);
}

TEST_CASE("normalized profiles")
{
  auto const p = normalized_profile(from_values({1.0, 2.0, 3.0}), LineSpec{Axis::X, 0, 0});
  CHECK(p.normalized == std::vector<double>{0.5, 1.0, 1.5});
  CHECK(p.max_deviation() == 0.5);

  auto const c = normalized_profile(from_values({4.2, 4.2, 4.2, 4.2}), LineSpec{Axis::X, 0, 0});
  for (double x : c.normalized) {
    CHECK(x == 1.0);
  }
  CHECK(error_kind([] { normalized_profile(from_values({0.0, 0.0}), LineSpec{Axis::X, 0, 0}); }) ==
        ErrorKind::ZeroMeanProfile);

  auto v = from_values({1.0, 100.0, 3.0, 5.0});
  v.set_valid(1, false);
  auto const seg = normalized_profile(v, LineSpec{Axis::X, 0, 0, 0, 3});
  CHECK(seg.raw.size() == 3);
  CHECK(seg.normalized[0] == 0.5);
  CHECK(seg.normalized[1] == 0.0);
  CHECK_FALSE(seg.valid[1]);
}

TEST_CASE("profile means are one to 1e-12")
{
  Grid const g(50, 40, 30);
  auto const v = noisy_constant(g, 3.0, 2.0, 17);
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    auto const p = normalized_profile(v, LineSpec{a, 7, 9});
    double s = 0.0;
    for (double x : p.normalized) {
      s += x;
    }
    CHECK(std::abs(s / static_cast<double>(p.normalized.size()) - 1.0) < 1e-12);
  }
}

TEST_CASE("display mask thresholds each slice")
{
  RealVolume v(Grid(3, 1, 2));
  v[0] = 1000.0;
  v[1] = 0.1;
  v[2] = 0.3;
  auto const m = display_mask(v);
  CHECK(m[0]);
  CHECK_FALSE(m[1]);
  CHECK(m[2]);
  // second slice is all zero
  CHECK_FALSE(m[3]);
  CHECK_FALSE(m[4]);
  CHECK_FALSE(m[5]);
  CHECK(display_mask(v, 0.02).count() == 1);
}

TEST_CASE("region statistics")
{
  Grid const g(2, 1, 1);
  RealVolume v(g);
  v[0] = 3.0;
  v[1] = 5.0;
  Mask const all(g, true);
  auto const s = region_stats(v, all, "r");
  CHECK(s.mean == 4.0);
  CHECK(s.std == 1.0);
  CHECK(s.count == 2);
  CHECK(coefficient_of_variation(v, all) == 0.25);

  RealVolume const five(g, 5.0);
  CHECK(region_stats(five, all).std == 0.0);
  CHECK(coefficient_of_variation(five, all) == 0.0);

  CHECK(RegionStats{"x", 36.43, 28.9, 1}.formatted() == "36.43±28.9");
  CHECK(error_kind([&] { region_stats(v, Mask(g)); }) == ErrorKind::EmptyRegion);
  CHECK(error_kind([&] { coefficient_of_variation(RealVolume(g, -1.0), all); }) == ErrorKind::NonPositiveMean);
}

TEST_CASE("coefficient of variation is scale invariant")
{
  auto const v = noisy_constant(Grid(10, 10, 10), 6.0, 1.0, 4);
  Mask const all(v.grid(), true);
  RealVolume s(v.grid());
  for (Index n = 0; n < v.size(); n++) {
    s[n] = 2.5 * v[n];
  }
  CHECK(coefficient_of_variation(s, all) == doctest::Approx(coefficient_of_variation(v, all)).epsilon(1e-13));
}

TEST_CASE("display mask does not enter region statistics")
{
  auto const v = noisy_constant(Grid(16, 16, 16), 2.0, 1.0, 6);
  Mask const all(v.grid(), true);
  auto const before = region_stats(v, all);
  auto const mask = display_mask(v, 0.9);
  CHECK(mask.count() < v.size());
  auto const after = region_stats(v, all);
  CHECK(before.mean == after.mean);
  CHECK(before.std == after.std);
  CHECK(before.count == after.count);
}

TEST_CASE("stable sum")
{
  std::vector<double> const vals{1.0, 1e100, 1.0, -1e100};
  CHECK(stable_sum(vals) == 2.0);
}

TEST_CASE("csv writers")
{
  testing::TempDir dir("csv");
  auto const p = normalized_profile(from_values({1.0, 3.0}), LineSpec{Axis::X, 0, 0});
  write_profile_csv(p, dir / "p.csv");
  CHECK(testing::read_file(dir / "p.csv") == "axis,index,raw,normalized\nx,0,1,0.5\nx,1,3,1.5\n");
  write_stats_csv({{"img", RegionStats{"wm", 2.0, 0.5, 3}}}, dir / "s.csv");
  CHECK(testing::read_file(dir / "s.csv") == "image,region,mean,std,count\nimg,wm,2,0.5,3\n");
}
