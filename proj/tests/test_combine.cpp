#include <cmath>

#include <doctest.h>

#include "boga/combine.hpp"
#include "boga/fields.hpp"
#include "boga/rng.hpp"
#include "helpers.hpp"

using namespace boga;
using testing::error_kind;

namespace {

ComplexVolume scaled(const ComplexVolume &h, Complex a)
{
  ComplexVolume out(h.grid());
  for (Index n = 0; n < h.size(); n++) {
    out[n] = a * h[n];
  }
  return out;
}

ComplexVolume combine_model(const ComplexVolume &h1, const ComplexVolume &h2, Complex a1, Complex a2,
                            Convention c = Convention::Ratio)
{
  return boga_combine(scaled(h1, a1), scaled(h2, a1), derive_virtual_channels(scaled(h1, a2), scaled(h2, a2)), c);
}

double max_error(const ComplexVolume &img, Complex expect)
{
  double m = 0.0;
  for (Index n = 0; n < img.size(); n++) {
    if (img.valid(n)) {
      m = std::max(m, std::abs(img[n] - expect));
    }
  }
  return m;
}

/// Acquisition set whose entry (mode, sp) is w(sp) * h_mode.
AcquisitionSet model_set(const ComplexVolume &h1, const ComplexVolume &h2, const double (&w)[3], int factor = 50)
{
  AcquisitionSet set(factor);
  for (int s = 0; s < 3; s++) {
    auto const sp = static_cast<SpId>(s);
    set.insert({RfMode::Mode1, sp}, scaled(h1, w[s]), factor);
    set.insert({RfMode::Mode2, sp}, scaled(h2, w[s]), factor);
    ComplexVolume cp(h1.grid());
    for (Index n = 0; n < cp.size(); n++) {
      cp[n] = w[s] * (h1[n] + h2[n]);
    }
    set.insert({RfMode::CP, sp}, cp, factor);
  }
  return set;
}

} // namespace

TEST_CASE("virtual channels")
{
  Grid const g(1, 1, 1);
  auto vc = derive_virtual_channels(ComplexVolume(g, Complex(2.0, 2.0)), ComplexVolume(g, Complex(-2.0, 2.0)));
  CHECK(vc.s3[0] == Complex(-2.0, 0.0));
  CHECK(vc.s4[0] == Complex(0.0, 2.0));

  Complex const z(0.7, -1.3);
  vc = derive_virtual_channels(ComplexVolume(g, z), ComplexVolume(g, z));
  CHECK(vc.s3[0] == Complex(0.0, 0.0));
  CHECK(vc.s4[0] == z);

  Grid const big(6, 5, 4);
  auto const [h1, h2] = random_smooth_field_pair(big, 1);
  Complex const a2(2.0, 0.5);
  vc = derive_virtual_channels(scaled(h1, a2), scaled(h2, a2));
  for (Index n = 0; n < big.size(); n++) {
    Complex const g1 = 0.5 * (h1[n] - h2[n]), g2 = 0.5 * (h1[n] + h2[n]);
    REQUIRE(std::abs(vc.s3[n] + a2 * g1) < 1e-14);
    REQUIRE(std::abs(vc.s4[n] - a2 * g2) < 1e-14);
  }
  CHECK(error_kind([&] { derive_virtual_channels(ComplexVolume(g), ComplexVolume(big)); }) == ErrorKind::DimMismatch);
}

TEST_CASE("averaging")
{
  Grid const g(2, 1, 1);
  ComplexVolume z(g, Complex(3.0, -1.0));
  CHECK(bit_identical(average_volumes(z, z), z));
  auto const half = average_volumes(ComplexVolume(g), z);
  CHECK(half[1] == Complex(1.5, -0.5));
  CHECK(error_kind([&] { average_volumes(z, ComplexVolume(Grid(1, 2, 1))); }) == ErrorKind::DimMismatch);
}

TEST_CASE("ratio convention cancels random fields exactly")
{
  Grid const g(20, 18, 16);
  for (std::uint64_t t = 0; t < 10; t++) {
    auto const [h1, h2] = random_smooth_field_pair(g, combine_seed(99, t));
    auto const img = combine_model(h1, h2, 3.0, 2.0);
    CHECK(img.valid_count() == g.size());
    CHECK(max_error(img, 1.5) < 1e-10);
    CHECK(max_error(combine_model(h1, h2, 2.0, 2.0), 1.0) < 1e-10);
    // complex weights
    Complex const a1(1.0, 2.0), a2(-0.5, 0.25);
    CHECK(max_error(combine_model(h1, h2, a1, a2), a1 / a2) < 1e-10);
  }
}

TEST_CASE("ratio convention follows spatially varying weights")
{
  Grid const g(12, 10, 8);
  auto const [h1, h2] = random_smooth_field_pair(g, 4);
  RealVolume a1(g), a2(g);
  for (Index n = 0; n < g.size(); n++) {
    a1[n] = 1.0 + 0.1 * static_cast<double>(n % 13);
    a2[n] = 0.5 + 0.05 * static_cast<double>(n % 5);
  }
  ComplexVolume s1(g), s2(g), p3(g), p4(g);
  for (Index n = 0; n < g.size(); n++) {
    s1[n] = a1[n] * h1[n];
    s2[n] = a1[n] * h2[n];
    p3[n] = a2[n] * h1[n];
    p4[n] = a2[n] * h2[n];
  }
  auto const img = boga_combine(s1, s2, derive_virtual_channels(p3, p4), Convention::Ratio);
  for (Index n = 0; n < g.size(); n++) {
    REQUIRE(std::abs(img[n] - a1[n] / a2[n]) < 1e-12);
  }
}

TEST_CASE("verbatim convention does not cancel the fields")
{
  Grid const g(16, 16, 16);
  auto const [h1, h2] = random_smooth_field_pair(g, 8);
  auto const img = combine_model(h1, h2, 3.0, 2.0, Convention::Verbatim);
  CHECK(max_error(img, 1.5) > 1e-3);
  // Term-by-term evaluation of the C/D intermediates.
  auto const vc = derive_virtual_channels(scaled(h1, 2.0), scaled(h2, 2.0));
  auto const s1 = scaled(h1, 3.0), s2 = scaled(h2, 3.0);
  for (Index n = 0; n < g.size(); n += 37) {
    Complex const S1 = s1[n], S2 = s2[n], S3 = vc.s3[n], S4 = vc.s4[n];
    double const den = std::norm(S3) + std::norm(S4);
    Complex const c1 = std::conj(S3) * S1 + std::conj(S4) * std::conj(S2);
    Complex const c2 = std::conj(S4) * S1 - std::conj(S3) * std::conj(S2);
    Complex const d1 = std::conj(S3) * S1 - std::conj(S4) * std::conj(S2);
    Complex const d2 = std::conj(S4) * S1 + std::conj(S3) * std::conj(S2);
    Complex const expect = 0.25 * (c1 + d1 + c2 + d2 + std::conj(c1 - d1 + c2 - d2)) / den;
    REQUIRE(std::abs(img[n] - expect) < 1e-12);
  }
}

TEST_CASE("vanishing virtual channels are flagged invalid")
{
  Grid const g(4, 1, 1);
  ComplexVolume s(g, Complex(1.0, 0.0)), p3(g, Complex(1.0, 1.0)), p4(g, Complex(2.0, 0.0));
  p3[2] = 0.0;
  p4[2] = 0.0;
  auto const img = boga_combine(s, s, derive_virtual_channels(p3, p4), Convention::Ratio);
  CHECK_FALSE(img.valid(2));
  CHECK(img.valid(0));
  CHECK(img.valid_count() == 3);
  CHECK(std::isfinite(img[2].real()));

  ComplexVolume const zero(g);
  CHECK(error_kind([&] { boga_combine(s, s, derive_virtual_channels(zero, zero), Convention::Ratio); }) ==
        ErrorKind::ZeroDenominator);
}

TEST_CASE("global phase and mode swap")
{
  Grid const g(10, 9, 8);
  auto const [h1, h2] = random_smooth_field_pair(g, 6);
  Complex const a1(1.2, 0.3), a2(0.8, -0.2);
  auto const base = combine_model(h1, h2, a1, a2);
  auto const phase = std::polar(1.0, 1.1);
  auto const rotated = combine_model(scaled(h1, phase), scaled(h2, phase), a1, a2);
  auto const swapped = combine_model(h2, h1, a1, a2);
  for (Index n = 0; n < g.size(); n++) {
    REQUIRE(std::abs(rotated[n] - base[n]) < 1e-12);
    REQUIRE(std::abs(std::abs(swapped[n]) - std::abs(base[n])) < 1e-12);
  }
}

TEST_CASE("contrast kinds use the right scan-parameter sets")
{
  Grid const g(6, 6, 6);
  auto const [h1, h2] = random_smooth_field_pair(g, 2);
  double const w[3] = {0.3, 0.5, 0.2};
  auto const set = model_set(h1, h2, w);

  auto const t1 = reconstruct_contrast(set, ContrastKind::T1, Convention::Ratio);
  CHECK(bit_identical(t1.s1, set.get({RfMode::Mode1, SpId::SP2})));
  CHECK(bit_identical(t1.s2, set.get({RfMode::Mode2, SpId::SP2})));
  auto const vc1 = derive_virtual_channels(set.get({RfMode::Mode1, SpId::SP1}), set.get({RfMode::Mode2, SpId::SP1}));
  CHECK(bit_identical(t1.vc.s3, vc1.s3));
  CHECK(max_error(t1.image, w[1] / w[0]) < 1e-12);

  auto const t2 = reconstruct_contrast(set, ContrastKind::T2, Convention::Ratio);
  CHECK(bit_identical(t2.s1, set.get({RfMode::Mode1, SpId::SP3})));
  CHECK(max_error(t2.image, w[2] / w[1]) < 1e-12);

  auto const pd = reconstruct_contrast(set, ContrastKind::PD, Convention::Ratio);
  CHECK(bit_identical(pd.s1, set.get({RfMode::Mode1, SpId::SP2})));
  auto const avg1 = average_volumes(set.get({RfMode::Mode1, SpId::SP1}), set.get({RfMode::Mode1, SpId::SP3}));
  auto const avg2 = average_volumes(set.get({RfMode::Mode2, SpId::SP1}), set.get({RfMode::Mode2, SpId::SP3}));
  CHECK(bit_identical(pd.vc.s4, derive_virtual_channels(avg1, avg2).s4));
  CHECK(max_error(pd.image, w[1] / (0.5 * (w[0] + w[2]))) < 1e-12);
  CHECK(pd.tse_factor == 50);
  CHECK(pd.kind == ContrastKind::PD);
}

TEST_CASE("reconstruction never reads the CP images")
{
  Grid const g(6, 5, 4);
  auto const [h1, h2] = random_smooth_field_pair(g, 12);
  double const w[3] = {0.4, 0.6, 0.3};
  auto const set = model_set(h1, h2, w);
  auto tampered = set;
  for (int s = 0; s < 3; s++) {
    tampered.insert({RfMode::CP, static_cast<SpId>(s)}, ComplexVolume(g, Complex(1e6, -1e6)), 50);
  }
  for (auto kind : {ContrastKind::T1, ContrastKind::T2, ContrastKind::PD}) {
    auto const a = reconstruct_contrast(set, kind, Convention::Ratio);
    CHECK(bit_identical(a.image, reconstruct_contrast(tampered, kind, Convention::Ratio).image));
    CHECK(bit_identical(a.image, reconstruct_contrast(set.without_cp(), kind, Convention::Ratio).image));
  }
}

TEST_CASE("mixed and missing acquisitions")
{
  Grid const g(3, 3, 3);
  auto const [h1, h2] = random_smooth_field_pair(g, 1);
  double const w[3] = {1.0, 1.0, 1.0};
  auto set = model_set(h1, h2, w);
  set.insert({RfMode::Mode1, SpId::SP1}, h1, 100);
  CHECK(error_kind([&] { reconstruct_contrast(set, ContrastKind::T2, Convention::Ratio); }) ==
        ErrorKind::MixedTseFactor);

  AcquisitionSet partial(50);
  partial.insert({RfMode::Mode1, SpId::SP2}, h1, 50);
  partial.insert({RfMode::Mode2, SpId::SP2}, h2, 50);
  CHECK(error_kind([&] { reconstruct_contrast(partial, ContrastKind::T1, Convention::Ratio); }) ==
        ErrorKind::MissingAcquisition);
}

TEST_CASE("audit prefers the convention that passes")
{
  auto const rep = audit_conventions(Grid(16, 16, 16), 4, 3);
  CHECK(rep.ratio.passed);
  CHECK(rep.ratio.max_residual < 1e-9);
  CHECK_FALSE(rep.verbatim.passed);
  CHECK(rep.recommended() == Convention::Ratio);
  auto const j = rep.to_json();
  CHECK(j.at("recommended") == "ratio");
  CHECK(j.at("conventions").size() == 2);

  AuditReport none = rep;
  none.ratio.passed = false;
  CHECK(error_kind([&] { none.recommended(); }) == ErrorKind::ContractViolation);
  CHECK(error_kind([] { audit_conventions(Grid(4, 4, 4), 0, 1); }) == ErrorKind::InvalidArgument);
  CHECK(parse_convention("verbatim") == Convention::Verbatim);
  CHECK(error_kind([] { parse_convention("other"); }) == ErrorKind::InvalidArgument);
}
