#include "boga/combine.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "boga/fields.hpp"
#include "boga/parallel.hpp"
#include "boga/rng.hpp"

namespace boga {

const char *to_string(Convention c)
{
  switch (c) {
  case Convention::Verbatim: return "verbatim";
  case Convention::Ratio: return "ratio";
  }
  return "?";
}

Convention parse_convention(const std::string &s)
{
  if (s == "verbatim") return Convention::Verbatim;
  if (s == "ratio") return Convention::Ratio;
  throw Error(ErrorKind::InvalidArgument, "unknown convention '" + s + "'");
}

const char *to_string(ContrastKind k)
{
  switch (k) {
  case ContrastKind::T1: return "T1";
  case ContrastKind::T2: return "T2";
  case ContrastKind::PD: return "PD";
  }
  return "?";
}

ContrastKind parse_contrast(const std::string &s)
{
  if (s == "T1" || s == "t1") return ContrastKind::T1;
  if (s == "T2" || s == "t2") return ContrastKind::T2;
  if (s == "PD" || s == "pd") return ContrastKind::PD;
  throw Error(ErrorKind::InvalidArgument, "unknown contrast '" + s + "'");
}

VirtualChannelPair derive_virtual_channels(const ComplexVolume &s3pre, const ComplexVolume &s4pre)
{
  require_same_grid(s3pre.grid(), s4pre.grid(), "virtual channels");
  VirtualChannelPair vc{ComplexVolume(s3pre.grid()), ComplexVolume(s3pre.grid())};
  for (Index n = 0; n < s3pre.size(); n++) {
    vc.s3[n] = 0.5 * (-s3pre[n] + s4pre[n]);
    vc.s4[n] = 0.5 * (s3pre[n] + s4pre[n]);
  }
  return vc;
}

ComplexVolume average_volumes(const ComplexVolume &a, const ComplexVolume &b)
{
  require_same_grid(a.grid(), b.grid(), "average");
  ComplexVolume out(a.grid());
  for (Index n = 0; n < a.size(); n++) {
    out[n] = 0.5 * (a[n] + b[n]);
  }
  return out;
}

ComplexVolume boga_combine(const ComplexVolume &s1, const ComplexVolume &s2, const VirtualChannelPair &vc,
                           Convention convention)
{
  auto const &g = s1.grid();
  require_same_grid(g, s2.grid(), "combine S2");
  require_same_grid(g, vc.s3.grid(), "combine S3");
  require_same_grid(g, vc.s4.grid(), "combine S4");

  std::vector<double> den(static_cast<std::size_t>(g.size()));
  std::vector<double> nonzero;
  nonzero.reserve(den.size());
  for (Index n = 0; n < g.size(); n++) {
    double const d = std::norm(vc.s3[n]) + std::norm(vc.s4[n]);
    den[static_cast<std::size_t>(n)] = d;
    if (d > 0.0) {
      nonzero.push_back(d);
    }
  }
  if (nonzero.empty()) {
    throw Error(ErrorKind::ZeroDenominator, "|S3|^2 + |S4|^2 vanishes everywhere");
  }
  auto const mid = nonzero.begin() + static_cast<std::ptrdiff_t>(nonzero.size() / 2);
  std::nth_element(nonzero.begin(), mid, nonzero.end());
  double const floor = kDenominatorFloor * *mid;

  ComplexVolume out(g);
  std::vector<std::uint8_t> valid(den.size(), 1);
  bool any_invalid = false;
  for (Index n = 0; n < g.size(); n++) {
    double const d = den[static_cast<std::size_t>(n)];
    if (!(d > floor)) {
      valid[static_cast<std::size_t>(n)] = 0;
      any_invalid = true;
      continue;
    }
    Complex const S1 = s1[n], S2 = s2[n], S3 = vc.s3[n], S4 = vc.s4[n];
    if (convention == Convention::Verbatim) {
      Complex const c1 = std::conj(S3) * S1 + std::conj(S4) * std::conj(S2);
      Complex const c2 = std::conj(S4) * S1 - std::conj(S3) * std::conj(S2);
      Complex const d1 = std::conj(S3) * S1 - std::conj(S4) * std::conj(S2);
      Complex const d2 = std::conj(S4) * S1 + std::conj(S3) * std::conj(S2);
      out[n] = 0.25 * (c1 + d1 + c2 + d2 + std::conj(c1 - d1 + c2 - d2)) / d;
    } else {
      out[n] = (std::conj(S4) * (S1 + S2) - std::conj(S3) * (S1 - S2)) / (2.0 * d);
    }
  }
  if (any_invalid) {
    out.set_validity(std::move(valid));
  }
  return out;
}

Reconstruction reconstruct_contrast(const AcquisitionSet &acq, ContrastKind kind, Convention convention)
{
  acq.validate();
  auto get = [&](RfMode m, SpId sp) -> const ComplexVolume & { return acq.get({m, sp}); };

  SpId first = SpId::SP2;
  switch (kind) {
  case ContrastKind::T1: first = SpId::SP2; break;
  case ContrastKind::T2: first = SpId::SP3; break;
  case ContrastKind::PD: first = SpId::SP2; break;
  }
  ComplexVolume const &s1 = get(RfMode::Mode1, first);
  ComplexVolume const &s2 = get(RfMode::Mode2, first);

  VirtualChannelPair vc;
  if (kind == ContrastKind::PD) {
    vc = derive_virtual_channels(average_volumes(get(RfMode::Mode1, SpId::SP1), get(RfMode::Mode1, SpId::SP3)),
                                 average_volumes(get(RfMode::Mode2, SpId::SP1), get(RfMode::Mode2, SpId::SP3)));
  } else {
    SpId const second = kind == ContrastKind::T1 ? SpId::SP1 : SpId::SP2;
    vc = derive_virtual_channels(get(RfMode::Mode1, second), get(RfMode::Mode2, second));
  }
  auto image = boga_combine(s1, s2, vc, convention);
  return Reconstruction{kind, convention, acq.tse_factor(), s1, s2, std::move(vc), std::move(image)};
}

Convention AuditReport::recommended() const
{
  if (ratio.passed) {
    return Convention::Ratio;
  }
  if (verbatim.passed) {
    return Convention::Verbatim;
  }
  throw Error(ErrorKind::ContractViolation, "no combination convention cancels the fields");
}

nlohmann::json AuditReport::to_json() const
{
  auto residual = [](const ConventionResidual &r) {
    return nlohmann::json{{"convention", to_string(r.convention)},
                          {"max_residual", r.max_residual},
                          {"mean_residual", r.mean_residual},
                          {"mean_ratio_re", r.mean_ratio.real()},
                          {"mean_ratio_im", r.mean_ratio.imag()},
                          {"magnitude_cov", r.magnitude_cov},
                          {"invalid_voxels", r.invalid_voxels},
                          {"passed", r.passed}};
  };
  nlohmann::json j{{"grid", {grid.nx, grid.ny, grid.nz}},
                   {"trials", trials},
                   {"seed", seed},
                   {"a1", {a1.real(), a1.imag()}},
                   {"a2", {a2.real(), a2.imag()}},
                   {"threshold", threshold},
                   {"conventions", {residual(verbatim), residual(ratio)}}};
  j["recommended"] = any_passed() ? nlohmann::json(to_string(recommended())) : nlohmann::json(nullptr);
  return j;
}

AuditReport audit_conventions(const Grid &grid, int trials, std::uint64_t seed, Complex a1, Complex a2,
                              double threshold)
{
  if (trials < 1) {
    throw Error(ErrorKind::InvalidArgument, "audit needs at least one trial");
  }
  AuditReport rep;
  rep.grid = grid;
  rep.trials = trials;
  rep.seed = seed;
  rep.a1 = a1;
  rep.a2 = a2;
  rep.threshold = threshold;
  Complex const expect = a1 / a2;

  struct Acc {
    double max = 0.0, sum = 0.0, msum = 0.0, msq = 0.0;
    Complex ratio_sum{0.0, 0.0};
    Index count = 0, invalid = 0;
  };
  Acc acc[2];
  Convention const conv[2] = {Convention::Verbatim, Convention::Ratio};

  for (int t = 0; t < trials; t++) {
    auto const [h1, h2] = random_smooth_field_pair(grid, combine_seed(seed, static_cast<std::uint64_t>(t)));
    ComplexVolume s1(grid), s2(grid), s3pre(grid), s4pre(grid);
    for (Index n = 0; n < grid.size(); n++) {
      s1[n] = a1 * h1[n];
      s2[n] = a1 * h2[n];
      s3pre[n] = a2 * h1[n];
      s4pre[n] = a2 * h2[n];
    }
    auto const vc = derive_virtual_channels(s3pre, s4pre);
    for (int c = 0; c < 2; c++) {
      auto const img = boga_combine(s1, s2, vc, conv[c]);
      auto &a = acc[c];
      for (Index n = 0; n < img.size(); n++) {
        if (!img.valid(n)) {
          a.invalid++;
          continue;
        }
        double const r = std::abs(img[n] - expect);
        a.max = std::max(a.max, r);
        a.sum += r;
        a.ratio_sum += img[n] / expect;
        double const m = std::abs(img[n]);
        a.msum += m;
        a.msq += m * m;
        a.count++;
      }
    }
  }
  for (int c = 0; c < 2; c++) {
    auto const &a = acc[c];
    ConventionResidual r;
    r.convention = conv[c];
    r.invalid_voxels = a.invalid;
    if (a.count > 0) {
      double const cnt = static_cast<double>(a.count);
      r.max_residual = a.max;
      r.mean_residual = a.sum / cnt;
      r.mean_ratio = a.ratio_sum / cnt;
      double const mean = a.msum / cnt;
      double const var = std::max(0.0, a.msq / cnt - mean * mean);
      r.magnitude_cov = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
    }
    r.passed = a.count > 0 && r.max_residual < threshold;
    (c == 0 ? rep.verbatim : rep.ratio) = r;
  }
  return rep;
}

} // namespace boga
