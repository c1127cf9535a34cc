#include "boga/tse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "boga/parallel.hpp"
#include "boga/rng.hpp"

namespace boga {

const char *to_string(SpId id)
{
  switch (id) {
  case SpId::SP1: return "sp1";
  case SpId::SP2: return "sp2";
  case SpId::SP3: return "sp3";
  }
  return "?";
}

SpId parse_sp_id(const std::string &s)
{
  if (s == "sp1" || s == "SP1") return SpId::SP1;
  if (s == "sp2" || s == "SP2") return SpId::SP2;
  if (s == "sp3" || s == "SP3") return SpId::SP3;
  throw Error(ErrorKind::InvalidArgument, "unknown scan-parameter id '" + s + "'");
}

const char *to_string(PeOrdering o)
{
  switch (o) {
  case PeOrdering::Auto: return "auto";
  case PeOrdering::Centric: return "centric";
  case PeOrdering::LinearShifted: return "linear-shifted";
  }
  return "?";
}

PeOrdering parse_pe_ordering(const std::string &s)
{
  if (s == "auto") return PeOrdering::Auto;
  if (s == "centric") return PeOrdering::Centric;
  if (s == "linear-shifted") return PeOrdering::LinearShifted;
  throw Error(ErrorKind::InvalidArgument, "unknown phase-encode ordering '" + s + "'");
}

const char *to_string(Fidelity f)
{
  switch (f) {
  case Fidelity::ModelExact: return "model-exact";
  case Fidelity::EchoTrain: return "echo-train";
  }
  return "?";
}

Fidelity parse_fidelity(const std::string &s)
{
  if (s == "model-exact") return Fidelity::ModelExact;
  if (s == "echo-train") return Fidelity::EchoTrain;
  throw Error(ErrorKind::InvalidArgument, "unknown fidelity '" + s + "'");
}

void ScanParams::validate() const
{
  if (!(te > 0.0 && te <= te_eff && te_eff <= tr)) {
    throw Error(ErrorKind::InvalidArgument, std::string(to_string(id)) + ": need 0 < TE <= TEeff <= TR");
  }
}

void EchoTrainConfig::validate() const
{
  if (tse_factor < 1) {
    throw Error(ErrorKind::InvalidArgument, "TSE factor must be >= 1");
  }
  if (!(echo_spacing > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "echo spacing must be > 0");
  }
  if (ky_lines < 0) {
    throw Error(ErrorKind::InvalidArgument, "ky line count must be >= 0");
  }
}

void AcquisitionConfig::validate() const
{
  if (!(noise_sigma >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "noise sigma must be >= 0");
  }
  if (!(flip_deg > 0.0 && flip_deg <= 180.0) || !(refocus_deg > 0.0 && refocus_deg <= 180.0)) {
    throw Error(ErrorKind::InvalidArgument, "flip and refocusing angles must lie in (0, 180]");
  }
}

void Protocol::validate() const
{
  train.validate();
  for (std::size_t i = 0; i < sps.size(); i++) {
    if (sps[i].id != static_cast<SpId>(i)) {
      throw Error(ErrorKind::InvalidArgument, "protocol '" + name + "' must list SP1, SP2, SP3 in order");
    }
    sps[i].validate();
    if (train.train_length() >= sps[i].tr) {
      throw Error(ErrorKind::TrainTooLong, "protocol '" + name + "': echo train longer than TR of " +
                                               to_string(sps[i].id));
    }
  }
}

Protocol preset_tse50()
{
  Protocol p;
  p.name = "tse50";
  p.train.tse_factor = 50;
  p.sps = {ScanParams{SpId::SP1, 8.0, 8.0, 1500.0}, ScanParams{SpId::SP2, 8.0, 8.0, 2750.0},
           ScanParams{SpId::SP3, 28.0, 28.0, 2750.0}};
  p.scan_time_single_mode = "18 min 48 s";
  p.scan_time_boga = "37 min 36 s";
  return p;
}

Protocol preset_tse100()
{
  Protocol p;
  p.name = "tse100";
  p.train.tse_factor = 100;
  p.sps = {ScanParams{SpId::SP1, 8.0, 8.0, 2600.0}, ScanParams{SpId::SP2, 8.0, 8.0, 3850.0},
           ScanParams{SpId::SP3, 28.0, 28.0, 3850.0}};
  p.scan_time_single_mode = "13 min 55 s";
  p.scan_time_boga = "27 min 52 s";
  return p;
}

Protocol protocol_preset(const std::string &name)
{
  if (name == "tse50") return preset_tse50();
  if (name == "tse100") return preset_tse100();
  throw Error(ErrorKind::Config, "unknown protocol preset '" + name + "'");
}

Complex contrast_weight(const TissueClass &t, const ScanParams &sp)
{
  return {t.pd * (1.0 - std::exp(-sp.tr / t.t1)) * std::exp(-sp.te_eff / t.t2), 0.0};
}

RealVolume weight_map(const Phantom &ph, const ScanParams &sp)
{
  std::vector<double> per_class(ph.tissues.size());
  for (std::size_t c = 0; c < ph.tissues.size(); c++) {
    per_class[c] = contrast_weight(ph.tissues[c], sp).real();
  }
  RealVolume w(ph.grid());
  for (Index n = 0; n < w.size(); n++) {
    w[n] = per_class[static_cast<std::size_t>(ph.labels[n])];
  }
  return w;
}

int EchoSchedule::max_echo() const
{
  return echo_of_line.empty() ? 0 : *std::max_element(echo_of_line.begin(), echo_of_line.end());
}

EchoSchedule echo_schedule(const EchoTrainConfig &et, const ScanParams &sp, Index ny)
{
  et.validate();
  Index const lines = et.ky_lines == 0 ? ny : et.ky_lines;
  if (lines > ny) {
    throw Error(ErrorKind::InvalidArgument, "ky line count exceeds grid ny");
  }
  int const F = et.tse_factor;

  // Nearest echo to the effective TE; ties go to the earlier echo.
  int lo = std::clamp(static_cast<int>(std::floor(sp.te_eff / et.echo_spacing)), 1, F);
  int hi = std::clamp(lo + 1, 1, F);
  int target = std::abs(hi * et.echo_spacing - sp.te_eff) < std::abs(lo * et.echo_spacing - sp.te_eff) ? hi : lo;

  EchoSchedule s;
  s.ordering = et.ordering;
  if (s.ordering == PeOrdering::Auto) {
    s.ordering = target == 1 ? PeOrdering::Centric : PeOrdering::LinearShifted;
  }
  if (s.ordering == PeOrdering::Centric) {
    target = 1;
  }
  s.center_echo = target;
  s.center_te = target * et.echo_spacing;
  s.te_eff_reachable = std::abs(s.center_te - sp.te_eff) < 1e-9;

  s.echo_of_line.assign(static_cast<std::size_t>(ny), 0);
  Index const center = ny / 2;
  Index const first = center - lines / 2;
  auto segment = [&](Index p) { return static_cast<int>((p * F) / lines); };

  if (s.ordering == PeOrdering::Centric) {
    std::vector<Index> order(static_cast<std::size_t>(lines));
    std::iota(order.begin(), order.end(), first);
    std::stable_sort(order.begin(), order.end(), [center](Index a, Index b) {
      Index const fa = a - center, fb = b - center;
      if (std::abs(fa) != std::abs(fb)) {
        return std::abs(fa) < std::abs(fb);
      }
      return fa > fb;
    });
    for (Index p = 0; p < lines; p++) {
      s.echo_of_line[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = 1 + segment(p);
    }
  } else {
    int const shift = (target - 1) - segment(center - first);
    for (Index p = 0; p < lines; p++) {
      int const e = ((segment(p) + shift) % F + F) % F;
      s.echo_of_line[static_cast<std::size_t>(first + p)] = 1 + e;
    }
  }
  return s;
}

ComplexVolume apply_echo_train_filter(const ComplexVolume &base, const RealVolume &t2, const EchoTrainConfig &et,
                                      const ScanParams &sp)
{
  require_same_grid(base.grid(), t2.grid(), "echo-train filter");
  auto const &g = base.grid();
  auto const sched = echo_schedule(et, sp, g.ny);
  Index const N = g.ny;

  std::vector<Complex> twiddle(static_cast<std::size_t>(N));
  for (Index m = 0; m < N; m++) {
    twiddle[static_cast<std::size_t>(m)] =
      std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(N));
  }
  std::vector<Index> acquired;
  std::vector<Index> freq; // DFT bin of each acquired line
  std::vector<int> echo;
  for (Index n = 0; n < N; n++) {
    if (int const e = sched.echo_of_line[static_cast<std::size_t>(n)]; e > 0) {
      acquired.push_back(n);
      freq.push_back(((n - N / 2) % N + N) % N);
      echo.push_back(e);
    }
  }
  std::vector<int> used(echo);
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::vector<std::size_t> echo_slot(echo.size());
  for (std::size_t l = 0; l < echo.size(); l++) {
    echo_slot[l] = static_cast<std::size_t>(std::lower_bound(used.begin(), used.end(), echo[l]) - used.begin());
  }

  ComplexVolume out(g);
  Index const columns = g.nx * g.nz;
  parallel_for(columns, [&](Index c0, Index c1) {
    std::vector<Complex> col(static_cast<std::size_t>(N));
    std::vector<Complex> kspace(acquired.size());
    std::vector<double> decay(used.size() * static_cast<std::size_t>(N));
    for (Index c = c0; c < c1; c++) {
      Index const i = c % g.nx;
      Index const k = c / g.nx;
      for (Index y = 0; y < N; y++) {
        col[static_cast<std::size_t>(y)] = base(i, y, k);
        double const T2 = t2(i, y, k);
        if (y > 0 && T2 == t2(i, y - 1, k)) {
          for (std::size_t u = 0; u < used.size(); u++) {
            decay[u * N + y] = decay[u * N + y - 1];
          }
          continue;
        }
        for (std::size_t u = 0; u < used.size(); u++) {
          decay[u * N + y] = std::exp(-used[u] * et.echo_spacing / T2);
        }
      }
      for (std::size_t l = 0; l < acquired.size(); l++) {
        Complex acc{0.0, 0.0};
        double const *d = decay.data() + echo_slot[l] * N;
        for (Index y = 0; y < N; y++) {
          acc += col[static_cast<std::size_t>(y)] * d[y] * twiddle[static_cast<std::size_t>((freq[l] * y) % N)];
        }
        kspace[l] = acc;
      }
      double const inv = 1.0 / static_cast<double>(N);
      for (Index y = 0; y < N; y++) {
        Complex acc{0.0, 0.0};
        for (std::size_t l = 0; l < acquired.size(); l++) {
          acc += kspace[l] * std::conj(twiddle[static_cast<std::size_t>((freq[l] * y) % N)]);
        }
        out(i, y, k) = acc * inv;
      }
    }
  });
  return out;
}

ComplexVolume add_noise(const ComplexVolume &v, double sigma, std::uint64_t seed)
{
  if (!(sigma >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "noise sigma must be >= 0");
  }
  ComplexVolume out = v;
  if (sigma == 0.0) {
    return out;
  }
  CounterRng const rng(seed);
  parallel_for(v.size(), [&](Index n0, Index n1) {
    for (Index n = n0; n < n1; n++) {
      auto const [re, im] = rng.normal_pair(static_cast<std::uint64_t>(n));
      out[n] += Complex(sigma * re, sigma * im);
    }
  });
  return out;
}

ComplexVolume model_exact_image(const RealVolume &weights, const ComplexVolume &field)
{
  require_same_grid(weights.grid(), field.grid(), "model-exact image");
  ComplexVolume out(field.grid());
  for (Index n = 0; n < out.size(); n++) {
    out[n] = weights[n] * field[n];
  }
  return out;
}

namespace {

std::uint64_t acquisition_seed(std::uint64_t seed, RfMode mode, const ScanParams &sp, int tse_factor)
{
  std::uint64_t tag = static_cast<std::uint64_t>(mode);
  tag = tag * 8 + static_cast<std::uint64_t>(sp.id);
  tag = tag * 1'000'003ull + static_cast<std::uint64_t>(tse_factor);
  return combine_seed(seed, tag);
}

} // namespace

ComplexVolume simulate_acquisition(const Phantom &ph, const FieldSet &f, RfMode mode, const ScanParams &sp,
                                   const EchoTrainConfig &et, const AcquisitionConfig &cfg)
{
  require_same_grid(ph.grid(), f.grid(), "simulate");
  sp.validate();
  et.validate();
  cfg.validate();
  if (et.train_length() >= sp.tr) {
    throw Error(ErrorKind::TrainTooLong, "echo train of " + std::to_string(et.train_length()) + " ms exceeds TR");
  }
  auto const &field = f.field(mode);

  ComplexVolume img;
  if (cfg.fidelity == Fidelity::ModelExact) {
    img = model_exact_image(weight_map(ph, sp), field);
  } else {
    double nominal = 0.0;
    Index count = 0;
    for (Index n = 0; n < field.size(); n++) {
      if (ph.tissue_at(n).pd > 0.0) {
        nominal += std::abs(field[n]);
        count++;
      }
    }
    if (count == 0) {
      for (Index n = 0; n < field.size(); n++) {
        nominal += std::abs(field[n]);
      }
      count = field.size();
    }
    nominal /= static_cast<double>(count);
    double const flip = cfg.flip_deg * std::numbers::pi / 180.0;

    ComplexVolume base(ph.grid());
    for (Index n = 0; n < base.size(); n++) {
      auto const &t = ph.tissue_at(n);
      double const sat = t.pd * (1.0 - std::exp(-sp.tr / t.t1));
      double const excite = nominal > 0.0 ? std::sin(flip * std::abs(field[n]) / nominal) : 0.0;
      base[n] = sat * excite * field[n];
    }
    img = apply_echo_train_filter(base, ph.t2_map(), et, sp);
  }
  return add_noise(img, cfg.noise_sigma, acquisition_seed(cfg.seed, mode, sp, et.tse_factor));
}

std::string acquisition_name(AcqKey key) { return std::string(to_string(key.mode)) + "_" + to_string(key.sp); }

void AcquisitionSet::insert(AcqKey key, ComplexVolume image, int tse_factor)
{
  if (!entries_.empty()) {
    require_same_grid(entries_.begin()->second.image.grid(), image.grid(), "acquisition set");
  }
  entries_.insert_or_assign(key, Entry{std::move(image), tse_factor});
}

const ComplexVolume &AcquisitionSet::get(AcqKey key) const
{
  auto const it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error(ErrorKind::MissingAcquisition, acquisition_name(key));
  }
  return it->second.image;
}

void AcquisitionSet::validate() const
{
  for (auto const &[key, e] : entries_) {
    if (e.tse_factor != tse_factor_) {
      throw Error(ErrorKind::MixedTseFactor, acquisition_name(key) + " has TSE factor " +
                                                 std::to_string(e.tse_factor) + ", set expects " +
                                                 std::to_string(tse_factor_));
    }
  }
}

AcquisitionSet AcquisitionSet::without_cp() const
{
  AcquisitionSet s(tse_factor_);
  for (auto const &[key, e] : entries_) {
    if (key.mode != RfMode::CP) {
      s.entries_.emplace(key, e);
    }
  }
  return s;
}

AcquisitionSet simulate_set(const Phantom &ph, const FieldSet &f, const Protocol &protocol,
                            const AcquisitionConfig &cfg)
{
  protocol.validate();
  AcquisitionSet set(protocol.train.tse_factor);
  for (RfMode mode : {RfMode::Mode1, RfMode::Mode2, RfMode::CP}) {
    for (auto const &sp : protocol.sps) {
      set.insert({mode, sp.id}, simulate_acquisition(ph, f, mode, sp, protocol.train, cfg),
                 protocol.train.tse_factor);
    }
  }
  return set;
}

} // namespace boga
