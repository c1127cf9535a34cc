#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "boga/fields.hpp"
#include "boga/phantom.hpp"
#include "boga/volume.hpp"

namespace boga {

enum class SpId { SP1 = 0, SP2 = 1, SP3 = 2 };
const char *to_string(SpId id);
SpId parse_sp_id(const std::string &s);

/// Scan-parameter set; times in ms.
struct ScanParams {
  SpId id = SpId::SP1;
  double te = 8.0;
  double te_eff = 8.0;
  double tr = 1500.0;

  void validate() const;
};

enum class PeOrdering { Auto, Centric, LinearShifted };
const char *to_string(PeOrdering o);
PeOrdering parse_pe_ordering(const std::string &s);

struct EchoTrainConfig {
  int tse_factor = 1;
  double echo_spacing = 8.0; // ms
  /// Auto picks centric when the effective TE maps to the first echo and
  /// shifted-linear otherwise.
  PeOrdering ordering = PeOrdering::Auto;
  Index ky_lines = 0; // 0 means every ky line of the grid

  double train_length() const { return tse_factor * echo_spacing; }
  void validate() const;
};

enum class Fidelity { ModelExact, EchoTrain };
const char *to_string(Fidelity f);
Fidelity parse_fidelity(const std::string &s);

struct AcquisitionConfig {
  Fidelity fidelity = Fidelity::ModelExact;
  double flip_deg = 90.0;
  double refocus_deg = 60.0; // recorded only
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Named protocol: one TSE factor with its three scan-parameter sets. The
/// scan-time and undersampling fields are metadata only.
struct Protocol {
  std::string name;
  EchoTrainConfig train;
  std::array<ScanParams, 3> sps;
  std::string scan_time_single_mode;
  std::string scan_time_boga;
  double compressed_sense_factor = 8.0;

  const ScanParams &sp(SpId id) const { return sps[static_cast<std::size_t>(id)]; }
  void validate() const;
};

Protocol preset_tse50();
Protocol preset_tse100();
Protocol protocol_preset(const std::string &name);

/// Spin-echo weighting PD * (1 - exp(-TR/T1)) * exp(-TEeff/T2), zero phase.
Complex contrast_weight(const TissueClass &tissue, const ScanParams &sp);
RealVolume weight_map(const Phantom &ph, const ScanParams &sp);

/// Echo number (1-based) that acquires each ky line, 0 for lines outside the
/// acquired block. Line n holds spatial frequency n - ny/2.
struct EchoSchedule {
  std::vector<int> echo_of_line;
  int center_echo = 1;
  double center_te = 0.0;
  PeOrdering ordering = PeOrdering::Centric;
  bool te_eff_reachable = true;

  int max_echo() const;
};

EchoSchedule echo_schedule(const EchoTrainConfig &et, const ScanParams &sp, Index ny);

/// Mixes per-echo T2 decay into k-space along y: every ky line is taken from
/// the echo the schedule assigns it, then transformed back.
ComplexVolume apply_echo_train_filter(const ComplexVolume &base, const RealVolume &t2, const EchoTrainConfig &et,
                                      const ScanParams &sp);

/// Adds N(0, sigma^2) to the real and imaginary part of every voxel. Noise of
/// voxel n depends only on (seed, n).
ComplexVolume add_noise(const ComplexVolume &v, double sigma, std::uint64_t seed);

/// weights(v) * field(v).
ComplexVolume model_exact_image(const RealVolume &weights, const ComplexVolume &field);

ComplexVolume simulate_acquisition(const Phantom &ph, const FieldSet &f, RfMode mode, const ScanParams &sp,
                                   const EchoTrainConfig &et, const AcquisitionConfig &cfg);

struct AcqKey {
  RfMode mode;
  SpId sp;
  auto operator<=>(const AcqKey &) const = default;
};

std::string acquisition_name(AcqKey key);

/// The nine images (three RF modes x three scan-parameter sets) of one TSE
/// factor. Each entry carries the TSE factor it was acquired with.
class AcquisitionSet {
public:
  struct Entry {
    ComplexVolume image;
    int tse_factor;
  };

  explicit AcquisitionSet(int tse_factor = 1)
    : tse_factor_(tse_factor)
  {
  }

  int tse_factor() const { return tse_factor_; }
  void insert(AcqKey key, ComplexVolume image, int tse_factor);
  bool contains(AcqKey key) const { return entries_.count(key) != 0; }
  const ComplexVolume &get(AcqKey key) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<AcqKey, Entry> &entries() const { return entries_; }

  /// Throws MixedTseFactor if any entry disagrees with the set's factor.
  void validate() const;
  /// Copy without the CP-mode entries.
  AcquisitionSet without_cp() const;

private:
  int tse_factor_;
  std::map<AcqKey, Entry> entries_;
};

AcquisitionSet simulate_set(const Phantom &ph, const FieldSet &f, const Protocol &protocol,
                            const AcquisitionConfig &cfg);

} // namespace boga
