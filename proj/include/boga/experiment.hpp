#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boga/combine.hpp"
#include "boga/fields.hpp"
#include "boga/phantom.hpp"
#include "boga/tse.hpp"

namespace boga {

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  Grid grid{64, 64, 64, 3.0, 3.0, 3.0};
  PhantomSpec phantom;
  FieldSpec fields;
  std::vector<Protocol> protocols;
  AcquisitionConfig acquisition;
  std::optional<Convention> convention; // empty: use the audit's recommendation
  int audit_trials = 20;
  Index audit_size = 32;
  double mask_fraction = 2e-4;
  int threads = 1;
  bool strict = false;
  std::filesystem::path output_dir = "boga-out";
};

/// Default brain phantom and fields on a 64^3 grid of 3 mm voxels with both
/// TSE presets.
ExperimentConfig default_experiment_config();

/// Parses a versioned JSON experiment document. Missing or mistyped keys
/// raise ErrorKind::Config naming the dotted key path.
ExperimentConfig parse_experiment_config(const nlohmann::json &doc);
ExperimentConfig load_experiment_config(const std::filesystem::path &path);
/// Canonical document for `cfg`; parse_experiment_config(to_json(cfg)) == cfg.
/// The output directory and thread count are reported separately since they
/// do not affect results.
nlohmann::json to_json(const ExperimentConfig &cfg);

/// Writes artifacts under a root directory and records their checksums.
class BundleWriter {
public:
  explicit BundleWriter(std::filesystem::path root);

  const std::filesystem::path &root() const { return root_; }
  void volume(const std::string &rel, const ComplexVolume &v);
  void volume(const std::string &rel, const RealVolume &v);
  void text(const std::string &rel, const std::string &content);
  void file(const std::string &rel); // already written by a caller
  std::filesystem::path path(const std::string &rel) const;

  struct Entry {
    std::string path;
    std::string sha256;
    std::uintmax_t bytes;
  };
  const std::vector<Entry> &entries() const { return entries_; }

  /// Writes the manifest (entries sorted by path plus `meta`) and returns its
  /// checksum, which also goes to bundle.sha256 or `<stem>.sha256`.
  std::string finish(const nlohmann::json &meta, const std::string &name = "manifest.json");

private:
  std::filesystem::path root_;
  std::vector<Entry> entries_;
};

struct ReportBundle {
  std::filesystem::path root;
  std::vector<BundleWriter::Entry> files;
  std::string checksum;
  Convention convention = Convention::Ratio;
  nlohmann::json summary;
};

// Pipeline stages, shared by the individual subcommands and run_experiment.
void emit_phantom(BundleWriter &out, const Phantom &ph);
void emit_fields(BundleWriter &out, const FieldSet &f);
void emit_acquisitions(BundleWriter &out, const std::string &protocol, const AcquisitionSet &acq);
std::vector<Reconstruction> reconstruct_all(const AcquisitionSet &acq, Convention convention);
void emit_reconstructions(BundleWriter &out, const std::string &protocol, const std::vector<Reconstruction> &recs);
/// Profiles, SNR maps, region statistics and renders for one protocol.
/// `display` is the render-only mask; it never enters the statistics.
nlohmann::json analyze_protocol(BundleWriter &out, const std::string &protocol, const Phantom &ph, const Mask &hole,
                                const AcquisitionSet &acq, const std::vector<Reconstruction> &recs,
                                const Mask &display);

Phantom load_phantom(const std::filesystem::path &root);
AcquisitionSet load_acquisitions(const std::filesystem::path &root, const std::string &protocol);
std::vector<Reconstruction> load_reconstructions(const std::filesystem::path &root, const std::string &protocol);
std::vector<std::string> list_protocols(const std::filesystem::path &root);

/// Phantom -> fields -> nine acquisitions per protocol -> T1/T2/PD from the
/// mode1/mode2 images -> analysis -> manifest. Deterministic under the config.
ReportBundle run_experiment(const ExperimentConfig &cfg);

} // namespace boga
