// Command-line front end for the BOGA simulation pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "boga/analysis.hpp"
#include "boga/parallel.hpp"
#include "boga/experiment.hpp"
#include "boga/volume_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace boga;

namespace {

constexpr double kDefaultFovMm = 192.0;

struct Options {
  std::string config;
  std::vector<std::string> presets;
  std::string convention;
  std::string fidelity;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string in;
  int threads = 0;
  bool strict = false;
  Index dims = 0;
  int trials = 0;
  double noise = -1.0;
};

void add_common(CLI::App *app, Options &o)
{
  app->add_option("--config", o.config, "Experiment config (JSON)");
  app->add_option("--preset", o.presets, "Protocol preset (tse50, tse100); repeatable")
    ->check(CLI::IsMember({"tse50", "tse100"}));
  app->add_option("--fidelity", o.fidelity, "model-exact or echo-train")
    ->check(CLI::IsMember({"model-exact", "echo-train"}));
  app->add_option("--seed", o.seed, "Seed for phantom, fields and noise");
  app->add_option("--noise", o.noise, "Noise sigma per real/imaginary part");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--dims", o.dims, "Isotropic grid size; resets phantom and fields to the defaults")
    ->check(CLI::Range(Index{5}, Index{512}));
}

void add_convention(CLI::App *app, Options &o)
{
  app->add_option("--convention", o.convention, "verbatim or ratio (default: audit recommendation)")
    ->check(CLI::IsMember({"verbatim", "ratio"}));
  app->add_flag("--strict", o.strict, "Fail when the chosen convention fails the audit");
}

ExperimentConfig build_config(const Options &o)
{
  auto cfg = o.config.empty() ? default_experiment_config() : load_experiment_config(o.config);
  if (o.dims > 0) {
    double const vox = kDefaultFovMm / static_cast<double>(o.dims);
    cfg.grid = Grid(o.dims, o.dims, o.dims, vox, vox, vox);
    auto const fseed = cfg.fields.seed;
    cfg.phantom = default_brain_spec(cfg.grid);
    cfg.fields = default_field_spec(cfg.grid);
    cfg.fields.seed = fseed;
  }
  if (!o.presets.empty()) {
    cfg.protocols.clear();
    for (auto const &p : o.presets) {
      cfg.protocols.push_back(protocol_preset(p));
    }
  }
  if (!o.convention.empty()) {
    cfg.convention = parse_convention(o.convention);
  }
  if (!o.fidelity.empty()) {
    cfg.acquisition.fidelity = parse_fidelity(o.fidelity);
  }
  if (o.seed) {
    cfg.acquisition.seed = *o.seed;
    cfg.fields.seed = *o.seed;
    cfg.phantom.seed = *o.seed;
  }
  if (o.noise >= 0.0) {
    cfg.acquisition.noise_sigma = o.noise;
  }
  if (!o.out.empty()) {
    cfg.output_dir = o.out;
  }
  if (o.threads > 0) {
    cfg.threads = o.threads;
  }
  cfg.strict = cfg.strict || o.strict;
  set_thread_count(cfg.threads);
  return cfg;
}

json stage_meta(const char *stage, const ExperimentConfig &cfg)
{
  return {{"artifact", "boga-stage"}, {"stage", stage}, {"schema_version", kConfigSchemaVersion}, {"config", to_json(cfg)}};
}

void report(const std::string &stage, const fs::path &root, const std::string &checksum)
{
  std::printf("%s: %s\n", stage.c_str(), root.string().c_str());
  std::printf("checksum: %s\n", checksum.c_str());
}

int cmd_phantom(const Options &o)
{
  auto const cfg = build_config(o);
  BundleWriter out(cfg.output_dir);
  auto const ph = generate_phantom(cfg.phantom);
  emit_phantom(out, ph);
  for (auto const &w : ph.warnings) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  report("phantom", cfg.output_dir, out.finish(stage_meta("phantom", cfg), "phantom.manifest.json"));
  return 0;
}

int cmd_fields(const Options &o)
{
  auto const cfg = build_config(o);
  BundleWriter out(cfg.output_dir);
  auto const f = generate_mode_fields(cfg.fields);
  emit_fields(out, f);
  auto meta = stage_meta("fields", cfg);
  meta["reference_amplitude"] = f.reference_amplitude();
  meta["hole_voxels"] = f.hole().count();
  report("fields", cfg.output_dir, out.finish(meta, "fields.manifest.json"));
  return 0;
}

int cmd_simulate(const Options &o)
{
  auto const cfg = build_config(o);
  BundleWriter out(cfg.output_dir);
  auto const ph = generate_phantom(cfg.phantom);
  auto const f = generate_mode_fields(cfg.fields);
  emit_phantom(out, ph);
  emit_fields(out, f);
  for (auto const &p : cfg.protocols) {
    emit_acquisitions(out, p.name, simulate_set(ph, f, p, cfg.acquisition));
  }
  report("simulate", cfg.output_dir, out.finish(stage_meta("simulate", cfg), "simulate.manifest.json"));
  return 0;
}

Convention resolve_convention(const ExperimentConfig &cfg)
{
  auto const audit = audit_conventions(Grid(cfg.audit_size, cfg.audit_size, cfg.audit_size), cfg.audit_trials,
                                       cfg.acquisition.seed);
  if (!cfg.convention) {
    return audit.recommended();
  }
  auto const &r = *cfg.convention == Convention::Ratio ? audit.ratio : audit.verbatim;
  if (!r.passed) {
    if (cfg.strict) {
      throw Error(ErrorKind::ContractViolation,
                  std::string("convention '") + to_string(*cfg.convention) + "' fails the field-cancellation audit");
    }
    std::fprintf(stderr, "warning: convention '%s' fails the field-cancellation audit\n", to_string(*cfg.convention));
  }
  return *cfg.convention;
}

fs::path input_dir(const Options &o)
{
  if (o.in.empty()) {
    throw Error(ErrorKind::Config, "--in is required");
  }
  return o.in;
}

int cmd_combine(const Options &o)
{
  auto cfg = build_config(o);
  auto const in = input_dir(o);
  if (o.out.empty()) {
    cfg.output_dir = in;
  }
  auto const convention = resolve_convention(cfg);
  auto const protocols = list_protocols(in);
  if (protocols.empty()) {
    throw Error(ErrorKind::MissingAcquisition, "no acquisition sets under " + in.string());
  }
  BundleWriter out(cfg.output_dir);
  for (auto const &p : protocols) {
    auto const acq = load_acquisitions(in, p);
    acq.validate();
    emit_reconstructions(out, p, reconstruct_all(acq.without_cp(), convention));
  }
  auto meta = stage_meta("combine", cfg);
  meta["convention"] = to_string(convention);
  report("combine", cfg.output_dir, out.finish(meta, "combine.manifest.json"));
  return 0;
}

int cmd_analyze(const Options &o)
{
  auto cfg = build_config(o);
  auto const in = input_dir(o);
  if (o.out.empty()) {
    cfg.output_dir = in;
  }
  auto const ph = load_phantom(in);
  Mask hole(ph.grid());
  if (fs::exists(in / "fields" / "envelope.vol.json")) {
    auto const env = load_real_volume(in / "fields" / "envelope");
    for (Index n = 0; n < env.size(); n++) {
      hole.set(n, env[n] < 1.0);
    }
  }
  auto const protocols = list_protocols(in);
  if (protocols.empty()) {
    throw Error(ErrorKind::MissingAcquisition, "no acquisition sets under " + in.string());
  }
  std::vector<AcquisitionSet> sets;
  for (auto const &p : protocols) {
    sets.push_back(load_acquisitions(in, p));
  }
  std::size_t top = 0;
  for (std::size_t i = 0; i < sets.size(); i++) {
    if (sets[i].tse_factor() > sets[top].tse_factor()) {
      top = i;
    }
  }
  auto const display = display_mask(magnitude(sets[top].get({RfMode::CP, SpId::SP2})), cfg.mask_fraction);
  BundleWriter out(cfg.output_dir);
  auto meta = stage_meta("analyze", cfg);
  for (std::size_t i = 0; i < protocols.size(); i++) {
    meta["summary"][protocols[i]] =
      analyze_protocol(out, protocols[i], ph, hole, sets[i], load_reconstructions(in, protocols[i]), display);
  }
  report("analyze", cfg.output_dir, out.finish(meta, "analyze.manifest.json"));
  return 0;
}

int cmd_pipeline(const Options &o)
{
  auto const cfg = build_config(o);
  auto const bundle = run_experiment(cfg);
  std::printf("convention: %s\n", to_string(bundle.convention));
  std::printf("files: %zu\n", bundle.files.size());
  report("pipeline", bundle.root, bundle.checksum);
  return 0;
}

int cmd_audit(const Options &o)
{
  auto const cfg = build_config(o);
  Index const n = o.dims > 0 ? o.dims : cfg.audit_size;
  int const trials = o.trials > 0 ? o.trials : cfg.audit_trials;
  auto const audit = audit_conventions(Grid(n, n, n), trials, cfg.acquisition.seed);
  auto doc = audit.to_json();
  std::cout << doc.dump(2) << "\n";
  if (!o.out.empty()) {
    BundleWriter out(o.out);
    out.text("audit.json", doc.dump(2) + "\n");
  }
  if (!audit.any_passed()) {
    std::fprintf(stderr, "error: no convention reaches the residual threshold\n");
    return 2;
  }
  if (cfg.convention) {
    auto const &r = *cfg.convention == Convention::Ratio ? audit.ratio : audit.verbatim;
    if (!r.passed && cfg.strict) {
      std::fprintf(stderr, "error: convention '%s' fails the field-cancellation audit\n", to_string(*cfg.convention));
      return 2;
    }
  }
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"BOGA turbo spin echo simulation and B1-insensitive contrast synthesis"};
  app.require_subcommand(1);
  Options o;

  auto *phantom = app.add_subcommand("phantom", "Generate the digital brain phantom");
  auto *fields = app.add_subcommand("fields", "Generate the two RF-mode transmit fields");
  auto *simulate = app.add_subcommand("simulate", "Simulate the nine acquisitions per protocol");
  auto *combine = app.add_subcommand("combine", "Synthesize T1/T2/PD contrasts from mode1/mode2 acquisitions");
  auto *analyze = app.add_subcommand("analyze", "Profiles, SNR maps and region statistics");
  auto *pipeline = app.add_subcommand("pipeline", "Run every stage and write a checksummed bundle");
  auto *audit = app.add_subcommand("audit", "Field-cancellation audit of both combination conventions");

  for (auto *sub : {phantom, fields, simulate, combine, analyze, pipeline, audit}) {
    add_common(sub, o);
  }
  for (auto *sub : {combine, analyze}) {
    sub->add_option("--in", o.in, "Directory written by an earlier stage")->required();
  }
  for (auto *sub : {combine, pipeline, audit}) {
    add_convention(sub, o);
  }
  audit->add_option("--trials", o.trials, "Random field pairs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*phantom) return cmd_phantom(o);
    if (*fields) return cmd_fields(o);
    if (*simulate) return cmd_simulate(o);
    if (*combine) return cmd_combine(o);
    if (*analyze) return cmd_analyze(o);
    if (*pipeline) return cmd_pipeline(o);
    if (*audit) return cmd_audit(o);
  } catch (const Error &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::ContractViolation ? 2 : 1;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
