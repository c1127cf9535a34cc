#include "boga/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "boga/analysis.hpp"
#include "boga/checksum.hpp"
#include "boga/parallel.hpp"
#include "boga/render.hpp"
#include "boga/volume_io.hpp"

namespace boga {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// A JSON value together with its dotted path, for error messages.
class Node {
public:
  Node(const json &j, std::string path)
    : j_(&j)
    , path_(std::move(path))
  {
  }

  const json &raw() const { return *j_; }
  const std::string &path() const { return path_; }
  bool has(const char *key) const { return j_->is_object() && j_->contains(key) && !(*j_)[key].is_null(); }

  Node at(const char *key) const
  {
    if (!j_->is_object()) {
      throw Error(ErrorKind::Config, "key '" + path_ + "' must be an object");
    }
    if (!has(key)) {
      throw Error(ErrorKind::Config, "missing key '" + child(key) + "'");
    }
    return Node((*j_)[key], child(key));
  }

  template <typename T>
  T as() const
  {
    try {
      return j_->get<T>();
    } catch (const json::exception &) {
      throw Error(ErrorKind::Config, "key '" + path_ + "' has the wrong type");
    }
  }

  template <typename T>
  T get(const char *key) const
  {
    return at(key).as<T>();
  }

  template <typename T>
  T get_or(const char *key, T fallback) const
  {
    return has(key) ? at(key).as<T>() : fallback;
  }

  template <typename T, std::size_t N>
  std::array<T, N> array(const char *key) const
  {
    auto const v = get<std::vector<T>>(key);
    if (v.size() != N) {
      throw Error(ErrorKind::Config, "key '" + child(key) + "' must have " + std::to_string(N) + " entries");
    }
    std::array<T, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }

  std::vector<Node> items() const
  {
    if (!j_->is_array()) {
      throw Error(ErrorKind::Config, "key '" + path_ + "' must be an array");
    }
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_->size(); i++) {
      out.emplace_back((*j_)[i], path_ + "[" + std::to_string(i) + "]");
    }
    return out;
  }

private:
  std::string child(const char *key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

  const json *j_;
  std::string path_;
};

template <typename Fn>
auto config_guard(Fn &&fn) -> decltype(fn())
{
  try {
    return fn();
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::Config) {
      throw;
    }
    throw Error(ErrorKind::Config, e.what());
  }
}

std::int32_t tissue_index(const std::vector<TissueClass> &tissues, const Node &n)
{
  auto const name = n.as<std::string>();
  for (std::size_t i = 0; i < tissues.size(); i++) {
    if (tissues[i].name == name) {
      return static_cast<std::int32_t>(i);
    }
  }
  throw Error(ErrorKind::Config, "key '" + n.path() + "': unknown tissue '" + name + "'");
}

std::vector<TissueClass> parse_tissues(const Node &n)
{
  std::vector<TissueClass> out;
  for (auto const &t : n.items()) {
    out.push_back({t.get<std::string>("name"), t.get<double>("t1"), t.get<double>("t2"), t.get<double>("pd")});
  }
  return out;
}

PhantomSpec parse_phantom(const Node &n, const Grid &grid)
{
  PhantomSpec spec;
  if (n.has("preset")) {
    auto const preset = n.get<std::string>("preset");
    if (preset != "default-brain") {
      throw Error(ErrorKind::Config, "key '" + n.path() + ".preset': unknown phantom preset '" + preset + "'");
    }
    spec = default_brain_spec(grid);
    if (n.has("tissues")) {
      auto tissues = parse_tissues(n.at("tissues"));
      if (tissues.size() != spec.tissues.size()) {
        throw Error(ErrorKind::Config, "key '" + n.path() + ".tissues' must list " +
                                           std::to_string(spec.tissues.size()) + " classes for the preset");
      }
      spec.tissues = std::move(tissues);
    }
  } else {
    spec.grid = grid;
    spec.tissues = parse_tissues(n.at("tissues"));
    spec.background = tissue_index(spec.tissues, n.at("background"));
    for (auto const &p : n.at("primitives").items()) {
      spec.primitives.push_back(
        {p.array<double, 3>("center_mm"), p.array<double, 3>("radii_mm"), tissue_index(spec.tissues, p.at("tissue"))});
    }
  }
  spec.seed = n.get_or<std::uint64_t>("seed", 0);
  spec.jitter_mm = n.get_or<double>("jitter_mm", 0.0);
  return spec;
}

FieldSpec parse_fields(const Node &n, const Grid &grid)
{
  FieldSpec s = default_field_spec(grid);
  s.seed = n.get<std::uint64_t>("seed");
  s.depth = n.get_or("depth", s.depth);
  if (n.has("phase_roll_mode1")) s.phase_roll_mode1 = n.array<double, 3>("phase_roll_mode1");
  if (n.has("phase_roll_mode2")) s.phase_roll_mode2 = n.array<double, 3>("phase_roll_mode2");
  s.phase_perturbation = n.get_or("phase_perturbation", s.phase_perturbation);
  if (n.has("hole")) {
    auto const h = n.at("hole");
    if (h.has("center_voxel")) s.hole_center_voxel = h.array<double, 3>("center_voxel");
    s.hole_radius_mm = h.get_or("radius_mm", s.hole_radius_mm);
    s.hole_floor = h.get_or("floor", s.hole_floor);
  }
  return s;
}

Protocol parse_custom_protocol(const Node &n)
{
  Protocol p;
  p.name = n.get<std::string>("name");
  p.train.tse_factor = n.get<int>("tse_factor");
  p.train.echo_spacing = n.get_or("echo_spacing_ms", p.train.echo_spacing);
  p.train.ordering = parse_pe_ordering(n.get_or<std::string>("ordering", "auto"));
  p.train.ky_lines = n.get_or<Index>("ky_lines", 0);
  auto const sps = n.at("sps").items();
  std::set<SpId> seen;
  if (sps.size() != 3) {
    throw Error(ErrorKind::Config, "key '" + n.path() + ".sps' must list exactly SP1, SP2, SP3");
  }
  for (auto const &s : sps) {
    ScanParams sp{parse_sp_id(s.get<std::string>("id")), s.get<double>("te"), 0.0, s.get<double>("tr")};
    sp.te_eff = s.get_or("te_eff", sp.te);
    if (!seen.insert(sp.id).second) {
      throw Error(ErrorKind::Config, "key '" + s.path() + "': duplicate " + to_string(sp.id));
    }
    p.sps[static_cast<std::size_t>(sp.id)] = sp;
  }
  p.scan_time_single_mode = n.get_or<std::string>("scan_time_single_mode", "");
  p.scan_time_boga = n.get_or<std::string>("scan_time_boga", "");
  p.compressed_sense_factor = n.get_or("compressed_sense_factor", p.compressed_sense_factor);
  return p;
}

std::vector<Protocol> parse_protocols(const Node &n)
{
  std::vector<Protocol> out;
  if (n.has("presets")) {
    for (auto const &item : n.at("presets").items()) {
      auto p = protocol_preset(item.as<std::string>());
      p.train.echo_spacing = n.get_or("echo_spacing_ms", p.train.echo_spacing);
      p.train.ordering = parse_pe_ordering(n.get_or<std::string>("ordering", "auto"));
      p.train.ky_lines = n.get_or<Index>("ky_lines", 0);
      out.push_back(std::move(p));
    }
  }
  if (n.has("custom")) {
    for (auto const &item : n.at("custom").items()) {
      out.push_back(parse_custom_protocol(item));
    }
  }
  if (out.empty()) {
    throw Error(ErrorKind::Config, "key '" + n.path() + "' names no protocols");
  }
  std::set<std::string> names;
  for (auto const &p : out) {
    if (!names.insert(p.name).second) {
      throw Error(ErrorKind::Config, "duplicate protocol name '" + p.name + "'");
    }
    p.validate();
  }
  return out;
}

json tissue_json(const TissueClass &t) { return {{"name", t.name}, {"t1", t.t1}, {"t2", t.t2}, {"pd", t.pd}}; }

json protocol_json(const Protocol &p)
{
  json sps = json::array();
  for (auto const &sp : p.sps) {
    sps.push_back({{"id", to_string(sp.id)}, {"te", sp.te}, {"te_eff", sp.te_eff}, {"tr", sp.tr}});
  }
  return {{"name", p.name},
          {"tse_factor", p.train.tse_factor},
          {"echo_spacing_ms", p.train.echo_spacing},
          {"ordering", to_string(p.train.ordering)},
          {"ky_lines", p.train.ky_lines},
          {"sps", sps},
          {"scan_time_single_mode", p.scan_time_single_mode},
          {"scan_time_boga", p.scan_time_boga},
          {"compressed_sense_factor", p.compressed_sense_factor}};
}

} // namespace

ExperimentConfig default_experiment_config()
{
  ExperimentConfig cfg;
  cfg.phantom = default_brain_spec(cfg.grid);
  cfg.fields = default_field_spec(cfg.grid);
  cfg.fields.seed = 1;
  cfg.protocols = {preset_tse50(), preset_tse100()};
  cfg.acquisition.noise_sigma = 0.005;
  cfg.acquisition.seed = 7;
  return cfg;
}

ExperimentConfig parse_experiment_config(const json &doc)
{
  Node const root(doc, "");
  ExperimentConfig cfg;
  auto const version = root.get<int>("schema_version");
  if (version != kConfigSchemaVersion) {
    throw Error(ErrorKind::Config, "unsupported schema_version " + std::to_string(version));
  }
  auto const g = root.at("grid");
  auto const dims = g.array<Index, 3>("dims");
  auto const vox = g.array<double, 3>("voxel_mm");
  cfg.grid = config_guard([&] { return Grid(dims[0], dims[1], dims[2], vox[0], vox[1], vox[2]); });

  cfg.phantom = config_guard([&] { return parse_phantom(root.at("phantom"), cfg.grid); });
  cfg.fields = config_guard([&] { return parse_fields(root.at("fields"), cfg.grid); });
  config_guard([&] {
    cfg.fields.validate();
    return 0;
  });
  cfg.protocols = config_guard([&] { return parse_protocols(root.at("protocol")); });

  auto const acq = root.at("acquisition");
  cfg.acquisition.fidelity = config_guard([&] { return parse_fidelity(acq.get<std::string>("fidelity")); });
  cfg.acquisition.noise_sigma = acq.get<double>("noise_sigma");
  cfg.acquisition.seed = acq.get<std::uint64_t>("seed");
  cfg.acquisition.flip_deg = acq.get_or("flip_deg", cfg.acquisition.flip_deg);
  cfg.acquisition.refocus_deg = acq.get_or("refocus_deg", cfg.acquisition.refocus_deg);
  config_guard([&] {
    cfg.acquisition.validate();
    return 0;
  });

  if (root.has("combination")) {
    auto const c = root.at("combination");
    auto const conv = c.get_or<std::string>("convention", "auto");
    if (conv != "auto") {
      cfg.convention = config_guard([&] { return parse_convention(conv); });
    }
    cfg.audit_trials = c.get_or("audit_trials", cfg.audit_trials);
    cfg.audit_size = c.get_or("audit_size", cfg.audit_size);
  }
  if (root.has("analysis")) {
    cfg.mask_fraction = root.at("analysis").get_or("mask_fraction", cfg.mask_fraction);
  }
  cfg.threads = root.get_or("threads", cfg.threads);
  cfg.strict = root.get_or("strict", cfg.strict);
  cfg.output_dir = root.get_or<std::string>("output_dir", cfg.output_dir.string());
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path &path)
{
  std::ifstream f(path);
  if (!f) {
    throw Error(ErrorKind::Config, "cannot open config " + path.string());
  }
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception &e) {
    throw Error(ErrorKind::Config, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(doc);
}

json to_json(const ExperimentConfig &cfg)
{
  auto const &ph = cfg.phantom;
  json tissues = json::array();
  for (auto const &t : ph.tissues) {
    tissues.push_back(tissue_json(t));
  }
  json prims = json::array();
  for (auto const &p : ph.primitives) {
    prims.push_back({{"center_mm", p.center_mm},
                     {"radii_mm", p.radii_mm},
                     {"tissue", ph.tissues[static_cast<std::size_t>(p.tissue)].name}});
  }
  json protocols = json::array();
  for (auto const &p : cfg.protocols) {
    protocols.push_back(protocol_json(p));
  }
  auto const &f = cfg.fields;
  return {{"schema_version", kConfigSchemaVersion},
          {"grid", {{"dims", {cfg.grid.nx, cfg.grid.ny, cfg.grid.nz}}, {"voxel_mm", {cfg.grid.dx, cfg.grid.dy, cfg.grid.dz}}}},
          {"phantom",
           {{"tissues", tissues},
            {"background", ph.tissues[static_cast<std::size_t>(ph.background)].name},
            {"primitives", prims},
            {"seed", ph.seed},
            {"jitter_mm", ph.jitter_mm}}},
          {"fields",
           {{"seed", f.seed},
            {"depth", f.depth},
            {"phase_roll_mode1", f.phase_roll_mode1},
            {"phase_roll_mode2", f.phase_roll_mode2},
            {"phase_perturbation", f.phase_perturbation},
            {"hole", {{"center_voxel", f.hole_center_voxel}, {"radius_mm", f.hole_radius_mm}, {"floor", f.hole_floor}}}}},
          {"protocol", {{"custom", protocols}}},
          {"acquisition",
           {{"fidelity", to_string(cfg.acquisition.fidelity)},
            {"noise_sigma", cfg.acquisition.noise_sigma},
            {"seed", cfg.acquisition.seed},
            {"flip_deg", cfg.acquisition.flip_deg},
            {"refocus_deg", cfg.acquisition.refocus_deg}}},
          {"combination",
           {{"convention", cfg.convention ? to_string(*cfg.convention) : "auto"},
            {"audit_trials", cfg.audit_trials},
            {"audit_size", cfg.audit_size}}},
          {"analysis", {{"mask_fraction", cfg.mask_fraction}}},
          {"strict", cfg.strict}};
}

// ---------------------------------------------------------------------------

BundleWriter::BundleWriter(fs::path root)
  : root_(std::move(root))
{
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) {
    throw Error(ErrorKind::Io, "cannot create output directory " + root_.string());
  }
}

fs::path BundleWriter::path(const std::string &rel) const { return root_ / rel; }

void BundleWriter::file(const std::string &rel)
{
  auto const p = path(rel);
  entries_.push_back({rel, sha256_file(p), fs::file_size(p)});
}

void BundleWriter::volume(const std::string &rel, const ComplexVolume &v)
{
  save_volume(v, path(rel));
  file(rel + ".vol.json");
  file(rel + ".vol.raw");
}

void BundleWriter::volume(const std::string &rel, const RealVolume &v)
{
  save_volume(v, path(rel));
  file(rel + ".vol.json");
  file(rel + ".vol.raw");
}

void BundleWriter::text(const std::string &rel, const std::string &content)
{
  auto const p = path(rel);
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw Error(ErrorKind::Io, "cannot write " + p.string());
  }
  f << content;
  f.close();
  file(rel);
}

std::string BundleWriter::finish(const json &meta, const std::string &name)
{
  std::sort(entries_.begin(), entries_.end(), [](auto const &a, auto const &b) { return a.path < b.path; });
  json files = json::array();
  for (auto const &e : entries_) {
    files.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  }
  json doc = meta;
  doc["files"] = files;
  auto const text = doc.dump(2) + "\n";
  auto const checksum = sha256_hex(text);
  auto const sum_name = name == "manifest.json" ? std::string("bundle.sha256") : fs::path(name).stem().string() + ".sha256";
  std::ofstream(path(name), std::ios::binary | std::ios::trunc) << text;
  std::ofstream(path(sum_name), std::ios::binary | std::ios::trunc) << checksum << "  " << name << "\n";
  return checksum;
}

// ---------------------------------------------------------------------------

namespace {

constexpr ContrastKind kKinds[] = {ContrastKind::T1, ContrastKind::T2, ContrastKind::PD};

/// CP scan-parameter set each BOGA contrast is compared against.
SpId reference_sp(ContrastKind k)
{
  switch (k) {
  case ContrastKind::T1: return SpId::SP1;
  case ContrastKind::T2: return SpId::SP3;
  case ContrastKind::PD: return SpId::SP2;
  }
  return SpId::SP2;
}

RealVolume mask_to_volume(const Mask &m)
{
  RealVolume v(m.grid());
  for (Index n = 0; n < m.size(); n++) {
    v[n] = m[n] ? 1.0 : 0.0;
  }
  return v;
}

Window slice_window(const RealVolume &v, Index k)
{
  auto const &g = v.grid();
  std::vector<double> vals;
  for (Index j = 0; j < g.ny; j++) {
    for (Index i = 0; i < g.nx; i++) {
      Index const n = g.index(i, j, k);
      if (v.valid(n) && v[n] > 0.0 && std::isfinite(v[n])) {
        vals.push_back(v[n]);
      }
    }
  }
  if (vals.empty()) {
    return {0.0, 1.0};
  }
  auto const pos = vals.begin() + static_cast<std::ptrdiff_t>(0.99 * static_cast<double>(vals.size() - 1));
  std::nth_element(vals.begin(), pos, vals.end());
  return {0.0, *pos > 0.0 ? *pos : 1.0};
}

void render(BundleWriter &out, const std::string &rel, const RealVolume &v, const Mask *mask)
{
  Index const k = v.grid().nz / 2;
  auto const w = slice_window(v, k);
  auto const img = mask ? render_slice(v, Axis::Z, k, w, *mask) : render_slice(v, Axis::Z, k, w);
  fs::create_directories(out.path(rel).parent_path());
  write_pgm(img, out.path(rel));
  out.file(rel);
}

/// Segment of a line through the grid centre that crosses tissue.
std::optional<LineSpec> tissue_line(const Phantom &ph, Axis axis)
{
  auto const &g = ph.grid();
  Index const cx = g.nx / 2, cy = g.ny / 2, cz = g.nz / 2;
  LineSpec line;
  line.axis = axis;
  switch (axis) {
  case Axis::X: line.a = cy; line.b = cz; break;
  case Axis::Y: line.a = cx; line.b = cz; break;
  case Axis::Z: line.a = cx; line.b = cy; break;
  }
  Index first = -1, last = -1;
  for (Index t = 0; t < g.extent(axis); t++) {
    if (ph.tissue_at(line.voxel(g, t)).pd > 0.0) {
      first = first < 0 ? t : first;
      last = t;
    }
  }
  if (first < 0) {
    return std::nullopt;
  }
  line.begin = first;
  line.end = last + 1;
  return line;
}


} // namespace

void emit_phantom(BundleWriter &out, const Phantom &ph)
{
  out.volume("phantom/labels", ph.label_map());
  out.volume("phantom/t1", ph.t1_map());
  out.volume("phantom/t2", ph.t2_map());
  out.volume("phantom/pd", ph.pd_map());
  json tissues = json::array();
  for (auto const &t : ph.tissues) {
    tissues.push_back(tissue_json(t));
  }
  out.text("phantom/tissues.json", json{{"tissues", tissues}, {"warnings", ph.warnings}}.dump(2) + "\n");
}

void emit_fields(BundleWriter &out, const FieldSet &f)
{
  out.volume("fields/h1", f.h1);
  out.volume("fields/h2", f.h2);
  out.volume("fields/cp", f.cp);
  out.volume("fields/envelope", f.envelope);
}

void emit_acquisitions(BundleWriter &out, const std::string &protocol, const AcquisitionSet &acq)
{
  json entries = json::array();
  for (auto const &[key, e] : acq.entries()) {
    auto const name = acquisition_name(key);
    out.volume(protocol + "/acquisitions/" + name, e.image);
    entries.push_back({{"name", name}, {"mode", to_string(key.mode)}, {"sp", to_string(key.sp)}, {"tse_factor", e.tse_factor}});
  }
  out.text(protocol + "/acquisitions/set.json",
           json{{"protocol", protocol}, {"tse_factor", acq.tse_factor()}, {"entries", entries}}.dump(2) + "\n");
}

std::vector<Reconstruction> reconstruct_all(const AcquisitionSet &acq, Convention convention)
{
  std::vector<Reconstruction> out;
  for (auto const kind : kKinds) {
    out.push_back(reconstruct_contrast(acq, kind, convention));
  }
  return out;
}

void emit_reconstructions(BundleWriter &out, const std::string &protocol, const std::vector<Reconstruction> &recs)
{
  for (auto const &r : recs) {
    auto const dir = protocol + "/boga/" + to_string(r.kind) + "/";
    out.volume(dir + "S1", r.s1);
    out.volume(dir + "S2", r.s2);
    out.volume(dir + "S3", r.vc.s3);
    out.volume(dir + "S4", r.vc.s4);
    out.volume(dir + "image", r.image);
    out.text(dir + "recon.json", json{{"kind", to_string(r.kind)},
                                      {"convention", to_string(r.convention)},
                                      {"tse_factor", r.tse_factor}}
                                     .dump(2) +
                                   "\n");
  }
}

json analyze_protocol(BundleWriter &out, const std::string &protocol, const Phantom &ph, const Mask &hole,
                      const AcquisitionSet &acq, const std::vector<Reconstruction> &recs, const Mask &display)
{
  auto const &g = ph.grid();
  auto const dir = protocol + "/analysis/";

  std::vector<std::pair<std::string, Mask>> regions;
  {
    std::vector<std::int32_t> brain;
    for (std::size_t c = 0; c < ph.tissues.size(); c++) {
      if (ph.tissues[c].pd > 0.0) {
        brain.push_back(static_cast<std::int32_t>(c));
      }
    }
    regions.emplace_back("brain", mask_from_labels(ph.labels, brain));
    for (auto const c : brain) {
      std::int32_t const one[] = {c};
      regions.emplace_back(ph.tissues[static_cast<std::size_t>(c)].name, mask_from_labels(ph.labels, one));
    }
  }

  json summary;
  summary["tse_factor"] = acq.tse_factor();
  std::vector<StatsRow> rows;
  auto add_stats = [&](const std::string &image, const SNRMap &m) {
    for (auto const &[name, region] : regions) {
      try {
        rows.push_back({image, region_stats(m, region, name)});
      } catch (const Error &e) {
        if (e.kind() != ErrorKind::EmptyRegion) {
          throw;
        }
      }
    }
  };
  auto add_cov = [&](const std::string &image, const RealVolume &mag) {
    json cov;
    for (auto const &[name, region] : regions) {
      if (name == "brain") {
        continue;
      }
      try {
        cov[name] = coefficient_of_variation(mag, region & ~hole);
      } catch (const Error &) {
        cov[name] = nullptr;
      }
    }
    summary["cov_outside_hole"][image] = cov;
  };

  for (SpId sp : {SpId::SP1, SpId::SP2, SpId::SP3}) {
    auto const name = std::string("cp_") + to_string(sp);
    auto const mag = magnitude(acq.get({RfMode::CP, sp}));
    auto const snr = scale_cp_snr(snr_map(mag, name, true));
    out.volume(dir + "snr_" + name, snr.snr);
    add_stats(name + "_x_sqrt2", snr);
    add_cov(name, mag);
    render(out, dir + "render/" + name + ".pgm", mag, nullptr);
    render(out, dir + "render/snr_" + name + ".pgm", snr.snr, nullptr);
  }

  for (auto const &r : recs) {
    auto const name = std::string("boga_") + to_string(r.kind);
    auto const mag = magnitude(r.image);
    auto const snr = snr_map(mag, name, false);
    out.volume(dir + "snr_" + name, snr.snr);
    add_stats(name, snr);
    add_cov(name, mag);
    render(out, dir + "render/" + name + ".pgm", mag, &display);
    render(out, dir + "render/snr_" + name + ".pgm", snr.snr, nullptr);

    auto const cp_mag = magnitude(acq.get({RfMode::CP, reference_sp(r.kind)}));
    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
      auto const line = tissue_line(ph, axis);
      if (!line) {
        continue;
      }
      auto const suffix = std::string("_") + to_string(axis);
      for (auto const &[label, vol] :
           {std::pair{name, &mag}, std::pair{std::string("cp_") + to_string(reference_sp(r.kind)), &cp_mag}}) {
        try {
          auto const prof = normalized_profile(*vol, *line);
          auto const rel = dir + "profile_" + std::string(to_string(r.kind)) + "_" + label + suffix + ".csv";
          write_profile_csv(prof, out.path(rel));
          out.file(rel);
          summary["profile_max_deviation"][std::string(to_string(r.kind)) + "_" + label + suffix] =
            prof.max_deviation();
        } catch (const Error &e) {
          if (e.kind() != ErrorKind::ZeroMeanProfile) {
            throw;
          }
        }
      }
    }
  }

  write_stats_csv(rows, out.path(dir + "stats.csv"));
  out.file(dir + "stats.csv");
  json table;
  for (auto const &r : rows) {
    table[r.image][r.stats.label] = r.stats.formatted();
  }
  summary["snr_table"] = table;
  (void)g;
  return summary;
}

// ---------------------------------------------------------------------------

Phantom load_phantom(const fs::path &root)
{
  Phantom ph;
  auto const labels = load_real_volume(root / "phantom" / "labels");
  ph.labels = LabelVolume(labels.grid());
  for (Index n = 0; n < labels.size(); n++) {
    ph.labels[n] = static_cast<std::int32_t>(std::lround(labels[n]));
  }
  std::ifstream f(root / "phantom" / "tissues.json");
  if (!f) {
    throw Error(ErrorKind::Io, "missing phantom/tissues.json under " + root.string());
  }
  auto const doc = json::parse(f);
  ph.tissues = parse_tissues(Node(doc, "").at("tissues"));
  for (Index n = 0; n < ph.labels.size(); n++) {
    if (ph.labels[n] < 0 || static_cast<std::size_t>(ph.labels[n]) >= ph.tissues.size()) {
      throw Error(ErrorKind::DimMismatch, "label volume references an undefined tissue");
    }
  }
  return ph;
}

AcquisitionSet load_acquisitions(const fs::path &root, const std::string &protocol)
{
  auto const dir = root / protocol / "acquisitions";
  std::ifstream f(dir / "set.json");
  if (!f) {
    throw Error(ErrorKind::MissingAcquisition, "no acquisition set at " + dir.string());
  }
  auto const doc = json::parse(f);
  AcquisitionSet set(doc.at("tse_factor").get<int>());
  for (auto const &e : doc.at("entries")) {
    AcqKey const key{parse_rf_mode(e.at("mode").get<std::string>()), parse_sp_id(e.at("sp").get<std::string>())};
    set.insert(key, load_complex_volume(dir / e.at("name").get<std::string>()), e.at("tse_factor").get<int>());
  }
  return set;
}

std::vector<Reconstruction> load_reconstructions(const fs::path &root, const std::string &protocol)
{
  std::vector<Reconstruction> out;
  for (auto const kind : kKinds) {
    auto const dir = root / protocol / "boga" / to_string(kind);
    std::ifstream f(dir / "recon.json");
    if (!f) {
      throw Error(ErrorKind::MissingAcquisition, "no reconstruction at " + dir.string());
    }
    auto const doc = json::parse(f);
    out.push_back(Reconstruction{kind, parse_convention(doc.at("convention").get<std::string>()),
                                 doc.at("tse_factor").get<int>(), load_complex_volume(dir / "S1"),
                                 load_complex_volume(dir / "S2"),
                                 VirtualChannelPair{load_complex_volume(dir / "S3"), load_complex_volume(dir / "S4")},
                                 load_complex_volume(dir / "image")});
  }
  return out;
}

std::vector<std::string> list_protocols(const fs::path &root)
{
  std::vector<std::string> out;
  if (!fs::is_directory(root)) {
    return out;
  }
  for (auto const &e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "acquisitions" / "set.json")) {
      out.push_back(e.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ReportBundle run_experiment(const ExperimentConfig &cfg)
{
  set_thread_count(cfg.threads);
  if (cfg.protocols.empty()) {
    throw Error(ErrorKind::Config, "no protocols configured");
  }
  std::set<int> factors;
  for (auto const &p : cfg.protocols) {
    p.validate();
    factors.insert(p.train.tse_factor);
  }
  if (factors.size() != cfg.protocols.size()) {
    throw Error(ErrorKind::MixedTseFactor, "each protocol must use a distinct TSE factor");
  }

  BundleWriter out(cfg.output_dir);

  auto const audit = audit_conventions(Grid(cfg.audit_size, cfg.audit_size, cfg.audit_size), cfg.audit_trials,
                                       cfg.acquisition.seed);
  out.text("audit.json", audit.to_json().dump(2) + "\n");
  Convention convention = Convention::Ratio;
  std::string source = "config";
  if (cfg.convention) {
    convention = *cfg.convention;
    auto const &r = convention == Convention::Ratio ? audit.ratio : audit.verbatim;
    if (cfg.strict && !r.passed) {
      throw Error(ErrorKind::ContractViolation,
                  std::string("convention '") + to_string(convention) + "' fails the field-cancellation audit");
    }
  } else {
    convention = audit.recommended();
    source = "audit";
  }

  auto const ph = generate_phantom(cfg.phantom);
  require_same_grid(ph.grid(), cfg.grid, "phantom");
  emit_phantom(out, ph);
  auto const fields = generate_mode_fields(cfg.fields);
  require_same_grid(fields.grid(), cfg.grid, "fields");
  emit_fields(out, fields);
  Mask hole(cfg.grid);
  auto const stored_envelope = storage_rounded(fields.envelope);
  for (Index n = 0; n < hole.size(); n++) {
    hole.set(n, stored_envelope[n] < 1.0);
  }

  std::vector<AcquisitionSet> sets;
  std::vector<std::vector<Reconstruction>> recs;
  json warnings = ph.warnings;
  for (auto const &p : cfg.protocols) {
    for (auto const &sp : p.sps) {
      if (cfg.acquisition.fidelity == Fidelity::EchoTrain && !echo_schedule(p.train, sp, cfg.grid.ny).te_eff_reachable) {
        warnings.push_back(p.name + "/" + to_string(sp.id) + ": effective TE not on an echo, nearest echo used");
      }
    }
    // Later stages work on what the bundle stores, so each stage can be
    // rerun from the files alone.
    auto const simulated = simulate_set(ph, fields, p, cfg.acquisition);
    AcquisitionSet acq(p.train.tse_factor);
    for (auto const &[key, e] : simulated.entries()) {
      acq.insert(key, storage_rounded(e.image), e.tse_factor);
    }
    emit_acquisitions(out, p.name, acq);
    // The combination only ever sees the two single-channel modes.
    auto r = reconstruct_all(acq.without_cp(), convention);
    for (auto &rec : r) {
      rec.vc.s3 = storage_rounded(rec.vc.s3);
      rec.vc.s4 = storage_rounded(rec.vc.s4);
      rec.image = storage_rounded(rec.image);
    }
    emit_reconstructions(out, p.name, r);
    sets.push_back(std::move(acq));
    recs.push_back(std::move(r));
  }

  // Display mask from the CP SP2 image of the highest TSE factor.
  std::size_t top = 0;
  for (std::size_t i = 0; i < cfg.protocols.size(); i++) {
    if (cfg.protocols[i].train.tse_factor > cfg.protocols[top].train.tse_factor) {
      top = i;
    }
  }
  Mask const display = display_mask(magnitude(sets[top].get({RfMode::CP, SpId::SP2})), cfg.mask_fraction);
  out.volume("display_mask", mask_to_volume(display));

  json summary;
  for (std::size_t i = 0; i < cfg.protocols.size(); i++) {
    summary[cfg.protocols[i].name] = analyze_protocol(out, cfg.protocols[i].name, ph, hole, sets[i], recs[i], display);
  }

  json protocol_meta = json::array();
  for (auto const &p : cfg.protocols) {
    protocol_meta.push_back({{"name", p.name},
                             {"scan_time_single_mode", p.scan_time_single_mode},
                             {"scan_time_boga", p.scan_time_boga},
                             {"compressed_sense_factor", p.compressed_sense_factor}});
  }
  json meta{{"artifact", "boga-report-bundle"},
            {"schema_version", kConfigSchemaVersion},
            {"config", to_json(cfg)},
            {"convention", to_string(convention)},
            {"convention_source", source},
            {"audit", audit.to_json()},
            {"acquisition_metadata",
             {{"flip_deg", cfg.acquisition.flip_deg},
              {"refocus_deg", cfg.acquisition.refocus_deg},
              {"protocols", protocol_meta}}},
            {"summary", summary},
            {"warnings", warnings}};

  ReportBundle bundle;
  bundle.root = cfg.output_dir;
  bundle.checksum = out.finish(meta);
  bundle.files = out.entries();
  bundle.convention = convention;
  bundle.summary = summary;
  return bundle;
}

} // namespace boga
