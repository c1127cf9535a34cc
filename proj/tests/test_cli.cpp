#include <cstdlib>
#include <fstream>
#include <map>

#include <doctest.h>

#include "boga/checksum.hpp"
#include "boga/experiment.hpp"
#include "boga/volume_io.hpp"
#include "helpers.hpp"

using namespace boga;
using json = nlohmann::json;
using testing::error_kind;
using testing::TempDir;

namespace {

json minimal_config()
{
  return json::parse(R"({
    "schema_version": 1,
    "grid": {"dims": [24, 24, 24], "voxel_mm": [8.0, 8.0, 8.0]},
    "phantom": {"preset": "default-brain"},
    "fields": {"seed": 3},
    "protocol": {"presets": ["tse50", "tse100"]},
    "acquisition": {"fidelity": "model-exact", "noise_sigma": 0.01, "seed": 5},
    "combination": {"audit_trials": 2, "audit_size": 12}
  })");
}

std::string config_error(const json &doc)
{
  try {
    parse_experiment_config(doc);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

int run_cli(const std::string &args, const std::filesystem::path &log)
{
  std::string const cmd = std::string(BOGA_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int const rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("missing keys are reported by path")
{
  auto doc = minimal_config();
  doc["fields"].erase("seed");
  CHECK(config_error(doc).find("fields.seed") != std::string::npos);

  doc = minimal_config();
  doc["acquisition"].erase("noise_sigma");
  CHECK(config_error(doc).find("acquisition.noise_sigma") != std::string::npos);

  doc = minimal_config();
  doc.erase("schema_version");
  CHECK(config_error(doc).find("schema_version") != std::string::npos);

  doc = minimal_config();
  doc["schema_version"] = 2;
  CHECK(config_error(doc).find("schema_version") != std::string::npos);

  doc = minimal_config();
  doc["grid"]["dims"] = json::array({24, 24});
  CHECK(config_error(doc).find("grid.dims") != std::string::npos);

  doc = minimal_config();
  doc["fields"]["depth"] = "deep";
  CHECK(config_error(doc).find("fields.depth") != std::string::npos);

  doc = minimal_config();
  doc["protocol"]["presets"] = json::array({"tse70"});
  CHECK(config_error(doc).find("tse70") != std::string::npos);

  doc = minimal_config();
  doc["acquisition"]["fidelity"] = "exact";
  CHECK_FALSE(config_error(doc).empty());
}

TEST_CASE("preset config yields the protocol table")
{
  auto const cfg = parse_experiment_config(minimal_config());
  REQUIRE(cfg.protocols.size() == 2);
  auto const &p = cfg.protocols[0];
  CHECK(p.name == "tse50");
  CHECK(p.sp(SpId::SP1).te == 8.0);
  CHECK(p.sp(SpId::SP2).te == 8.0);
  CHECK(p.sp(SpId::SP3).te == 28.0);
  CHECK(p.sp(SpId::SP1).tr == 1500.0);
  CHECK(p.sp(SpId::SP2).tr == 2750.0);
  CHECK(p.sp(SpId::SP3).tr == 2750.0);
  CHECK(cfg.fields.seed == 3);
  CHECK_FALSE(cfg.convention.has_value());
  CHECK(cfg.mask_fraction == 2e-4);
}

TEST_CASE("canonical config document round-trips")
{
  auto cfg = parse_experiment_config(minimal_config());
  cfg.convention = Convention::Ratio;
  cfg.mask_fraction = 0.02;
  auto const doc = to_json(cfg);
  CHECK(to_json(parse_experiment_config(doc)) == doc);
  CHECK(to_json(parse_experiment_config(to_json(default_experiment_config()))) == to_json(default_experiment_config()));
  CHECK_FALSE(doc.contains("output_dir"));
  CHECK_FALSE(doc.contains("threads"));
}

TEST_CASE("shipped configs parse")
{
  for (auto const *name : {"default.json", "echo-train.json"}) {
    CAPTURE(name);
    auto const cfg = load_experiment_config(std::filesystem::path(BOGA_SOURCE_DIR) / "configs" / name);
    CHECK(cfg.protocols.size() == 2);
  }
  CHECK(error_kind([] { load_experiment_config("/nonexistent/config.json"); }) == ErrorKind::Config);
}

TEST_CASE("pipeline bundle")
{
  TempDir dir("bundle");
  auto cfg = parse_experiment_config(minimal_config());
  cfg.output_dir = dir / "a";
  auto const bundle = run_experiment(cfg);
  CHECK(bundle.convention == Convention::Ratio);

  auto const manifest = json::parse(testing::read_file(dir / "a/manifest.json"));
  std::map<std::string, int> acquisitions;
  for (auto const &f : manifest.at("files")) {
    auto const path = f.at("path").get<std::string>();
    CHECK(sha256_file(dir / "a" / path) == f.at("sha256").get<std::string>());
    auto const pos = path.find("/acquisitions/");
    if (pos != std::string::npos && path.size() > 9 && path.substr(path.size() - 9) == ".vol.json") {
      acquisitions[path.substr(0, pos)]++;
    }
  }
  CHECK(acquisitions == std::map<std::string, int>{{"tse100", 9}, {"tse50", 9}});
  CHECK(sha256_hex(testing::read_file(dir / "a/manifest.json")) == bundle.checksum);
  CHECK(testing::read_file(dir / "a/bundle.sha256").rfind(bundle.checksum, 0) == 0);
  CHECK(manifest.at("acquisition_metadata").at("protocols")[0].at("scan_time_boga") == "37 min 36 s");
  CHECK(manifest.at("convention_source") == "audit");

  SUBCASE("every volume round-trips")
  {
    int checked = 0;
    for (auto const &f : bundle.files) {
      if (f.path.size() < 9 || f.path.substr(f.path.size() - 9) != ".vol.json") {
        continue;
      }
      auto const stem = dir / "a" / f.path;
      auto const copy = dir / ("copy" + std::to_string(checked));
      std::visit([&](auto const &v) { save_volume(v, copy); }, load_volume(stem));
      auto const src = volume_paths(stem), dst = volume_paths(copy);
      REQUIRE(testing::read_file(src.header) == testing::read_file(dst.header));
      REQUIRE(testing::read_file(src.payload) == testing::read_file(dst.payload));
      checked++;
    }
    CHECK(checked > 50);
  }

  SUBCASE("identical config gives identical checksum in another directory and thread count")
  {
    cfg.output_dir = dir / "b";
    cfg.threads = 3;
    CHECK(run_experiment(cfg).checksum == bundle.checksum);
  }

  SUBCASE("loaders read the bundle back")
  {
    CHECK(list_protocols(dir / "a") == std::vector<std::string>{"tse100", "tse50"});
    auto const acq = load_acquisitions(dir / "a", "tse50");
    CHECK(acq.size() == 9);
    CHECK(acq.tse_factor() == 50);
    auto const recs = load_reconstructions(dir / "a", "tse100");
    CHECK(recs.size() == 3);
    CHECK(recs[0].tse_factor == 100);
    auto const ph = load_phantom(dir / "a");
    CHECK(ph.tissues.size() == 5);
    CHECK(ph.grid() == cfg.grid);
  }
}

TEST_CASE("pipeline errors")
{
  TempDir dir("err");
  auto cfg = parse_experiment_config(minimal_config());
  cfg.protocols = {preset_tse50(), preset_tse50()};
  cfg.protocols[1].name = "again";
  cfg.output_dir = dir / "x";
  CHECK(error_kind([&] { run_experiment(cfg); }) == ErrorKind::MixedTseFactor);

  cfg = parse_experiment_config(minimal_config());
  testing::write_file(dir / "file", "x");
  cfg.output_dir = dir / "file" / "sub";
  CHECK(error_kind([&] { run_experiment(cfg); }) == ErrorKind::Io);

  cfg = parse_experiment_config(minimal_config());
  cfg.output_dir = dir / "y";
  cfg.convention = Convention::Verbatim;
  cfg.strict = true;
  CHECK(error_kind([&] { run_experiment(cfg); }) == ErrorKind::ContractViolation);
}

TEST_CASE("command line")
{
  TempDir dir("cli");
  auto const log = dir / "log.txt";

  CHECK(run_cli("pipeline --dims 16 --out " + (dir / "p").string(), log) == 0);
  CHECK(testing::read_file(log).find("checksum:") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "p/manifest.json"));

  CHECK(run_cli("pipeline --config " + (dir / "missing.json").string(), log) == 1);

  auto doc = minimal_config();
  doc["fields"].erase("seed");
  testing::write_file(dir / "bad.json", doc.dump());
  CHECK(run_cli("pipeline --config " + (dir / "bad.json").string(), log) == 1);
  CHECK(testing::read_file(log).find("fields.seed") != std::string::npos);

  CHECK(run_cli("audit --dims 12 --trials 2", log) == 0);
  CHECK(run_cli("audit --dims 12 --trials 2 --convention verbatim --strict", log) == 2);
  CHECK(run_cli("pipeline --dims 16 --convention verbatim --strict --out " + (dir / "v").string(), log) == 2);
  CHECK(run_cli("pipeline --preset tse70", log) == 1);

  // Stage by stage into one directory, then compare with the pipeline run.
  testing::write_file(dir / "good.json", minimal_config().dump());
  auto const s = dir / "stages";
  auto const cfgarg = " --config " + (dir / "good.json").string() + " ";
  CHECK(run_cli("phantom" + cfgarg + "--out " + s.string(), log) == 0);
  CHECK(run_cli("fields" + cfgarg + "--out " + s.string(), log) == 0);
  CHECK(run_cli("simulate" + cfgarg + "--out " + s.string(), log) == 0);
  CHECK(run_cli("combine" + cfgarg + "--in " + s.string(), log) == 0);
  CHECK(run_cli("analyze" + cfgarg + "--in " + s.string(), log) == 0);
  CHECK(run_cli("pipeline" + cfgarg + "--out " + (dir / "whole").string(), log) == 0);
  for (std::string const rel : {"tse50/boga/T2/image.vol.raw", "tse100/acquisitions/cp_sp1.vol.raw", "phantom/labels.vol.raw",
                          "tse50/analysis/stats.csv", "tse100/analysis/profile_T1_boga_T1_x.csv"}) {
    CAPTURE(rel);
    REQUIRE(std::filesystem::exists(s / rel));
    CHECK(testing::read_file(s / rel) == testing::read_file(dir / "whole" / rel));
  }
  CHECK(run_cli("combine --in " + (dir / "empty").string(), log) == 1);
}
