#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxmorph/compare.hpp"
#include "voxmorph/io_util.hpp"
#include "voxmorph/pipeline.hpp"

using namespace voxmorph;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = VOXMORPH_FIXTURES_DIR;

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("voxmorph_pipe_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

PipelineConfig scene_config(const fs::path& out) {
  PipelineConfig cfg;
  cfg.phantom = "scene";
  cfg.scene_k = 3;
  cfg.dim_x = cfg.dim_y = cfg.dim_z = 64;
  cfg.seed = 14;
  cfg.noise_sigma = 0.02;
  cfg.out_dir = out.string();
  cfg.manual_path = kFixtures + "/M_paths.csv";
  cfg.ilastik_path = kFixtures + "/i_objects.csv";
  cfg.um_per_px = 0.3;
  return cfg;
}

void expect_config_error(PipelineConfig cfg) {
  try {
    run_pipeline(cfg);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
}

} // namespace

TEST_CASE("identical configurations produce byte-identical outputs") {
  fs::path a = fresh_dir("det_a");
  fs::path b = fresh_dir("det_b");
  RunResult ra = run_pipeline(scene_config(a));
  RunResult rb = run_pipeline(scene_config(b));

  CHECK(ra.n_cells == 3);
  CHECK(ra.n_cells == rb.n_cells);
  CHECK(ra.warnings.empty());
  CHECK(ra.cell_errors.empty());

  REQUIRE(ra.written.size() == 4);
  REQUIRE(rb.written.size() == 4);
  const char* names[] = {"D_cells.csv", "truth.json", "report.json", "centroids.svg"};
  for (int i = 0; i < 4; ++i) {
    CAPTURE(names[i]);
    CHECK(fs::path(ra.written[i]).filename() == names[i]);
    std::string fa = read_file(a / names[i]);
    std::string fb = read_file(b / names[i]);
    CHECK(fa == fb);
    CHECK_FALSE(fa.empty());
  }

  // a different seed must change the image-derived outputs
  PipelineConfig other = scene_config(fresh_dir("det_c"));
  other.seed = 15;
  RunResult rc = run_pipeline(other);
  REQUIRE(rc.written.size() == 4);
  CHECK(read_file(fs::path(rc.written[1])) != read_file(a / "truth.json"));
}

TEST_CASE("feature table round-trips through the table parser") {
  fs::path dir = fresh_dir("roundtrip");
  run_pipeline(scene_config(dir));

  // the trailing provenance comment must be transparent to the parser
  std::string csv = read_file(dir / "D_cells.csv");
  CHECK(csv.find("# provenance: voxmorph") != std::string::npos);
  auto rows = parse_morph(csv);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].cell_id == i + 1);
    CHECK(rows[i].cell_volume_um3 > 0);
    CHECK(rows[i].territory_volume_um3 > 0);
  }
}

TEST_CASE("ground-truth sidecar carries per-cell expectations") {
  fs::path dir = fresh_dir("truth");
  run_pipeline(scene_config(dir));

  nlohmann::json j = nlohmann::json::parse(read_file(dir / "truth.json"));
  CHECK(j["schema"] == "phantom-truth/1");
  CHECK(j["provenance"]["tool"] == "voxmorph");
  CHECK(j["provenance"]["config_hash"] == config_hash_hex(scene_config(dir)));
  CHECK(j["seed"] == 14);
  REQUIRE(j["cells"].is_array());
  REQUIRE(j["cells"].size() == 3);
  for (const auto& c : j["cells"]) {
    CHECK(c["n_voxels"].get<long long>() > 0);
    CHECK(c["expected_endpoints"] == 2); // straight processes
    CHECK(c["expected_branchpoints"] == 0);
    CHECK(c["expected_skeleton_length_um"].get<double>() > 0);
  }

  // diffuse somata have no skeleton expectations: the fields stay null
  fs::path bdir = fresh_dir("truth_blob");
  PipelineConfig bc;
  bc.phantom = "blob";
  bc.out_dir = bdir.string();
  run_pipeline(bc);
  nlohmann::json bj = nlohmann::json::parse(read_file(bdir / "truth.json"));
  REQUIRE(bj["cells"].size() == 2);
  for (const auto& c : bj["cells"]) {
    CHECK(c["expected_endpoints"].is_null());
    CHECK(c["expected_branchpoints"].is_null());
    CHECK(c["expected_skeleton_length_um"].is_null());
  }
}

TEST_CASE("comparison report in the output directory validates") {
  fs::path dir = fresh_dir("report");
  run_pipeline(scene_config(dir));
  nlohmann::json j = nlohmann::json::parse(read_file(dir / "report.json"));
  CHECK_NOTHROW(validate_report_json(j));
  REQUIRE(j["methods"].size() == 3);
  REQUIRE(j["matches"].size() == 2); // morph-vs-manual and ilastik-vs-manual
  CHECK(j["provenance"]["config_hash"] == config_hash_hex(scene_config(dir)));

  std::string svg = read_file(dir / "centroids.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("ilastik") != std::string::npos); // pixel series is convertible
}

TEST_CASE("bad comparison inputs fail before anything is written") {
  fs::path dir = fresh_dir("nowrite");

  PipelineConfig missing = scene_config(dir);
  missing.manual_path = (dir / "does_not_exist.csv").string();
  try {
    run_pipeline(missing);
    FAIL("expected not_found");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
  }
  CHECK(fs::is_empty(dir));

  fs::path bad_csv = dir / "bad_manual.csv";
  write_file_atomic(bad_csv, "path_id,name\n1,x\n");
  PipelineConfig bad = scene_config(dir);
  bad.manual_path = bad_csv.string();
  try {
    run_pipeline(bad);
    FAIL("expected schema");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema);
  }
  // nothing but the bad input itself
  int entries = 0;
  for (const auto& ent : fs::directory_iterator(dir)) {
    (void)ent;
    ++entries;
  }
  CHECK(entries == 1);
}

TEST_CASE("configuration mistakes are rejected up front") {
  fs::path dir = fresh_dir("cfg");
  auto base = [&] {
    PipelineConfig c;
    c.phantom = "tube";
    c.out_dir = dir.string();
    return c;
  };

  { PipelineConfig c = base(); c.connectivity = 4; expect_config_error(c); }
  { PipelineConfig c = base(); c.min_voxels = 0; expect_config_error(c); }
  { PipelineConfig c = base(); c.max_volume_um3 = 0.0; expect_config_error(c); }
  { PipelineConfig c = base(); c.k_max = 1; expect_config_error(c); }
  { PipelineConfig c = base(); c.spacing = Spacing{0.5, 0.0, 0.5}; expect_config_error(c); }
  { PipelineConfig c = base(); c.radius_match_um = 0.0; expect_config_error(c); }
  { PipelineConfig c = base(); c.phantom = ""; c.input = ""; expect_config_error(c); }
  { PipelineConfig c = base(); c.manual_mode = "center"; expect_config_error(c); }
  { PipelineConfig c = base(); c.phantom = "sphere"; expect_config_error(c); }
  { PipelineConfig c = base(); c.phantom = "scene"; c.scene_kind = "cube"; expect_config_error(c); }
  { PipelineConfig c = base(); c.threshold = "0.5x"; expect_config_error(c); }
  { PipelineConfig c = base(); c.threshold = "1.7"; expect_config_error(c); }

  // a valid tube run in the same directory still works afterwards
  PipelineConfig ok = base();
  RunResult r = run_pipeline(ok);
  CHECK(r.n_cells == 1);
}

TEST_CASE("empty segmentations still produce a parseable table") {
  fs::path dir = fresh_dir("empty");
  PipelineConfig c;
  c.phantom = "tube";
  c.out_dir = dir.string();
  c.min_voxels = 1000000000LL; // larger than any component
  RunResult r = run_pipeline(c);
  CHECK(r.n_cells == 0);
  auto rows = parse_morph_file(dir / "D_cells.csv");
  CHECK(rows.empty());

  // the truth sidecar still records the generated cell
  nlohmann::json j = nlohmann::json::parse(read_file(dir / "truth.json"));
  CHECK(j["cells"].size() == 1);
}

TEST_CASE("config hash is stable, sensitive, and output-location independent") {
  PipelineConfig a = scene_config("/tmp/x");
  PipelineConfig b = scene_config("/tmp/y"); // only out_dir differs
  CHECK(config_hash_hex(a) == config_hash_hex(b));
  CHECK(config_hash_hex(a).size() == 16);

  PipelineConfig c = a;
  c.seed = 999;
  CHECK(config_hash_hex(c) != config_hash_hex(a));
  PipelineConfig d = a;
  d.threshold = "0.25";
  CHECK(config_hash_hex(d) != config_hash_hex(a));

  std::string canon = config_canonical_string(a);
  CHECK(canon.find("seed=14\n") != std::string::npos);
  CHECK(canon.find("phantom=scene\n") != std::string::npos);
}
