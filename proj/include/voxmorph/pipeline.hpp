#pragma once

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxmorph/compare.hpp"
#include "voxmorph/errors.hpp"
#include "voxmorph/morphometry.hpp"
#include "voxmorph/phantom.hpp"
#include "voxmorph/report.hpp"
#include "voxmorph/segmentation.hpp"
#include "voxmorph/svg.hpp"
#include "voxmorph/version.hpp"
#include "voxmorph/volume_io.hpp"

namespace voxmorph {

// Effective configuration of a full `run`. Field defaults are the documented
// CLI defaults; the canonical serialization below is what gets hashed into
// every output's provenance block.
struct PipelineConfig {
  std::string input;   // stack path; ignored when a phantom is requested
  std::string phantom; // "" | "tube" | "y" | "blob" | "scene"

  // phantom parameters
  int scene_k = 10;
  double min_gap_um = 5.0;
  std::string scene_kind = "tube";
  double tube_length_um = 12.0;
  double radius_um = 1.0;
  double y_arm_um = 12.0;
  double blob_separation_um = 4.0;
  double blob_sigma_um = 1.4;
  bool blob_merged = true;
  double noise_sigma = 0.0;
  int dim_x = 128, dim_y = 128, dim_z = 128;

  Spacing spacing{0.5, 0.5, 0.5};
  std::string threshold = "auto"; // "auto" or a numeric literal in [0, 1]
  int connectivity = 26;
  long long min_voxels = 8;
  double max_volume_um3 = 1e12; // effectively "never split" unless lowered
  int k_max = 4;
  std::uint64_t seed = 1;
  std::string out_dir = ".";

  // comparison leg
  std::string manual_path;
  std::string ilastik_path;
  std::optional<double> um_per_px;
  double radius_match_um = 10.0;
  std::string manual_mode = "midpoint"; // or "start"
};

inline std::string config_canonical_string(const PipelineConfig& c) {
  std::string s;
  auto kv = [&](const char* k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  };
  kv("input", c.input);
  kv("phantom", c.phantom);
  kv("scene_k", std::to_string(c.scene_k));
  kv("min_gap_um", format_number(c.min_gap_um));
  kv("scene_kind", c.scene_kind);
  kv("tube_length_um", format_number(c.tube_length_um));
  kv("radius_um", format_number(c.radius_um));
  kv("y_arm_um", format_number(c.y_arm_um));
  kv("blob_separation_um", format_number(c.blob_separation_um));
  kv("blob_sigma_um", format_number(c.blob_sigma_um));
  kv("blob_merged", c.blob_merged ? "1" : "0");
  kv("noise_sigma", format_number(c.noise_sigma));
  kv("dims", std::to_string(c.dim_x) + "," + std::to_string(c.dim_y) + "," +
                 std::to_string(c.dim_z));
  kv("spacing", format_number(c.spacing.sx) + "," + format_number(c.spacing.sy) + "," +
                    format_number(c.spacing.sz));
  kv("threshold", c.threshold);
  kv("connectivity", std::to_string(c.connectivity));
  kv("min_voxels", std::to_string(c.min_voxels));
  kv("max_volume_um3", format_number(c.max_volume_um3));
  kv("k_max", std::to_string(c.k_max));
  kv("seed", std::to_string(c.seed));
  kv("manual", c.manual_path);
  kv("ilastik", c.ilastik_path);
  kv("um_per_px", c.um_per_px ? format_number(*c.um_per_px) : "");
  kv("radius_match_um", format_number(c.radius_match_um));
  kv("manual_mode", c.manual_mode);
  return s;
}

inline std::string config_hash_hex(const PipelineConfig& c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(config_canonical_string(c)));
  return buf;
}

struct RunResult {
  int n_cells = 0;
  std::vector<std::string> written; // output paths, in write order
  std::vector<std::string> warnings;
  std::vector<CellError> cell_errors;
};

namespace detail {

inline nlohmann::ordered_json truth_to_json(const PhantomTruth& truth,
                                            const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["schema"] = "phantom-truth/1";
  nlohmann::ordered_json prov;
  prov["tool"] = "voxmorph";
  prov["version"] = kVersion;
  prov["config_hash"] = config_hash;
  j["provenance"] = std::move(prov);
  j["seed"] = truth.seed;
  j["noise_sigma"] = truth.noise_sigma;
  j["dims"] = {truth.dims.nx, truth.dims.ny, truth.dims.nz};
  j["spacing"] = {truth.spacing.sx, truth.spacing.sy, truth.spacing.sz};
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : truth.cells) {
    nlohmann::ordered_json cj;
    cj["centroid_um"] = {c.centroid_um.x, c.centroid_um.y, c.centroid_um.z};
    cj["n_voxels"] = c.mask.size();
    cj["expected_endpoints"] =
        c.expected_endpoints ? nlohmann::ordered_json(*c.expected_endpoints)
                             : nlohmann::ordered_json(nullptr);
    cj["expected_branchpoints"] =
        c.expected_branchpoints ? nlohmann::ordered_json(*c.expected_branchpoints)
                                : nlohmann::ordered_json(nullptr);
    cj["expected_skeleton_length_um"] =
        c.expected_skeleton_length_um
            ? nlohmann::ordered_json(*c.expected_skeleton_length_um)
            : nlohmann::ordered_json(nullptr);
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  return j;
}

inline std::pair<VoxelGrid, PhantomTruth> make_phantom_from_config(
    const PipelineConfig& c) {
  if (c.phantom == "tube")
    return make_tube(c.tube_length_um, c.radius_um, c.spacing);
  if (c.phantom == "y")
    return make_y_cell(c.y_arm_um, c.radius_um, c.spacing);
  if (c.phantom == "blob")
    return make_blob_pair(c.blob_separation_um, c.blob_sigma_um, c.spacing,
                          c.blob_merged);
  if (c.phantom == "scene") {
    SceneSpec spec;
    spec.dims = Dims{c.dim_x, c.dim_y, c.dim_z};
    spec.spacing = c.spacing;
    spec.k = c.scene_k;
    spec.min_gap_um = c.min_gap_um;
    if (c.scene_kind == "tube") spec.kind = CellKind::tube;
    else if (c.scene_kind == "y") spec.kind = CellKind::y;
    else if (c.scene_kind == "blob") spec.kind = CellKind::blob;
    else throw Error(ErrorKind::config, "unknown scene cell kind: " + c.scene_kind);
    spec.seed = c.seed;
    spec.tube_length_um = c.tube_length_um;
    spec.radius_um = c.radius_um;
    spec.y_arm_um = c.y_arm_um;
    return make_scene(spec);
  }
  throw Error(ErrorKind::config, "unknown phantom kind: " + c.phantom);
}

inline double resolve_threshold(const PipelineConfig& c, const VoxelGrid& grid) {
  if (c.threshold == "auto") return otsu_threshold(grid);
  char* end = nullptr;
  double t = std::strtod(c.threshold.c_str(), &end);
  if (end == c.threshold.c_str() || *end != '\0')
    throw Error(ErrorKind::config, "threshold must be 'auto' or a number in [0, 1]");
  if (t < 0.0 || t > 1.0)
    throw Error(ErrorKind::config, "threshold value outside [0, 1]");
  return t;
}

} // namespace detail

// The full run: (phantom | load) -> normalize -> threshold -> label ->
// filter -> split -> analyze -> write. Comparison inputs are parsed before
// anything is written so a bad input never leaves partial outputs; the
// writes themselves are atomic.
inline RunResult run_pipeline(const PipelineConfig& cfg) {
  if (cfg.connectivity != 6 && cfg.connectivity != 18 && cfg.connectivity != 26)
    throw Error(ErrorKind::config, "connectivity must be 6, 18 or 26");
  if (cfg.min_voxels < 1)
    throw Error(ErrorKind::config, "min_voxels must be >= 1");
  if (cfg.max_volume_um3 <= 0)
    throw Error(ErrorKind::config, "max_volume_um3 must be positive");
  if (cfg.k_max < 2)
    throw Error(ErrorKind::config, "k_max must be >= 2");
  if (!cfg.spacing.valid())
    throw Error(ErrorKind::config, "spacing must be positive on all axes");
  if (cfg.radius_match_um <= 0)
    throw Error(ErrorKind::config, "match radius must be positive");
  if (cfg.phantom.empty() && cfg.input.empty())
    throw Error(ErrorKind::config, "either an input stack or a phantom is required");
  if (cfg.manual_mode != "midpoint" && cfg.manual_mode != "start")
    throw Error(ErrorKind::config, "manual_mode must be 'midpoint' or 'start'");

  const std::string hash = config_hash_hex(cfg);
  const std::filesystem::path out_dir = cfg.out_dir.empty() ? "." : cfg.out_dir;

  // comparison inputs first: fail before any writes
  std::optional<std::vector<ManualPath>> manual;
  if (!cfg.manual_path.empty()) manual = parse_manual_file(cfg.manual_path);
  std::optional<std::vector<IlastikObject>> ilastik;
  if (!cfg.ilastik_path.empty()) ilastik = parse_ilastik_file(cfg.ilastik_path);

  // image leg
  std::optional<PhantomTruth> truth;
  VoxelGrid grid;
  if (!cfg.phantom.empty()) {
    auto [g, t] = detail::make_phantom_from_config(cfg);
    grid = std::move(g);
    truth = std::move(t);
    if (cfg.noise_sigma > 0) {
      grid = add_noise(grid, cfg.noise_sigma, cfg.seed);
      truth->noise_sigma = cfg.noise_sigma;
    }
  } else {
    auto [g, meta] = load_stack(cfg.input, cfg.spacing);
    grid = std::move(g);
    (void)meta;
    grid = normalize(grid);
  }

  double threshold = detail::resolve_threshold(cfg, grid);
  BinaryVolume binary = binarize(grid, threshold);
  LabelVolume labels = label_components(binary, cfg.connectivity);
  labels = filter_small(labels, cfg.min_voxels);
  SplitResult split = split_oversized(labels, cfg.max_volume_um3, cfg.k_max, cfg.seed);
  labels = std::move(split.labels);

  CellAnalysis analysis = analyze_cells(labels);

  RunResult result;
  result.n_cells = static_cast<int>(labels.k);
  for (const auto& w : split.warnings)
    result.warnings.push_back("label " + std::to_string(w.label) + ": " + w.message);
  result.cell_errors = analysis.errors;

  const std::string prov_line = "voxmorph " + std::string(kVersion) + " config=" + hash;

  // D_ feature table
  {
    std::filesystem::path p = out_dir / "D_cells.csv";
    std::string csv = to_morph_csv(analysis.rows);
    csv += "# provenance: " + prov_line + "\n";
    write_file_atomic(p, csv);
    result.written.push_back(p.string());
  }

  if (truth) {
    std::filesystem::path p = out_dir / "truth.json";
    write_file_atomic(p, detail::truth_to_json(*truth, hash).dump(2) + "\n");
    result.written.push_back(p.string());
  }

  if (manual || ilastik) {
    CompareOptions copts;
    copts.um_per_px = cfg.um_per_px;
    copts.radius_um = cfg.radius_match_um;
    copts.manual_mode = cfg.manual_mode == "start" ? ManualPointMode::start
                                                   : ManualPointMode::midpoint;
    ComparisonReport report =
        summarize(manual, ilastik, std::optional{analysis.rows}, copts);
    report.provenance.config_hash = hash;
    if (!cfg.input.empty()) report.provenance.inputs.push_back({"stack", cfg.input});
    if (!cfg.phantom.empty())
      report.provenance.inputs.push_back({"phantom", cfg.phantom});
    if (!cfg.manual_path.empty())
      report.provenance.inputs.push_back({"manual", cfg.manual_path});
    if (!cfg.ilastik_path.empty())
      report.provenance.inputs.push_back({"ilastik", cfg.ilastik_path});

    std::filesystem::path pj = out_dir / "report.json";
    write_file_atomic(pj, report_to_json(report).dump(2) + "\n");
    result.written.push_back(pj.string());

    // centroid scatter: microns only; pixel series included when convertible
    std::vector<ScatterSeries> series;
    {
      ScatterSeries s;
      s.name = "morph";
      for (const auto& r : analysis.rows)
        s.points.push_back({r.centroid_um.x, r.centroid_um.y});
      series.push_back(std::move(s));
    }
    if (manual) {
      ScatterSeries s;
      s.name = "manual";
      for (const auto& p : reference_points(*manual, copts.manual_mode))
        s.points.push_back({p.x, p.y});
      series.push_back(std::move(s));
    }
    if (ilastik && cfg.um_per_px) {
      ScatterSeries s;
      s.name = "ilastik";
      for (const auto& o : *ilastik)
        s.points.push_back({o.centroid_x * *cfg.um_per_px, o.centroid_y * *cfg.um_per_px});
      series.push_back(std::move(s));
    }
    std::filesystem::path ps = out_dir / "centroids.svg";
    write_file_atomic(ps, render_scatter_svg("centroid positions", "x (um)", "y (um)",
                                             series, "provenance: " + prov_line));
    result.written.push_back(ps.string());
  }

  return result;
}

} // namespace voxmorph
