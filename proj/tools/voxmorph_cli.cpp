// Command-line front end: phantom generation, segmentation, skeleton dumps,
// per-cell features, method comparison, and the full pipeline. Exit codes:
// 0 success, 2 configuration error, 3 input error, 4 processing error.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voxmorph/compare.hpp"
#include "voxmorph/errors.hpp"
#include "voxmorph/morphometry.hpp"
#include "voxmorph/phantom.hpp"
#include "voxmorph/pipeline.hpp"
#include "voxmorph/report.hpp"
#include "voxmorph/segmentation.hpp"
#include "voxmorph/skeleton.hpp"
#include "voxmorph/skeleton_graph.hpp"
#include "voxmorph/svg.hpp"
#include "voxmorph/version.hpp"
#include "voxmorph/volume_io.hpp"

namespace {

using namespace voxmorph;

Spacing parse_spacing(const std::string& s) {
  Spacing sp{};
  double v[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t comma = i < 2 ? s.find(',', pos) : s.size();
    if (comma == std::string::npos)
      throw Error(ErrorKind::config, "spacing must be sx,sy,sz");
    std::string part = s.substr(pos, comma - pos);
    char* end = nullptr;
    v[i] = std::strtod(part.c_str(), &end);
    if (end == part.c_str() || *end != '\0')
      throw Error(ErrorKind::config, "bad spacing component: '" + part + "'");
    pos = comma + 1;
  }
  sp.sx = v[0];
  sp.sy = v[1];
  sp.sz = v[2];
  if (!sp.valid())
    throw Error(ErrorKind::config, "spacing must be positive on all axes");
  return sp;
}

Dims parse_dims(const std::string& s) {
  long long v[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t comma = i < 2 ? s.find(',', pos) : s.size();
    if (comma == std::string::npos)
      throw Error(ErrorKind::config, "dims must be nx,ny,nz");
    std::string part = s.substr(pos, comma - pos);
    char* end = nullptr;
    v[i] = std::strtoll(part.c_str(), &end, 10);
    if (end == part.c_str() || *end != '\0' || v[i] < 1)
      throw Error(ErrorKind::config, "bad dimension: '" + part + "'");
    pos = comma + 1;
  }
  return Dims{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
}

std::string invocation_hash(const std::string& canonical) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return buf;
}

// Scales a [0, 1] grid to the full sample range of the target depth.
void write_normalized_stack(const VoxelGrid& grid, const std::filesystem::path& path,
                            int bit_depth, const std::string& description) {
  VoxelGrid scaled = grid;
  const float maxv = bit_depth == 8 ? 255.0f : 65535.0f;
  for (auto& v : scaled.values) v *= maxv;
  write_stack(scaled, path, bit_depth, description);
}

struct PhantomArgs {
  std::string kind;
  std::string out = ".";
  std::string spacing = "0.5,0.5,0.5";
  std::string dims = "128,128,128";
  double length = 12.0, radius = 1.0, arm = 12.0;
  double separation = 4.0, sigma_um = 1.4;
  bool merged = true;
  int k = 10;
  double min_gap = 5.0;
  std::string scene_kind = "tube";
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  int bit_depth = 16;
};

int cmd_phantom(const PhantomArgs& a) {
  PipelineConfig cfg; // reused only for the canonical phantom description
  cfg.phantom = a.kind;
  cfg.spacing = parse_spacing(a.spacing);
  Dims dims = parse_dims(a.dims);
  cfg.dim_x = dims.nx; cfg.dim_y = dims.ny; cfg.dim_z = dims.nz;
  cfg.tube_length_um = a.length;
  cfg.radius_um = a.radius;
  cfg.y_arm_um = a.arm;
  cfg.blob_separation_um = a.separation;
  cfg.blob_sigma_um = a.sigma_um;
  cfg.blob_merged = a.merged;
  cfg.scene_k = a.k;
  cfg.min_gap_um = a.min_gap;
  cfg.scene_kind = a.scene_kind;
  cfg.noise_sigma = a.noise_sigma;
  cfg.seed = a.seed;
  const std::string hash = config_hash_hex(cfg);
  const std::string prov = "voxmorph " + std::string(kVersion) + " config=" + hash;

  auto [grid, truth] = detail::make_phantom_from_config(cfg);
  if (a.noise_sigma > 0) {
    grid = add_noise(grid, a.noise_sigma, a.seed);
    truth.noise_sigma = a.noise_sigma;
  }
  std::filesystem::path out_dir = a.out;
  write_normalized_stack(grid, out_dir / "volume.tif", a.bit_depth, prov);
  write_file_atomic(out_dir / "truth.json",
                    detail::truth_to_json(truth, hash).dump(2) + "\n");
  std::printf("wrote %s (%d cells) and %s\n", (out_dir / "volume.tif").c_str(),
              static_cast<int>(truth.cells.size()), (out_dir / "truth.json").c_str());
  return 0;
}

struct SegmentArgs {
  std::string input;
  std::string out = ".";
  std::string spacing = "0.5,0.5,0.5";
  std::string threshold = "auto";
  int connectivity = 26;
  long long min_voxels = 8;
  double max_volume = 1e12;
  int k_max = 4;
  std::uint64_t seed = 1;
};

int cmd_segment(const SegmentArgs& a) {
  Spacing spacing = parse_spacing(a.spacing);
  if (a.connectivity != 6 && a.connectivity != 18 && a.connectivity != 26)
    throw Error(ErrorKind::config, "connectivity must be 6, 18 or 26");
  if (a.min_voxels < 1)
    throw Error(ErrorKind::config, "min_voxels must be >= 1");

  auto [raw, meta] = load_stack(a.input, spacing);
  VoxelGrid grid = normalize(raw);

  double threshold;
  if (a.threshold == "auto") {
    threshold = otsu_threshold(grid);
  } else {
    char* end = nullptr;
    threshold = std::strtod(a.threshold.c_str(), &end);
    if (end == a.threshold.c_str() || *end != '\0' || threshold < 0 || threshold > 1)
      throw Error(ErrorKind::config, "threshold must be 'auto' or a number in [0, 1]");
  }

  BinaryVolume binary = binarize(grid, threshold);
  LabelVolume labels = label_components(binary, a.connectivity);
  labels = filter_small(labels, a.min_voxels);
  SplitResult split = split_oversized(labels, a.max_volume, a.k_max, a.seed);

  const std::string prov =
      "voxmorph " + std::string(kVersion) + " config=" +
      invocation_hash("segment\ninput=" + a.input + "\nthreshold=" + a.threshold +
                      "\nconnectivity=" + std::to_string(a.connectivity) +
                      "\nmin_voxels=" + std::to_string(a.min_voxels) +
                      "\nmax_volume=" + format_number(a.max_volume) +
                      "\nk_max=" + std::to_string(a.k_max) +
                      "\nseed=" + std::to_string(a.seed));
  std::filesystem::path out = std::filesystem::path(a.out) / "labels.tif";
  write_label_stack(split.labels, out, prov);
  for (const auto& w : split.warnings)
    std::fprintf(stderr, "warning: label %u: %s\n", w.label, w.message.c_str());
  std::printf("threshold %s -> %u cells -> %s\n", format_number(threshold).c_str(),
              split.labels.k, out.c_str());
  return 0;
}

struct LabelledArgs {
  std::string labels;
  std::string out = ".";
  std::string spacing = "0.5,0.5,0.5";
};

int cmd_skeleton(const LabelledArgs& a) {
  Spacing spacing = parse_spacing(a.spacing);
  LabelVolume labels = read_label_stack(a.labels, spacing);

  std::string csv = "cell_id,x,y,z,kind\n";
  std::vector<std::vector<Index3>> cells(labels.k);
  for (int z = 0; z < labels.dims.nz; ++z)
    for (int y = 0; y < labels.dims.ny; ++y)
      for (int x = 0; x < labels.dims.nx; ++x) {
        std::uint32_t l = labels.at(x, y, z);
        if (l > 0) cells[l - 1].push_back({x, y, z});
      }
  int n_failed = 0;
  for (std::uint32_t l = 1; l <= labels.k; ++l) {
    if (cells[l - 1].empty()) continue;
    try {
      Skeleton skel = skeletonize({l, cells[l - 1], labels.dims, labels.spacing});
      // per-voxel neighbor-count classification, same rule as the graph
      detail::CropBuffer buf = detail::make_crop(skel.voxels);
      for (const auto& v : skel.voxels) {
        int lx = v.x - buf.origin.x, ly = v.y - buf.origin.y, lz = v.z - buf.origin.z;
        std::array<std::uint8_t, 27> nb;
        detail::gather_neighborhood(buf, lx, ly, lz, nb);
        int d = detail::neighbor_count_26(nb);
        const char* kind = d == 0   ? "isolated"
                           : d == 1 ? "endpoint"
                           : d == 2 ? "slab"
                                    : "junction";
        csv += std::to_string(l) + "," + std::to_string(v.x) + "," +
               std::to_string(v.y) + "," + std::to_string(v.z) + "," + kind + "\n";
      }
    } catch (const Error& e) {
      ++n_failed;
      std::fprintf(stderr, "warning: cell %u: %s\n", l, e.what());
    }
  }
  std::filesystem::path out = std::filesystem::path(a.out) / "skeleton.csv";
  write_file_atomic(out, csv);
  std::printf("wrote %s (%u cells, %d failed)\n", out.c_str(), labels.k, n_failed);
  return 0;
}

int cmd_morph(const LabelledArgs& a) {
  Spacing spacing = parse_spacing(a.spacing);
  LabelVolume labels = read_label_stack(a.labels, spacing);
  CellAnalysis analysis = analyze_cells(labels);
  const std::string prov =
      "voxmorph " + std::string(kVersion) + " config=" +
      invocation_hash("morph\nlabels=" + a.labels + "\nspacing=" + a.spacing);
  std::filesystem::path out = std::filesystem::path(a.out) / "D_cells.csv";
  std::string csv = to_morph_csv(analysis.rows);
  csv += "# provenance: " + prov + "\n";
  write_file_atomic(out, csv);
  for (const auto& e : analysis.errors)
    std::fprintf(stderr, "warning: cell %u: %s\n", e.label, e.message.c_str());
  std::printf("wrote %s (%zu rows)\n", out.c_str(), analysis.rows.size());
  return 0;
}

struct CompareArgs {
  std::string manual_path, ilastik_path, morph_path;
  double um_per_px = 0.0;
  bool um_per_px_set = false;
  double radius = 10.0;
  std::string mode = "midpoint";
  std::string out = ".";
  bool svg = true;
};

int cmd_compare(const CompareArgs& a) {
  std::optional<std::vector<ManualPath>> manual;
  if (!a.manual_path.empty()) manual = parse_manual_file(a.manual_path);
  std::optional<std::vector<IlastikObject>> ilastik;
  if (!a.ilastik_path.empty()) ilastik = parse_ilastik_file(a.ilastik_path);
  std::optional<std::vector<CellMorphology>> morph;
  if (!a.morph_path.empty()) morph = parse_morph_file(a.morph_path);

  CompareOptions opts;
  if (a.um_per_px_set) {
    if (a.um_per_px <= 0)
      throw Error(ErrorKind::config, "um-per-px must be positive");
    opts.um_per_px = a.um_per_px;
  }
  opts.radius_um = a.radius;
  if (a.mode == "start") opts.manual_mode = ManualPointMode::start;
  else if (a.mode == "midpoint") opts.manual_mode = ManualPointMode::midpoint;
  else throw Error(ErrorKind::config, "mode must be 'midpoint' or 'start'");

  ComparisonReport report = summarize(manual, ilastik, morph, opts);
  report.provenance.config_hash = invocation_hash(
      "compare\nmanual=" + a.manual_path + "\nilastik=" + a.ilastik_path +
      "\nmorph=" + a.morph_path + "\num_per_px=" +
      (a.um_per_px_set ? format_number(a.um_per_px) : "") +
      "\nradius=" + format_number(a.radius) + "\nmode=" + a.mode);
  if (!a.manual_path.empty()) report.provenance.inputs.push_back({"manual", a.manual_path});
  if (!a.ilastik_path.empty())
    report.provenance.inputs.push_back({"ilastik", a.ilastik_path});
  if (!a.morph_path.empty()) report.provenance.inputs.push_back({"morph", a.morph_path});

  std::filesystem::path out_dir = a.out;
  write_file_atomic(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
  std::printf("wrote %s\n", (out_dir / "report.json").c_str());

  if (a.svg) {
    std::vector<ScatterSeries> series;
    if (morph) {
      ScatterSeries s;
      s.name = "morph";
      for (const auto& r : *morph) s.points.push_back({r.centroid_um.x, r.centroid_um.y});
      series.push_back(std::move(s));
    }
    if (manual) {
      ScatterSeries s;
      s.name = "manual";
      for (const auto& p : reference_points(*manual, opts.manual_mode))
        s.points.push_back({p.x, p.y});
      series.push_back(std::move(s));
    }
    if (ilastik && opts.um_per_px) {
      ScatterSeries s;
      s.name = "ilastik";
      for (const auto& o : *ilastik)
        s.points.push_back({o.centroid_x * *opts.um_per_px, o.centroid_y * *opts.um_per_px});
      series.push_back(std::move(s));
    }
    write_file_atomic(out_dir / "centroids.svg",
                      render_scatter_svg("centroid positions", "x (um)", "y (um)", series,
                                         "provenance: voxmorph " + std::string(kVersion) +
                                             " config=" + report.provenance.config_hash));
    std::printf("wrote %s\n", (out_dir / "centroids.svg").c_str());
  }
  for (const auto& n : report.notes) std::fprintf(stderr, "note: %s\n", n.c_str());
  return 0;
}

struct RunArgs {
  PipelineConfig cfg;
  std::string spacing = "0.5,0.5,0.5";
  std::string dims = "128,128,128";
  double um_per_px = 0.0;
  bool um_per_px_set = false;
};

int cmd_run(RunArgs& a) {
  a.cfg.spacing = parse_spacing(a.spacing);
  Dims dims = parse_dims(a.dims);
  a.cfg.dim_x = dims.nx; a.cfg.dim_y = dims.ny; a.cfg.dim_z = dims.nz;
  if (a.um_per_px_set) {
    if (a.um_per_px <= 0)
      throw Error(ErrorKind::config, "um-per-px must be positive");
    a.cfg.um_per_px = a.um_per_px;
  }
  RunResult r = run_pipeline(a.cfg);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const auto& e : r.cell_errors)
    std::fprintf(stderr, "warning: cell %u: %s\n", e.label, e.message.c_str());
  std::printf("%d cells\n", r.n_cells);
  for (const auto& p : r.written) std::printf("wrote %s\n", p.c_str());
  return 0;
}

const char* hint_for(ErrorKind kind) {
  if (kind == ErrorKind::io)
    return "check that the output directory exists and is writable";
  switch (Error(kind, "").category()) {
    case ErrorCategory::config:
      return "check the flag values or the config file";
    case ErrorCategory::input:
      return "check that the input path exists and matches the documented format";
    default:
      return "the input may be degenerate for this operation; adjust parameters";
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"voxmorph: volumetric morphometry toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  PhantomArgs pa;
  CLI::App* phantom = app.add_subcommand("phantom", "generate a synthetic test volume");
  phantom->add_option("--kind", pa.kind, "tube | y | blob | scene")->required();
  phantom->add_option("--out", pa.out, "output directory");
  phantom->add_option("--spacing", pa.spacing, "voxel spacing sx,sy,sz in microns");
  phantom->add_option("--dims", pa.dims, "grid size nx,ny,nz (scene only)");
  phantom->add_option("--length", pa.length, "tube length in microns");
  phantom->add_option("--radius", pa.radius, "tube/arm radius in microns");
  phantom->add_option("--arm", pa.arm, "Y arm length in microns");
  phantom->add_option("--separation", pa.separation, "blob center separation in microns");
  phantom->add_option("--sigma-um", pa.sigma_um, "blob Gaussian sigma in microns");
  phantom->add_flag("--merged,!--no-merged", pa.merged,
                    "place blobs close enough to merge after thresholding");
  phantom->add_option("--k", pa.k, "number of cells in a scene");
  phantom->add_option("--min-gap", pa.min_gap, "minimum surface gap in microns");
  phantom->add_option("--scene-kind", pa.scene_kind, "cell kind inside a scene");
  phantom->add_option("--noise-sigma", pa.noise_sigma, "Gaussian noise sigma");
  phantom->add_option("--seed", pa.seed, "random seed");
  phantom->add_option("--bit-depth", pa.bit_depth, "output TIFF depth (8 or 16)")
      ->check(CLI::IsMember({8, 16}));

  SegmentArgs sa;
  CLI::App* segment = app.add_subcommand("segment", "threshold, label and split a stack");
  segment->add_option("--input", sa.input, "TIFF stack or slice directory")->required();
  segment->add_option("--out", sa.out, "output directory");
  segment->add_option("--spacing", sa.spacing, "voxel spacing sx,sy,sz in microns");
  segment->add_option("--threshold", sa.threshold, "'auto' (Otsu) or a value in [0,1]");
  segment->add_option("--connectivity", sa.connectivity, "6 | 18 | 26");
  segment->add_option("--min-voxels", sa.min_voxels, "drop components smaller than this");
  segment->add_option("--max-volume", sa.max_volume, "split components above this (um^3)");
  segment->add_option("--k-max", sa.k_max, "maximum mixture order for splitting");
  segment->add_option("--seed", sa.seed, "random seed");

  LabelledArgs ka;
  CLI::App* skeleton = app.add_subcommand("skeleton", "dump per-cell skeleton voxels");
  skeleton->add_option("--labels", ka.labels, "label TIFF stack")->required();
  skeleton->add_option("--out", ka.out, "output directory");
  skeleton->add_option("--spacing", ka.spacing, "voxel spacing sx,sy,sz in microns");

  LabelledArgs ma;
  CLI::App* morph = app.add_subcommand("morph", "compute per-cell features");
  morph->add_option("--labels", ma.labels, "label TIFF stack")->required();
  morph->add_option("--out", ma.out, "output directory");
  morph->add_option("--spacing", ma.spacing, "voxel spacing sx,sy,sz in microns");

  CompareArgs ca;
  CLI::App* compare = app.add_subcommand("compare", "compare method outputs");
  compare->add_option("--manual", ca.manual_path, "manual path CSV");
  compare->add_option("--ilastik", ca.ilastik_path, "object table CSV");
  compare->add_option("--morph", ca.morph_path, "feature table CSV");
  auto* upp = compare->add_option("--um-per-px", ca.um_per_px,
                                  "microns per pixel for pixel-space centroids");
  compare->add_option("--radius", ca.radius, "match radius in microns");
  compare->add_option("--mode", ca.mode, "manual path reduction: midpoint | start");
  compare->add_option("--out", ca.out, "output directory");
  compare->add_flag("--svg,!--no-svg", ca.svg, "also write the centroid scatter SVG");

  RunArgs ra;
  CLI::App* run = app.add_subcommand("run", "full pipeline");
  run->set_config("--config", "", "flat key=value config file; flags override");
  run->add_option("--input", ra.cfg.input, "TIFF stack or slice directory");
  run->add_option("--phantom", ra.cfg.phantom, "tube | y | blob | scene");
  run->add_option("--k", ra.cfg.scene_k, "number of cells in a scene");
  run->add_option("--min-gap", ra.cfg.min_gap_um, "minimum surface gap in microns");
  run->add_option("--scene-kind", ra.cfg.scene_kind, "cell kind inside a scene");
  run->add_option("--length", ra.cfg.tube_length_um, "tube length in microns");
  run->add_option("--radius", ra.cfg.radius_um, "tube/arm radius in microns");
  run->add_option("--arm", ra.cfg.y_arm_um, "Y arm length in microns");
  run->add_option("--separation", ra.cfg.blob_separation_um, "blob separation (um)");
  run->add_option("--sigma-um", ra.cfg.blob_sigma_um, "blob Gaussian sigma (um)");
  run->add_flag("--merged,!--no-merged", ra.cfg.blob_merged, "blobs merge when thresholded");
  run->add_option("--noise-sigma", ra.cfg.noise_sigma, "Gaussian noise sigma");
  run->add_option("--dims", ra.dims, "grid size nx,ny,nz");
  run->add_option("--spacing", ra.spacing, "voxel spacing sx,sy,sz in microns");
  run->add_option("--threshold", ra.cfg.threshold, "'auto' (Otsu) or a value in [0,1]");
  run->add_option("--connectivity", ra.cfg.connectivity, "6 | 18 | 26");
  run->add_option("--min-voxels", ra.cfg.min_voxels, "drop components smaller than this");
  run->add_option("--max-volume", ra.cfg.max_volume_um3, "split larger components (um^3)");
  run->add_option("--k-max", ra.cfg.k_max, "maximum mixture order for splitting");
  run->add_option("--seed", ra.cfg.seed, "random seed");
  run->add_option("--out", ra.cfg.out_dir, "output directory");
  run->add_option("--manual", ra.cfg.manual_path, "manual path CSV for comparison");
  run->add_option("--ilastik", ra.cfg.ilastik_path, "object table CSV for comparison");
  auto* run_upp = run->add_option("--um-per-px", ra.um_per_px,
                                  "microns per pixel for pixel-space centroids");
  run->add_option("--match-radius", ra.cfg.radius_match_um, "match radius in microns");
  run->add_option("--manual-mode", ra.cfg.manual_mode, "midpoint | start");

  try {
    app.parse(argc, argv);
    ca.um_per_px_set = upp->count() > 0;
    ra.um_per_px_set = run_upp->count() > 0;
    if (phantom->parsed()) return cmd_phantom(pa);
    if (segment->parsed()) return cmd_segment(sa);
    if (skeleton->parsed()) return cmd_skeleton(ka);
    if (morph->parsed()) return cmd_morph(ma);
    if (compare->parsed()) return cmd_compare(ca);
    if (run->parsed()) return cmd_run(ra);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    ErrorCategory cat = e.category();
    std::fprintf(stderr, "error [%s]: %s\nhint: %s\n", error_kind_name(e.kind()),
                 e.what(), hint_for(e.kind()));
    switch (cat) {
      case ErrorCategory::config: return 2;
      case ErrorCategory::input: return 3;
      default: return 4;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
