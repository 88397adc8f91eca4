#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "voxmorph/csv.hpp"
#include "voxmorph/errors.hpp"
#include "voxmorph/geometry.hpp"
#include "voxmorph/io_util.hpp"
#include "voxmorph/morphometry.hpp"

namespace voxmorph {

enum class Unit { pixels, microns };

inline const char* unit_name(Unit u) { return u == Unit::pixels ? "px" : "um"; }

// One manually traced path. Coordinates are stored as-is (microns in the
// shipped fixtures); optional fields parse as absent when empty.
struct ManualPath {
  long long path_id = 0;
  std::string name;
  Vec3 start{};
  Vec3 end{};
  std::optional<double> path_length;
  int swc_type = 0;
  std::optional<long long> parent_id;
  std::vector<long long> child_ids;
  std::optional<double> fitted_volume;
};

// One 2D object row from a pixel-classification export.
struct IlastikObject {
  long long object_id = 0;
  std::string predicted_class;
  std::optional<std::string> user_class;
  double centroid_x = 0.0; // pixels
  double centroid_y = 0.0;
  double bbox_min_x = 0.0, bbox_max_x = 0.0;
  double bbox_min_y = 0.0, bbox_max_y = 0.0;
  long long size_px = 0;
  std::vector<double> class_probabilities;
};

inline std::vector<ManualPath> parse_manual(const std::string& text) {
  CsvTable t = parse_csv_text(text);
  if (t.header.empty())
    throw Error(ErrorKind::empty_input, "manual path file has no header");
  ColumnMap cols(t.header);
  int c_id = cols.require("path_id");
  int c_name = cols.require("name");
  int c_sx = cols.require("start_x"), c_sy = cols.require("start_y"),
      c_sz = cols.require("start_z");
  int c_ex = cols.require("end_x"), c_ey = cols.require("end_y"),
      c_ez = cols.require("end_z");
  int c_len = cols.require("path_length");
  int c_swc = cols.require("swc_type");
  int c_parent = cols.require("parent_id");
  int c_children = cols.require("child_ids");
  int c_vol = cols.require("fitted_volume");

  std::vector<ManualPath> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    ManualPath p;
    p.path_id = detail::csv_int(row, c_id, "path_id");
    p.name = detail::csv_field(row, c_name);
    p.start = {detail::csv_double(row, c_sx, "start_x"),
               detail::csv_double(row, c_sy, "start_y"),
               detail::csv_double(row, c_sz, "start_z")};
    p.end = {detail::csv_double(row, c_ex, "end_x"),
             detail::csv_double(row, c_ey, "end_y"),
             detail::csv_double(row, c_ez, "end_z")};
    p.path_length = detail::csv_opt_double(row, c_len, "path_length");
    if (p.path_length && *p.path_length < 0)
      throw Error(ErrorKind::row,
                  "line " + std::to_string(row.line) + ": negative path_length");
    p.swc_type = static_cast<int>(detail::csv_int(row, c_swc, "swc_type"));
    p.parent_id = detail::csv_opt_int(row, c_parent, "parent_id");
    for (const auto& c : detail::csv_list(row, c_children)) {
      long long v = 0;
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc{} || ptr != c.data() + c.size())
        throw Error(ErrorKind::row, "line " + std::to_string(row.line) +
                                        ": malformed child id '" + c + "'");
      p.child_ids.push_back(v);
    }
    p.fitted_volume = detail::csv_opt_double(row, c_vol, "fitted_volume");
    out.push_back(std::move(p));
  }

  // referential integrity of the parent/child graph
  std::unordered_set<long long> ids;
  for (const auto& p : out) ids.insert(p.path_id);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int line = t.rows[i].line;
    if (out[i].parent_id && !ids.count(*out[i].parent_id))
      throw Error(ErrorKind::row, "line " + std::to_string(line) + ": parent_id " +
                                      std::to_string(*out[i].parent_id) +
                                      " names no path");
    for (long long c : out[i].child_ids)
      if (!ids.count(c))
        throw Error(ErrorKind::row, "line " + std::to_string(line) + ": child id " +
                                        std::to_string(c) + " names no path");
  }
  return out;
}

inline std::vector<ManualPath> parse_manual_file(const std::filesystem::path& path) {
  return parse_manual(read_file(path));
}

inline std::vector<IlastikObject> parse_ilastik(const std::string& text) {
  CsvTable t = parse_csv_text(text);
  if (t.header.empty())
    throw Error(ErrorKind::empty_input, "object table has no header");
  ColumnMap cols(t.header);
  int c_id = cols.require("object_id");
  int c_pred = cols.require("predicted_class");
  int c_user = cols.require("user_class");
  int c_cx = cols.require("centroid_x"), c_cy = cols.require("centroid_y");
  int c_minx = cols.require("bbox_min_x"), c_maxx = cols.require("bbox_max_x");
  int c_miny = cols.require("bbox_min_y"), c_maxy = cols.require("bbox_max_y");
  int c_size = cols.require("size_px");
  int c_prob = cols.require("class_probabilities");

  std::vector<IlastikObject> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    IlastikObject o;
    o.object_id = detail::csv_int(row, c_id, "object_id");
    o.predicted_class = detail::csv_field(row, c_pred);
    const std::string& uc = detail::csv_field(row, c_user);
    if (!uc.empty()) o.user_class = uc;
    o.centroid_x = detail::csv_double(row, c_cx, "centroid_x");
    o.centroid_y = detail::csv_double(row, c_cy, "centroid_y");
    o.bbox_min_x = detail::csv_double(row, c_minx, "bbox_min_x");
    o.bbox_max_x = detail::csv_double(row, c_maxx, "bbox_max_x");
    o.bbox_min_y = detail::csv_double(row, c_miny, "bbox_min_y");
    o.bbox_max_y = detail::csv_double(row, c_maxy, "bbox_max_y");
    o.size_px = detail::csv_int(row, c_size, "size_px");
    if (o.size_px < 0)
      throw Error(ErrorKind::row,
                  "line " + std::to_string(row.line) + ": negative size_px");
    if (o.centroid_x < o.bbox_min_x || o.centroid_x > o.bbox_max_x ||
        o.centroid_y < o.bbox_min_y || o.centroid_y > o.bbox_max_y)
      throw Error(ErrorKind::row, "line " + std::to_string(row.line) +
                                      ": centroid lies outside bounding box");
    double sum = 0.0;
    for (const auto& f : detail::csv_list(row, c_prob)) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size())
        throw Error(ErrorKind::row, "line " + std::to_string(row.line) +
                                        ": malformed probability '" + f + "'");
      if (v < 0.0 || v > 1.0)
        throw Error(ErrorKind::row, "line " + std::to_string(row.line) +
                                        ": probability outside [0, 1]");
      o.class_probabilities.push_back(v);
      sum += v;
    }
    if (!o.class_probabilities.empty() && std::abs(sum - 1.0) > 1e-6)
      throw Error(ErrorKind::row, "line " + std::to_string(row.line) +
                                      ": class probabilities sum to " +
                                      format_number(sum) + ", expected 1");
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<IlastikObject> parse_ilastik_file(const std::filesystem::path& path) {
  return parse_ilastik(read_file(path));
}

inline std::vector<CellMorphology> parse_morph(const std::string& text) {
  CsvTable t = parse_csv_text(text);
  if (t.header.empty())
    throw Error(ErrorKind::empty_input, "feature table has no header");
  ColumnMap cols(t.header);
  int c_id = cols.require("cell_id");
  int c_cx = cols.require("centroid_x_um"), c_cy = cols.require("centroid_y_um"),
      c_cz = cols.require("centroid_z_um");
  int c_cv = cols.require("cell_volume_um3");
  int c_tv = cols.require("territory_volume_um3");
  int c_ri = cols.require("ramification_index");
  int c_ne = cols.require("n_endpoints");
  int c_nb = cols.require("n_branchpoints");
  int c_ba = cols.require("branch_len_avg_um");
  int c_bx = cols.require("branch_len_max_um");
  int c_bn = cols.require("branch_len_min_um");

  std::vector<CellMorphology> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    CellMorphology m;
    long long id = detail::csv_int(row, c_id, "cell_id");
    if (id < 0)
      throw Error(ErrorKind::row,
                  "line " + std::to_string(row.line) + ": negative cell_id");
    m.cell_id = static_cast<std::uint32_t>(id);
    m.centroid_um = {detail::csv_double(row, c_cx, "centroid_x_um"),
                     detail::csv_double(row, c_cy, "centroid_y_um"),
                     detail::csv_double(row, c_cz, "centroid_z_um")};
    m.cell_volume_um3 = detail::csv_double(row, c_cv, "cell_volume_um3");
    m.territory_volume_um3 = detail::csv_double(row, c_tv, "territory_volume_um3");
    m.ramification_index = detail::csv_double(row, c_ri, "ramification_index");
    if (m.cell_volume_um3 <= 0)
      throw Error(ErrorKind::row,
                  "line " + std::to_string(row.line) + ": cell_volume_um3 must be > 0");
    if (m.territory_volume_um3 < 0 || m.ramification_index < 0)
      throw Error(ErrorKind::row, "line " + std::to_string(row.line) +
                                      ": negative volume or ramification index");
    long long ne = detail::csv_int(row, c_ne, "n_endpoints");
    long long nb = detail::csv_int(row, c_nb, "n_branchpoints");
    if (ne < 0 || nb < 0)
      throw Error(ErrorKind::row,
                  "line " + std::to_string(row.line) + ": negative count");
    m.n_endpoints = static_cast<int>(ne);
    m.n_branchpoints = static_cast<int>(nb);
    m.branch_len_avg_um = detail::csv_opt_double(row, c_ba, "branch_len_avg_um");
    m.branch_len_max_um = detail::csv_opt_double(row, c_bx, "branch_len_max_um");
    m.branch_len_min_um = detail::csv_opt_double(row, c_bn, "branch_len_min_um");
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<CellMorphology> parse_morph_file(const std::filesystem::path& path) {
  return parse_morph(read_file(path));
}

// --- spread statistics -----------------------------------------------------

struct AxisSpread {
  std::string axis; // "x" | "y" | "z"
  double min = 0.0;
  double max = 0.0;
  double range = 0.0;
  std::optional<double> std; // sample (n-1) estimator; absent for n < 2
};

struct SpreadStats {
  std::vector<AxisSpread> axes;
  int n = 0;
  Unit unit = Unit::microns;
};

inline SpreadStats spread_stats(const std::vector<Vec3>& points,
                                const std::vector<int>& axes, Unit unit) {
  if (points.empty())
    throw Error(ErrorKind::empty_input, "spread_stats: no points");
  SpreadStats s;
  s.n = static_cast<int>(points.size());
  s.unit = unit;
  static const char* kAxisNames[3] = {"x", "y", "z"};
  for (int axis : axes) {
    if (axis < 0 || axis > 2)
      throw Error(ErrorKind::contract, "spread_stats: axis index out of range");
    AxisSpread a;
    a.axis = kAxisNames[axis];
    auto value = [&](const Vec3& p) { return axis == 0 ? p.x : axis == 1 ? p.y : p.z; };
    a.min = a.max = value(points[0]);
    double sum = 0.0;
    for (const auto& p : points) {
      double v = value(p);
      a.min = std::min(a.min, v);
      a.max = std::max(a.max, v);
      sum += v;
    }
    a.range = a.max - a.min;
    if (s.n >= 2) {
      double mean = sum / s.n;
      double ss = 0.0;
      for (const auto& p : points) {
        double d = value(p) - mean;
        ss += d * d;
      }
      a.std = std::sqrt(ss / (s.n - 1));
    }
    s.axes.push_back(std::move(a));
  }
  return s;
}

enum class ManualPointMode { start, midpoint };

inline std::vector<Vec3> reference_points(const std::vector<ManualPath>& paths,
                                          ManualPointMode mode) {
  std::vector<Vec3> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    if (mode == ManualPointMode::start)
      out.push_back(p.start);
    else
      out.push_back((p.start + p.end) * 0.5);
  }
  return out;
}

// --- centroid matching -----------------------------------------------------

struct TaggedPoints {
  std::vector<Vec3> points;
  Unit unit = Unit::microns;
};

struct MatchPair {
  int candidate = 0; // indices into the input point lists
  int reference = 0;
  double distance = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs; // one-to-one, every distance <= radius
  int n_candidates = 0;
  int n_references = 0;
  std::optional<double> precision; // matches / n_candidates
  std::optional<double> recall;    // matches / n_references
  double radius = 0.0;
};

// Greedy one-to-one matching: all candidate-reference pairs within the
// radius, sorted by (distance, candidate index, reference index), accepted
// when both endpoints are still free. Deterministic and near-optimal.
inline MatchResult match_centroids(const TaggedPoints& candidates,
                                   const TaggedPoints& references, double radius) {
  if (candidates.unit != references.unit)
    throw Error(ErrorKind::unit,
                std::string("cannot match ") + unit_name(candidates.unit) +
                    " candidates against " + unit_name(references.unit) +
                    " references without a conversion");
  if (radius <= 0)
    throw Error(ErrorKind::config, "match radius must be positive");

  MatchResult r;
  r.n_candidates = static_cast<int>(candidates.points.size());
  r.n_references = static_cast<int>(references.points.size());
  r.radius = radius;

  struct Cand {
    double d;
    int ci, ri;
  };
  std::vector<Cand> all;
  for (int ci = 0; ci < r.n_candidates; ++ci)
    for (int ri = 0; ri < r.n_references; ++ri) {
      double d = distance(candidates.points[ci], references.points[ri]);
      if (d <= radius) all.push_back({d, ci, ri});
    }
  std::sort(all.begin(), all.end(), [](const Cand& a, const Cand& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.ci != b.ci) return a.ci < b.ci;
    return a.ri < b.ri;
  });
  std::vector<char> cand_used(r.n_candidates, 0), ref_used(r.n_references, 0);
  for (const auto& c : all) {
    if (cand_used[c.ci] || ref_used[c.ri]) continue;
    cand_used[c.ci] = 1;
    ref_used[c.ri] = 1;
    r.pairs.push_back({c.ci, c.ri, c.d});
  }
  if (r.n_candidates > 0)
    r.precision = static_cast<double>(r.pairs.size()) / r.n_candidates;
  if (r.n_references > 0)
    r.recall = static_cast<double>(r.pairs.size()) / r.n_references;
  return r;
}

} // namespace voxmorph
