#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "voxmorph/compare.hpp"
#include "voxmorph/errors.hpp"
#include "voxmorph/version.hpp"

namespace voxmorph {

inline constexpr const char* kReportSchema = "compare-report/1";

struct Provenance {
  std::string config_hash; // hex digest of the effective configuration
  std::vector<std::pair<std::string, std::string>> inputs; // role -> path
};

inline std::string provenance_line(const Provenance& p) {
  std::string s = "voxmorph ";
  s += kVersion;
  s += " config=";
  s += p.config_hash.empty() ? "none" : p.config_hash;
  return s;
}

struct MethodSummary {
  std::string method; // "manual" | "ilastik" | "morph"
  int count = 0;
  Unit unit = Unit::microns;
  // exactly one of these is set, matching what the method reports
  std::optional<double> mean_path_length_um;
  std::optional<double> mean_size_px;
  std::optional<double> mean_cell_volume_um3;
  std::optional<SpreadStats> spread; // absent for empty inputs
};

struct MatchBlock {
  std::string candidates_method;
  std::string references_method;
  std::string space; // "um_3d" | "um_2d"
  MatchResult result;
  std::vector<long long> candidate_ids; // parallel to candidate points
  std::vector<long long> reference_ids;
};

struct ComparisonReport {
  std::vector<MethodSummary> methods;
  std::vector<MatchBlock> matches;
  std::vector<std::string> notes;
  Provenance provenance;
};

struct CompareOptions {
  std::optional<double> um_per_px; // enables pixel-space vs micron-space matching
  double radius_um = 10.0;
  ManualPointMode manual_mode = ManualPointMode::midpoint;
};

// Assembles per-method counts, mean size/volume, spread statistics, and the
// centroid matches against the manual reference. Pixel-unit centroids are
// only matched when a microns-per-pixel conversion is supplied; otherwise the
// match is skipped with a note rather than mixing units.
inline ComparisonReport summarize(const std::optional<std::vector<ManualPath>>& manual,
                                  const std::optional<std::vector<IlastikObject>>& ilastik,
                                  const std::optional<std::vector<CellMorphology>>& morph,
                                  const CompareOptions& opts) {
  if (!manual && !ilastik && !morph)
    throw Error(ErrorKind::empty_input, "summarize: no inputs given");

  ComparisonReport report;

  std::vector<Vec3> manual_pts;
  if (manual) {
    manual_pts = reference_points(*manual, opts.manual_mode);
    MethodSummary s;
    s.method = "manual";
    s.count = static_cast<int>(manual->size());
    s.unit = Unit::microns;
    double sum = 0.0;
    int n_len = 0;
    for (const auto& p : *manual)
      if (p.path_length) {
        sum += *p.path_length;
        ++n_len;
      }
    if (n_len > 0) s.mean_path_length_um = sum / n_len;
    if (!manual_pts.empty())
      s.spread = spread_stats(manual_pts, {0, 1, 2}, Unit::microns);
    report.methods.push_back(std::move(s));
  }

  std::vector<Vec3> ilastik_pts;
  if (ilastik) {
    for (const auto& o : *ilastik)
      ilastik_pts.push_back({o.centroid_x, o.centroid_y, 0.0});
    MethodSummary s;
    s.method = "ilastik";
    s.count = static_cast<int>(ilastik->size());
    s.unit = Unit::pixels;
    if (!ilastik->empty()) {
      double sum = 0.0;
      for (const auto& o : *ilastik) sum += static_cast<double>(o.size_px);
      s.mean_size_px = sum / static_cast<double>(ilastik->size());
      s.spread = spread_stats(ilastik_pts, {0, 1}, Unit::pixels);
    }
    report.methods.push_back(std::move(s));
  }

  std::vector<Vec3> morph_pts;
  if (morph) {
    for (const auto& m : *morph) morph_pts.push_back(m.centroid_um);
    MethodSummary s;
    s.method = "morph";
    s.count = static_cast<int>(morph->size());
    s.unit = Unit::microns;
    if (!morph->empty()) {
      double sum = 0.0;
      for (const auto& m : *morph) sum += m.cell_volume_um3;
      s.mean_cell_volume_um3 = sum / static_cast<double>(morph->size());
      s.spread = spread_stats(morph_pts, {0, 1, 2}, Unit::microns);
    }
    report.methods.push_back(std::move(s));
  }

  if (manual && morph) {
    MatchBlock b;
    b.candidates_method = "morph";
    b.references_method = "manual";
    b.space = "um_3d";
    b.result = match_centroids({morph_pts, Unit::microns},
                               {manual_pts, Unit::microns}, opts.radius_um);
    for (const auto& m : *morph) b.candidate_ids.push_back(m.cell_id);
    for (const auto& p : *manual) b.reference_ids.push_back(p.path_id);
    report.matches.push_back(std::move(b));
  }
  if (manual && ilastik) {
    if (opts.um_per_px) {
      std::vector<Vec3> cand;
      for (const auto& o : *ilastik)
        cand.push_back({o.centroid_x * *opts.um_per_px, o.centroid_y * *opts.um_per_px, 0.0});
      std::vector<Vec3> refs;
      for (const auto& p : manual_pts) refs.push_back({p.x, p.y, 0.0});
      MatchBlock b;
      b.candidates_method = "ilastik";
      b.references_method = "manual";
      b.space = "um_2d";
      b.result = match_centroids({cand, Unit::microns}, {refs, Unit::microns},
                                 opts.radius_um);
      for (const auto& o : *ilastik) b.candidate_ids.push_back(o.object_id);
      for (const auto& p : *manual) b.reference_ids.push_back(p.path_id);
      report.matches.push_back(std::move(b));
    } else {
      report.notes.push_back(
          "ilastik centroids are in pixels; pass a microns-per-pixel factor to "
          "match them against the manual reference");
    }
  }
  return report;
}

inline nlohmann::ordered_json spread_to_json(const SpreadStats& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["unit"] = unit_name(s.unit);
  nlohmann::ordered_json axes;
  for (const auto& a : s.axes) {
    nlohmann::ordered_json aj;
    aj["min"] = a.min;
    aj["max"] = a.max;
    aj["range"] = a.range;
    if (a.std) aj["std"] = *a.std; else aj["std"] = nullptr;
    axes[a.axis] = std::move(aj);
  }
  j["axes"] = std::move(axes);
  return j;
}

inline nlohmann::ordered_json report_to_json(const ComparisonReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  nlohmann::ordered_json prov;
  prov["tool"] = "voxmorph";
  prov["version"] = kVersion;
  prov["config_hash"] = r.provenance.config_hash;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  for (const auto& [role, path] : r.provenance.inputs) inputs[role] = path;
  prov["inputs"] = std::move(inputs);
  j["provenance"] = std::move(prov);

  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (const auto& m : r.methods) {
    nlohmann::ordered_json mj;
    mj["method"] = m.method;
    mj["count"] = m.count;
    mj["unit"] = unit_name(m.unit);
    if (m.mean_path_length_um) mj["mean_path_length_um"] = *m.mean_path_length_um;
    if (m.mean_size_px) mj["mean_size_px"] = *m.mean_size_px;
    if (m.mean_cell_volume_um3) mj["mean_cell_volume_um3"] = *m.mean_cell_volume_um3;
    mj["spread"] = m.spread ? spread_to_json(*m.spread) : nlohmann::ordered_json(nullptr);
    methods.push_back(std::move(mj));
  }
  j["methods"] = std::move(methods);

  nlohmann::ordered_json matches = nlohmann::ordered_json::array();
  for (const auto& b : r.matches) {
    nlohmann::ordered_json bj;
    bj["candidates"] = b.candidates_method;
    bj["references"] = b.references_method;
    bj["space"] = b.space;
    bj["radius_um"] = b.result.radius;
    bj["n_candidates"] = b.result.n_candidates;
    bj["n_references"] = b.result.n_references;
    bj["n_matched"] = static_cast<int>(b.result.pairs.size());
    bj["precision"] =
        b.result.precision ? nlohmann::ordered_json(*b.result.precision) : nullptr;
    bj["recall"] = b.result.recall ? nlohmann::ordered_json(*b.result.recall) : nullptr;
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& p : b.result.pairs) {
      nlohmann::ordered_json pj;
      pj["candidate_id"] = b.candidate_ids[static_cast<std::size_t>(p.candidate)];
      pj["reference_id"] = b.reference_ids[static_cast<std::size_t>(p.reference)];
      pj["distance_um"] = p.distance;
      pairs.push_back(std::move(pj));
    }
    bj["pairs"] = std::move(pairs);
    matches.push_back(std::move(bj));
  }
  j["matches"] = std::move(matches);

  nlohmann::ordered_json notes = nlohmann::ordered_json::array();
  for (const auto& n : r.notes) notes.push_back(n);
  j["notes"] = std::move(notes);
  return j;
}

// Schema check used both by tests and by consumers of saved reports.
inline void validate_report_json(const nlohmann::json& j) {
  auto need = [&](const nlohmann::json& o, const char* key) -> const nlohmann::json& {
    if (!o.is_object() || !o.contains(key))
      throw Error(ErrorKind::schema, std::string("report: missing key ") + key);
    return o.at(key);
  };
  if (need(j, "schema") != kReportSchema)
    throw Error(ErrorKind::schema, "report: unknown schema tag");
  const auto& prov = need(j, "provenance");
  need(prov, "tool");
  need(prov, "version");
  need(prov, "config_hash");
  need(prov, "inputs");
  const auto& methods = need(j, "methods");
  if (!methods.is_array())
    throw Error(ErrorKind::schema, "report: methods must be an array");
  for (const auto& m : methods) {
    need(m, "method");
    if (!need(m, "count").is_number_integer() || m.at("count").get<long long>() < 0)
      throw Error(ErrorKind::schema, "report: count must be a nonnegative integer");
    need(m, "unit");
    const auto& spread = need(m, "spread");
    if (!spread.is_null()) {
      need(spread, "n");
      need(spread, "unit");
      for (const auto& [axis, aj] : need(spread, "axes").items()) {
        (void)axis;
        need(aj, "min");
        need(aj, "max");
        need(aj, "range");
        if (!aj.contains("std"))
          throw Error(ErrorKind::schema, "report: axis spread missing std");
      }
    }
  }
  const auto& matches = need(j, "matches");
  if (!matches.is_array())
    throw Error(ErrorKind::schema, "report: matches must be an array");
  for (const auto& b : matches) {
    need(b, "candidates");
    need(b, "references");
    need(b, "space");
    need(b, "radius_um");
    need(b, "n_candidates");
    need(b, "n_references");
    long long matched = need(b, "n_matched").get<long long>();
    const auto& pairs = need(b, "pairs");
    if (!pairs.is_array() || static_cast<long long>(pairs.size()) != matched)
      throw Error(ErrorKind::schema, "report: n_matched disagrees with pairs");
    for (const auto& p : pairs) {
      need(p, "candidate_id");
      need(p, "reference_id");
      if (need(p, "distance_um").get<double>() > b.at("radius_um").get<double>())
        throw Error(ErrorKind::schema, "report: matched distance exceeds radius");
    }
    need(b, "precision");
    need(b, "recall");
  }
  if (!need(j, "notes").is_array())
    throw Error(ErrorKind::schema, "report: notes must be an array");
}

} // namespace voxmorph
