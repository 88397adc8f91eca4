#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>
#include <tuple>
#include <vector>

#include "voxmorph/morphometry.hpp"
#include "voxmorph/phantom.hpp"
#include "voxmorph/segmentation.hpp"

using namespace voxmorph;

namespace {

using VoxelKey = std::tuple<int, int, int>;

std::set<VoxelKey> voxel_set(const std::vector<Index3>& mask) {
  std::set<VoxelKey> s;
  for (const auto& v : mask) s.insert({v.x, v.y, v.z});
  return s;
}

Vec3 mean_of_centers(const std::vector<Index3>& mask, const Spacing& sp) {
  Vec3 sum{};
  for (const auto& v : mask) sum += voxel_center(v, sp);
  return sum / static_cast<double>(mask.size());
}

} // namespace

TEST_CASE("tube phantom is deterministic and matches its analytic volume") {
  Spacing sp{0.5, 0.5, 0.5};
  auto [g1, t1] = make_tube(20.0, 1.0, sp);
  auto [g2, t2] = make_tube(20.0, 1.0, sp);
  CHECK(g1.values == g2.values);
  REQUIRE(t1.cells.size() == 1);
  REQUIRE(t2.cells.size() == 1);
  CHECK(voxel_set(t1.cells[0].mask) == voxel_set(t2.cells[0].mask));

  const CellTruth& cell = t1.cells[0];
  REQUIRE(cell.expected_endpoints);
  REQUIRE(cell.expected_branchpoints);
  REQUIRE(cell.expected_skeleton_length_um);
  CHECK(*cell.expected_endpoints == 2);
  CHECK(*cell.expected_branchpoints == 0);
  CHECK(*cell.expected_skeleton_length_um == Catch::Approx(18.0));

  // rounded-end tube: cylinder core plus two hemispherical caps
  double analytic = std::numbers::pi * 1.0 * 1.0 * 18.0 +
                    4.0 / 3.0 * std::numbers::pi * 1.0;
  double digitized = static_cast<double>(cell.mask.size()) * sp.voxel_volume();
  CHECK(digitized == Catch::Approx(analytic).epsilon(0.15));

  // stamped foreground is exactly the truth mask
  std::size_t fg = 0;
  for (float v : g1.values) {
    CHECK((v == 0.0f || v == 1.0f));
    if (v == 1.0f) ++fg;
  }
  CHECK(fg == cell.mask.size());
  for (const auto& v : cell.mask) CHECK(g1.at(v.x, v.y, v.z) == 1.0f);

  Vec3 c = mean_of_centers(cell.mask, sp);
  CHECK(cell.centroid_um.x == Catch::Approx(c.x).margin(1e-12));
  CHECK(cell.centroid_um.y == Catch::Approx(c.y).margin(1e-12));
  CHECK(cell.centroid_um.z == Catch::Approx(c.z).margin(1e-12));
}

TEST_CASE("tube phantom respects the axis parameter") {
  Spacing sp{0.5, 0.5, 0.5};
  auto [gx, tx] = make_tube(16.0, 1.0, sp, 0);
  auto [gy, ty] = make_tube(16.0, 1.0, sp, 1);
  auto [gz, tz] = make_tube(16.0, 1.0, sp, 2);
  CHECK(gx.dims.nx > gx.dims.ny);
  CHECK(gy.dims.ny > gy.dims.nx);
  CHECK(gz.dims.nz > gz.dims.nx);
  // same solid, different orientation
  CHECK(tx.cells[0].mask.size() == ty.cells[0].mask.size());
  CHECK(tx.cells[0].mask.size() == tz.cells[0].mask.size());
}

TEST_CASE("tube phantom parameter contracts") {
  Spacing sp{0.5, 0.5, 0.5};
  try {
    make_tube(12.0, 1.0, Spacing{0, 0.5, 0.5});
    FAIL("expected contract");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::contract);
  }
  try {
    make_tube(12.0, 0.2, sp); // thinner than a voxel
    FAIL("expected resolution");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::resolution);
  }
  try {
    make_tube(1.5, 1.0, sp); // caps would overlap
    FAIL("expected contract");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::contract);
  }
}

TEST_CASE("Y-cell phantom carries junction topology truth") {
  Spacing sp{0.5, 0.5, 0.5};
  auto [grid, truth] = make_y_cell(12.0, 1.0, sp);
  REQUIRE(truth.cells.size() == 1);
  const CellTruth& cell = truth.cells[0];
  REQUIRE(cell.expected_endpoints);
  CHECK(*cell.expected_endpoints == 3);
  CHECK(*cell.expected_branchpoints == 1);
  CHECK(*cell.expected_skeleton_length_um == Catch::Approx(33.0));
  CHECK(cell.mask.size() > 0);

  Vec3 c = mean_of_centers(cell.mask, sp);
  CHECK(cell.centroid_um.x == Catch::Approx(c.x).margin(1e-12));
  CHECK(cell.centroid_um.y == Catch::Approx(c.y).margin(1e-12));
  CHECK(cell.centroid_um.z == Catch::Approx(c.z).margin(1e-12));
}

TEST_CASE("blob pair carries centroid-only truth with symmetric masks") {
  Spacing sp{0.5, 0.5, 0.5};
  auto [grid, truth] = make_blob_pair(4.0, 1.4, sp, /*merged=*/true);
  REQUIRE(truth.cells.size() == 2);
  for (const CellTruth& cell : truth.cells) {
    CHECK_FALSE(cell.expected_endpoints);
    CHECK_FALSE(cell.expected_branchpoints);
    CHECK_FALSE(cell.expected_skeleton_length_um);
    REQUIRE(!cell.mask.empty());
    Vec3 c = mean_of_centers(cell.mask, sp);
    CHECK(cell.centroid_um.x == Catch::Approx(c.x).margin(1e-9));
    CHECK(cell.centroid_um.y == Catch::Approx(c.y).margin(1e-9));
    CHECK(cell.centroid_um.z == Catch::Approx(c.z).margin(1e-9));
  }
  // the two truth balls never overlap
  auto s0 = voxel_set(truth.cells[0].mask);
  auto s1 = voxel_set(truth.cells[1].mask);
  for (const auto& v : s0) CHECK(s1.count(v) == 0);
  // stated separation along x
  double sep = truth.cells[1].centroid_um.x - truth.cells[0].centroid_um.x;
  CHECK(std::abs(sep) == Catch::Approx(4.0).margin(0.5));
  // peak intensity saturates at 1
  float peak = 0.0f;
  for (float v : grid.values) peak = std::max(peak, v);
  CHECK(peak == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("blob pair separation contracts") {
  Spacing sp{0.5, 0.5, 0.5};
  try {
    make_blob_pair(5.0, 1.4, sp, true); // 5 >= 3*1.4
    FAIL("expected config");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
  try {
    make_blob_pair(3.0, 1.4, sp, false); // 3 < 3*1.4
    FAIL("expected config");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
  try {
    make_blob_pair(4.0, 0.2, sp, true); // sigma below voxel pitch
    FAIL("expected resolution");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::resolution);
  }
}

TEST_CASE("scene truth masks partition the stamped foreground") {
  SceneSpec spec;
  spec.dims = Dims{96, 96, 96};
  spec.k = 6;
  spec.seed = 11;
  auto [grid, truth] = make_scene(spec);
  REQUIRE(truth.cells.size() == 6);

  std::set<VoxelKey> all;
  std::size_t total = 0;
  for (const CellTruth& cell : truth.cells) {
    auto s = voxel_set(cell.mask);
    total += s.size();
    all.insert(s.begin(), s.end());
    Vec3 c = mean_of_centers(cell.mask, spec.spacing);
    CHECK(cell.centroid_um.x == Catch::Approx(c.x).margin(1e-9));
  }
  CHECK(all.size() == total); // pairwise disjoint
  std::size_t fg = 0;
  for (int z = 0; z < grid.dims.nz; ++z)
    for (int y = 0; y < grid.dims.ny; ++y)
      for (int x = 0; x < grid.dims.nx; ++x)
        if (grid.at(x, y, z) == 1.0f) {
          ++fg;
          CHECK(all.count({x, y, z}) == 1);
        }
  CHECK(fg == all.size()); // truth covers exactly the foreground

  auto [grid2, truth2] = make_scene(spec);
  CHECK(grid.values == grid2.values); // same seed, same scene

  SceneSpec other = spec;
  other.seed = 12;
  auto [grid3, truth3] = make_scene(other);
  CHECK(grid.values != grid3.values); // different seed, different layout
}

TEST_CASE("scene placement reports capacity and honors k = 0") {
  SceneSpec spec;
  spec.dims = Dims{24, 24, 24}; // 12 um across: no room for ten 12 um tubes
  spec.k = 10;
  spec.max_attempts_per_cell = 50;
  try {
    make_scene(spec);
    FAIL("expected capacity");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::capacity);
  }

  SceneSpec none;
  none.dims = Dims{32, 32, 32};
  none.k = 0;
  auto [grid, truth] = make_scene(none);
  CHECK(truth.cells.empty());
  for (float v : grid.values) CHECK(v == 0.0f);
}

TEST_CASE("noise is clamped, seeded, and absent at sigma zero") {
  VoxelGrid g(Dims{40, 40, 40}, Spacing{1, 1, 1}, 0.5f);
  VoxelGrid same = add_noise(g, 0.0, 5);
  CHECK(same.values == g.values);

  VoxelGrid n1 = add_noise(g, 0.01, 5);
  VoxelGrid n2 = add_noise(g, 0.01, 5);
  VoxelGrid n3 = add_noise(g, 0.01, 6);
  CHECK(n1.values == n2.values);
  CHECK(n1.values != n3.values);

  long double delta = 0;
  bool changed = false;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    CHECK(n1.values[i] >= 0.0f);
    CHECK(n1.values[i] <= 1.0f);
    delta += n1.values[i] - g.values[i];
    if (n1.values[i] != g.values[i]) changed = true;
  }
  CHECK(changed);
  // zero-mean noise: the average shift stays within a few standard errors
  CHECK(std::abs(static_cast<double>(delta) / g.values.size()) < 1e-3);

  VoxelGrid hot(Dims{8, 8, 8}, Spacing{1, 1, 1}, 0.999f);
  VoxelGrid hn = add_noise(hot, 0.5, 1);
  for (float v : hn.values) CHECK(v <= 1.0f); // clamped at the top

  try {
    add_noise(g, -0.1, 1);
    FAIL("expected contract");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::contract);
  }
}

TEST_CASE("segmentation recovers every scene cell near its true centroid") {
  for (CellKind kind : {CellKind::tube, CellKind::y, CellKind::blob}) {
    SceneSpec spec;
    // three-armed cells span ~2 arm lengths and need the roomier grid
    spec.dims = kind == CellKind::y ? Dims{80, 80, 80} : Dims{64, 64, 64};
    spec.k = 3;
    spec.kind = kind;
    spec.seed = 21;
    auto [grid, truth] = make_scene(spec);

    LabelVolume labels = label_components(binarize(grid, otsu_threshold(grid)), 26);
    REQUIRE(labels.k == 3);
    CellAnalysis analysis = analyze_cells(labels);
    REQUIRE(analysis.rows.size() == 3);

    std::vector<bool> used(3, false);
    for (const CellTruth& cell : truth.cells) {
      double best = 1e30;
      int best_i = -1;
      for (int i = 0; i < 3; ++i) {
        if (used[i]) continue;
        double d = distance(analysis.rows[i].centroid_um, cell.centroid_um);
        if (d < best) {
          best = d;
          best_i = i;
        }
      }
      REQUIRE(best_i >= 0);
      used[best_i] = true;
      CHECK(best < 0.5); // within one voxel pitch
    }
  }
}
