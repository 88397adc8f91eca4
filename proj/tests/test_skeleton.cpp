#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "voxmorph/phantom.hpp"
#include "voxmorph/random.hpp"
#include "voxmorph/segmentation.hpp"
#include "voxmorph/skeleton.hpp"
#include "voxmorph/skeleton_graph.hpp"

using namespace voxmorph;

namespace {

using VoxelKey = std::tuple<int, int, int>;

CellMask line_mask(int n, int axis, Spacing sp) {
  CellMask m;
  m.label = 1;
  m.spacing = sp;
  m.dims = Dims{axis == 0 ? n : 1, axis == 1 ? n : 1, axis == 2 ? n : 1};
  for (int i = 0; i < n; ++i)
    m.voxels.push_back({axis == 0 ? i : 0, axis == 1 ? i : 0, axis == 2 ? i : 0});
  return m;
}

// All cells of a label volume as independent masks.
std::vector<CellMask> masks_of(const LabelVolume& labels) {
  std::vector<CellMask> cells(labels.k);
  for (std::uint32_t l = 1; l <= labels.k; ++l) {
    cells[l - 1].label = l;
    cells[l - 1].dims = labels.dims;
    cells[l - 1].spacing = labels.spacing;
  }
  for (int z = 0; z < labels.dims.nz; ++z)
    for (int y = 0; y < labels.dims.ny; ++y)
      for (int x = 0; x < labels.dims.nx; ++x) {
        std::uint32_t l = labels.at(x, y, z);
        if (l) cells[l - 1].voxels.push_back({x, y, z});
      }
  return cells;
}

bool is_single_26_component(const std::vector<Index3>& voxels, Dims dims, Spacing sp) {
  BinaryVolume b;
  b.dims = dims;
  b.spacing = sp;
  b.mask.assign(dims.voxel_count(), 0);
  for (const auto& v : voxels) b.mask[dims.index(v.x, v.y, v.z)] = 1;
  auto part = oracles::cc_partition(b, 26);
  std::uint32_t maxl = 0;
  for (auto l : part) maxl = std::max(maxl, l);
  return maxl == 1;
}

} // namespace

TEST_CASE("a single voxel thins to one isolated node") {
  CellMask m = line_mask(1, 0, Spacing{1, 1, 1});
  Skeleton sk = skeletonize(m);
  REQUIRE(sk.voxels.size() == 1);
  SkeletonGraph g = build_graph(sk);
  REQUIRE(g.nodes.size() == 1);
  CHECK(g.nodes[0].kind == NodeKind::isolated);
  CHECK(g.branches.empty());
  BranchMetrics bm = branch_metrics(g);
  CHECK(bm.n_isolated == 1);
  CHECK(bm.n_endpoints == 0);
  CHECK(bm.n_branches == 0);
  CHECK_FALSE(bm.avg_length_um);
  CHECK_FALSE(bm.max_length_um);
  CHECK_FALSE(bm.min_length_um);
}

TEST_CASE("a straight voxel line keeps its exact length") {
  for (int axis : {0, 1, 2}) {
    CellMask m = line_mask(15, axis, Spacing{1, 1, 1});
    Skeleton sk = skeletonize(m);
    CHECK(sk.voxels.size() == 15); // already thin: nothing to remove
    SkeletonGraph g = build_graph(sk);
    BranchMetrics bm = branch_metrics(g);
    CHECK(bm.n_endpoints == 2);
    CHECK(bm.n_branchpoints == 0);
    CHECK(bm.n_branches == 1);
    CHECK(bm.total_length_um == Catch::Approx(14.0));
  }

  // anisotropic spacing scales the step length on the stretched axis
  CellMask mz = line_mask(9, 2, Spacing{0.5, 0.5, 2.0});
  BranchMetrics bm = branch_metrics(build_graph(skeletonize(mz)));
  CHECK(bm.total_length_um == Catch::Approx(16.0));
}

TEST_CASE("tube masks thin to a two-endpoint path") {
  Spacing sp{0.5, 0.5, 0.5};
  auto [grid, truth] = make_tube(14.0, 1.0, sp);
  CellMask m{1, truth.cells[0].mask, truth.dims, sp};
  Skeleton sk = skeletonize(m);
  CHECK(sk.voxels.size() < truth.cells[0].mask.size());
  SkeletonGraph g = build_graph(sk);
  BranchMetrics bm = branch_metrics(g);
  CHECK(bm.n_endpoints == 2);
  CHECK(bm.n_branchpoints == 0);
  CHECK(bm.n_branches == 1);
  double want = *truth.cells[0].expected_skeleton_length_um;
  CHECK(bm.total_length_um == Catch::Approx(want).epsilon(0.10));

  // the single branch visits every skeleton voxel
  std::set<VoxelKey> on_branch;
  for (const auto& v : g.branches[0].polyline) on_branch.insert({v.x, v.y, v.z});
  CHECK(on_branch.size() == sk.voxels.size());
}

TEST_CASE("Y masks thin to three branches around one junction") {
  Spacing sp{0.5, 0.5, 0.5};
  auto [grid, truth] = make_y_cell(12.0, 1.0, sp);
  CellMask m{1, truth.cells[0].mask, truth.dims, sp};
  SkeletonGraph g = build_graph(skeletonize(m));
  BranchMetrics bm = branch_metrics(g);
  CHECK(bm.n_endpoints == 3);
  CHECK(bm.n_branchpoints == 1);
  CHECK(bm.n_branches == 3);
  REQUIRE(bm.avg_length_um);
  CHECK(*bm.avg_length_um == Catch::Approx(11.0).epsilon(0.15));
  CHECK(bm.total_length_um ==
        Catch::Approx(*truth.cells[0].expected_skeleton_length_um).epsilon(0.10));
}

TEST_CASE("total length is invariant under axis permutation") {
  Spacing sp{0.5, 0.5, 0.5};
  double len[3];
  for (int axis : {0, 1, 2}) {
    auto [grid, truth] = make_tube(12.0, 1.0, sp, axis);
    CellMask m{1, truth.cells[0].mask, truth.dims, sp};
    len[axis] = branch_metrics(build_graph(skeletonize(m))).total_length_um;
  }
  CHECK(len[0] == Catch::Approx(len[1]).margin(1e-9));
  CHECK(len[0] == Catch::Approx(len[2]).margin(1e-9));
}

TEST_CASE("skeletonize enforces its mask contract") {
  CellMask empty;
  empty.dims = Dims{2, 2, 2};
  empty.spacing = Spacing{1, 1, 1};
  try {
    skeletonize(empty);
    FAIL("expected empty_input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::empty_input);
  }

  CellMask split;
  split.dims = Dims{5, 1, 1};
  split.spacing = Spacing{1, 1, 1};
  split.voxels = {{0, 0, 0}, {4, 0, 0}}; // two distant voxels
  try {
    skeletonize(split);
    FAIL("expected contract");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::contract);
  }
}

TEST_CASE("skeletons stay inside the mask and stay connected") {
  Rng rng(303);
  int tested = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Dims d{12, 12, 12};
    BinaryVolume b;
    b.dims = d;
    b.spacing = Spacing{1, 1, 1};
    b.mask.resize(d.voxel_count());
    double density = 0.2 + 0.4 * rng.uniform();
    for (auto& m : b.mask) m = rng.uniform() < density ? 1 : 0;
    LabelVolume labels = label_components(b, 26);
    for (CellMask& cell : masks_of(labels)) {
      std::set<VoxelKey> inside;
      for (const auto& v : cell.voxels) inside.insert({v.x, v.y, v.z});
      Skeleton sk = skeletonize(cell);
      REQUIRE(!sk.voxels.empty());
      for (const auto& v : sk.voxels) CHECK(inside.count({v.x, v.y, v.z}) == 1);
      CHECK(is_single_26_component(sk.voxels, d, b.spacing));
      ++tested;
    }
  }
  CHECK(tested > 100); // the trials actually produced many components
}

TEST_CASE("every skeleton voxel belongs to a branch or is isolated") {
  Spacing sp{0.5, 0.5, 0.5};
  SceneSpec spec;
  spec.dims = Dims{80, 80, 80};
  spec.k = 3;
  spec.kind = CellKind::y;
  spec.seed = 9;
  auto [grid, truth] = make_scene(spec);
  for (const CellTruth& cell : truth.cells) {
    CellMask m{1, cell.mask, truth.dims, sp};
    Skeleton sk = skeletonize(m);
    SkeletonGraph g = build_graph(sk);
    std::set<VoxelKey> covered;
    for (const auto& b : g.branches)
      for (const auto& v : b.polyline) covered.insert({v.x, v.y, v.z});
    for (const auto& n : g.nodes) covered.insert({n.voxel.x, n.voxel.y, n.voxel.z});
    // junction clusters may span a few voxels; every *covered* voxel must be
    // a skeleton voxel and all endpoints/branch voxels must be covered
    std::set<VoxelKey> skel;
    for (const auto& v : sk.voxels) skel.insert({v.x, v.y, v.z});
    for (const auto& v : covered) CHECK(skel.count(v) == 1);
    CHECK(covered.size() >= skel.size() * 9 / 10);
  }
}

TEST_CASE("branch lengths dominate the straight-line chord") {
  Spacing sp{0.5, 0.5, 0.5};
  auto [grid, truth] = make_y_cell(10.0, 1.0, sp);
  CellMask m{1, truth.cells[0].mask, truth.dims, sp};
  SkeletonGraph g = build_graph(skeletonize(m));
  REQUIRE(!g.branches.empty());
  for (const auto& b : g.branches) {
    REQUIRE(b.polyline.size() >= 2);
    Vec3 a = voxel_center(b.polyline.front(), sp);
    Vec3 z = voxel_center(b.polyline.back(), sp);
    CHECK(b.length_um >= distance(a, z) - 1e-9);
    // consecutive polyline voxels stay 26-adjacent
    for (std::size_t i = 1; i < b.polyline.size(); ++i) {
      CHECK(std::abs(b.polyline[i].x - b.polyline[i - 1].x) <= 1);
      CHECK(std::abs(b.polyline[i].y - b.polyline[i - 1].y) <= 1);
      CHECK(std::abs(b.polyline[i].z - b.polyline[i - 1].z) <= 1);
    }
  }
}
