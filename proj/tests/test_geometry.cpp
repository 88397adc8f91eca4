#include <catch2/catch_amalgamated.hpp>

#include "voxmorph/geometry.hpp"
#include "voxmorph/random.hpp"
#include "voxmorph/voxel_grid.hpp"

using namespace voxmorph;

TEST_CASE("raster index is x-fastest") {
  Dims d{4, 3, 2};
  CHECK(d.index(0, 0, 0) == 0);
  CHECK(d.index(1, 0, 0) == 1);
  CHECK(d.index(0, 1, 0) == 4);
  CHECK(d.index(0, 0, 1) == 12);
  CHECK(d.voxel_count() == 24);
}

TEST_CASE("voxel centers use the half-offset convention") {
  Spacing s{0.5, 0.5, 1.0};
  Vec3 c = voxel_center({2, 3, 4}, s);
  CHECK(c.x == Catch::Approx(1.25));
  CHECK(c.y == Catch::Approx(1.75));
  CHECK(c.z == Catch::Approx(4.5));
}

TEST_CASE("neighbor offset tables have the right sizes and ranks") {
  const auto& offs = detail::neighbor_offsets_by_rank();
  REQUIRE(offs.size() == 26);
  for (int i = 0; i < 6; ++i) {
    int m = std::abs(offs[i].x) + std::abs(offs[i].y) + std::abs(offs[i].z);
    CHECK(m == 1); // first six are face neighbors
  }
  for (int i = 6; i < 18; ++i) {
    int m = std::abs(offs[i].x) + std::abs(offs[i].y) + std::abs(offs[i].z);
    CHECK(m == 2); // then edge neighbors
  }
  for (int i = 18; i < 26; ++i) {
    int m = std::abs(offs[i].x) + std::abs(offs[i].y) + std::abs(offs[i].z);
    CHECK(m == 3); // corners last
  }
  CHECK(detail::connectivity_offset_count(6) == 6);
  CHECK(detail::connectivity_offset_count(18) == 18);
  CHECK(detail::connectivity_offset_count(26) == 26);
  CHECK_THROWS_AS(detail::connectivity_offset_count(4), Error);
}

TEST_CASE("normalize rescales to [0, 1] and zeroes constant grids") {
  VoxelGrid g(Dims{3, 1, 1}, Spacing{1, 1, 1});
  g.values = {0.0f, 128.0f, 255.0f};
  VoxelGrid n = normalize(g);
  CHECK(n.values[0] == 0.0f);
  CHECK(n.values[1] == Catch::Approx(128.0 / 255.0));
  CHECK(n.values[2] == 1.0f);

  VoxelGrid c(Dims{2, 2, 1}, Spacing{1, 1, 1}, 7.0f);
  VoxelGrid nc = normalize(c);
  for (float v : nc.values) CHECK(v == 0.0f);
}

TEST_CASE("normalize is idempotent for non-constant grids") {
  Rng rng(123);
  VoxelGrid g(Dims{8, 8, 8}, Spacing{1, 1, 1});
  for (auto& v : g.values) v = static_cast<float>(rng.uniform() * 65535.0);
  VoxelGrid n1 = normalize(g);
  VoxelGrid n2 = normalize(n1);
  REQUIRE(n1.values.size() == n2.values.size());
  float mn = 1e9f, mx = -1e9f;
  for (std::size_t i = 0; i < n1.values.size(); ++i) {
    CHECK(n1.values[i] == n2.values[i]);
    mn = std::min(mn, n1.values[i]);
    mx = std::max(mx, n1.values[i]);
  }
  CHECK(mn == 0.0f);
  CHECK(mx == 1.0f);
}

TEST_CASE("deterministic rng reproduces and spans (0, 1)") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    double va = a.uniform(), vb = b.uniform();
    CHECK(va == vb);
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  Rng c(42), d(43);
  bool differ = false;
  for (int i = 0; i < 10; ++i)
    if (c.uniform() != d.uniform()) differ = true;
  CHECK(differ);
}

TEST_CASE("uniform_index stays in range and hits all values") {
  Rng rng(7);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 5000; ++i) {
    std::size_t v = rng.uniform_index(5);
    REQUIRE(v < 5);
    ++hits[v];
  }
  for (int h : hits) CHECK(h > 0);
}
