#include <doctest.h>

#include "oracles.hpp"
#include "staticmap/spatial_index.hpp"
#include "support.hpp"

using namespace staticmap;

TEST_SUITE("spatial_index") {
  TEST_CASE("nearest neighbor matches brute force") {
    testing::Rng rng(1);
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 3000; ++i) pts.push_back(rng.vec(-20, 20));
    const KdTree tree(pts);
    for (int q = 0; q < 2000; ++q) {
      const Eigen::Vector3d query = rng.vec(-25, 25);
      const double gate = rng.uniform(0.1, 5.0);
      const auto got = tree.nearest(query, gate);
      const auto expected = oracle::brute_nearest(pts, query, gate);
      REQUIRE(got.has_value() == expected.has_value());
      if (got) {
        CHECK(got->index == *expected);
        CHECK(got->squared_distance == (pts[*expected] - query).squaredNorm());
      }
    }
  }

  TEST_CASE("ties break toward the lower index") {
    std::vector<Eigen::Vector3d> pts(40, Eigen::Vector3d(1, 1, 1));
    pts.push_back({0, 0, 0});
    const KdTree tree(pts);
    CHECK(tree.nearest({1, 1, 1}, 1.0)->index == 0);
  }

  TEST_CASE("gate is inclusive and an empty tree finds nothing") {
    const KdTree tree({{0, 0, 0}});
    CHECK(tree.nearest({1, 0, 0}, 1.0).has_value());
    CHECK_FALSE(tree.nearest({1.0001, 0, 0}, 1.0).has_value());
    CHECK_FALSE(KdTree().nearest({0, 0, 0}, 100).has_value());
  }

  TEST_CASE("radius search matches brute force") {
    testing::Rng rng(2);
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 2000; ++i) pts.push_back(rng.vec(-10, 10));
    const KdTree tree(pts);
    for (int q = 0; q < 300; ++q) {
      const Eigen::Vector3d query = rng.vec(-10, 10);
      const double r = rng.uniform(0.5, 4.0);
      std::vector<std::size_t> expected;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if ((pts[i] - query).squaredNorm() <= r * r) expected.push_back(i);
      }
      CHECK(tree.radius_search(query, r) == expected);
    }
  }
}
