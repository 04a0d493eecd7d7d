#include <doctest.h>

#include "facetforge/error.hpp"
#include "facetforge/hac.hpp"
#include "test_support.hpp"

using namespace facetforge;

namespace {

DistanceMatrix three_points() {
  DistanceMatrix d(3);
  d.set(0, 1, 0.1);
  d.set(0, 2, 0.9);
  d.set(1, 2, 0.8);
  return d;
}

}  // namespace

TEST_SUITE("hac") {

TEST_CASE("hand-simulated merge") {
  CHECK(hac(three_points(), Linkage::average, 0.5) == Partition{{0, 1}, {2}});
  CHECK(hac(three_points(), Linkage::average, 0.86) == Partition{{0, 1, 2}});
  CHECK(hac(three_points(), Linkage::complete, 0.85) == Partition{{0, 1}, {2}});
  CHECK(hac(three_points(), Linkage::single, 0.8) == Partition{{0, 1, 2}});
}

TEST_CASE("threshold extremes") {
  for (Linkage l : {Linkage::single, Linkage::complete, Linkage::average}) {
    CHECK(hac(three_points(), l, 0.05) == Partition{{0}, {1}, {2}});
    CHECK(hac(three_points(), l, 0.9) == Partition{{0, 1, 2}});
  }
  CHECK(hac(DistanceMatrix(0), Linkage::average, 1.0).empty());
  CHECK(hac(DistanceMatrix(1), Linkage::average, 1.0) == Partition{{0}});
}

TEST_CASE("infinite pairs never merge") {
  DistanceMatrix d(3);
  d.set(0, 1, 0.1);
  CHECK(hac(d, Linkage::single, 1e9) == Partition{{0, 1}, {2}});
  d.set(1, 2, 0.2);
  // complete and average linkage see the unset (0,2) pair
  CHECK(hac(d, Linkage::complete, 1e9) == Partition{{0, 1}, {2}});
  CHECK(hac(d, Linkage::average, 1e9) == Partition{{0, 1}, {2}});
  CHECK(hac(d, Linkage::single, 1e9) == Partition{{0, 1, 2}});
}

TEST_CASE("ties go to the earliest pair") {
  DistanceMatrix d(3);
  d.set(0, 1, 0.2);
  d.set(1, 2, 0.2);
  d.set(0, 2, 0.9);
  CHECK(hac(d, Linkage::complete, 0.5) == Partition{{0, 1}, {2}});
}

TEST_CASE("matrix validation") {
  DistanceMatrix d(2);
  CHECK_THROWS_AS(d.set(0, 0, 0.1), InvalidArgument);
  CHECK_THROWS_AS(d.set(0, 2, 0.1), InvalidArgument);
  CHECK_THROWS_AS(d.set(0, 1, -0.1), InvalidArgument);
  CHECK_THROWS_AS(d.set(0, 1, std::nan("")), InvalidArgument);
  d.set(1, 0, 0.25);
  CHECK(d.at(0, 1) == 0.25);
  CHECK(d.at(1, 1) == 0.0);
}

TEST_CASE("linkage names") {
  for (Linkage l : {Linkage::single, Linkage::complete, Linkage::average}) {
    CHECK(parse_linkage(to_string(l)) == l);
  }
  CHECK_FALSE(parse_linkage("ward").has_value());
}

TEST_CASE("matches a brute-force simulation") {
  std::mt19937 rng(20211);
  std::uniform_int_distribution<std::size_t> size(1, 7);
  std::uniform_real_distribution<double> cut(0.0, 1.1);
  for (int trial = 0; trial < 300; ++trial) {
    auto d = testing::random_distances(rng, size(rng));
    double theta = cut(rng);
    for (Linkage l : {Linkage::single, Linkage::complete, Linkage::average}) {
      CHECK(hac(testing::to_matrix(d), l, theta) == testing::brute_force_hac(d, l, theta));
    }
  }
}

TEST_CASE("partition properties") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 9;
    auto d = testing::random_distances(rng, n);
    auto part = hac(testing::to_matrix(d), Linkage::average, 0.5);
    std::vector<int> seen(n, 0);
    for (const auto& c : part) {
      CHECK(std::is_sorted(c.begin(), c.end()));
      for (auto i : c) ++seen[i];
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    // raising the cut only coarsens
    auto coarse = hac(testing::to_matrix(d), Linkage::single, 0.75);
    for (const auto& c : hac(testing::to_matrix(d), Linkage::single, 0.5)) {
      bool inside = false;
      for (const auto& big : coarse) {
        inside = inside || std::includes(big.begin(), big.end(), c.begin(), c.end());
      }
      CHECK(inside);
    }
  }
}

}
