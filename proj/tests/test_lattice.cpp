#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "polylab/error.hpp"
#include "polylab/lattice.hpp"

using namespace polylab;

TEST_CASE("site basics") {
  const Site x{2, -1};
  CHECK(x.dim() == 2);
  CHECK(x.l1_norm() == 3);
  CHECK(x.to_string() == "2;-1");
  CHECK(Site{-3}.to_string() == "-3");
  CHECK(l1_distance(x, Site{0, 0}) == 3);
  CHECK(Site{0, 1} < Site{1, -5});
  CHECK(Site::origin(3) == Site{0, 0, 0});
}

TEST_CASE("neighbors are lexicographic") {
  const auto nb = neighbors(Site{0, 0});
  REQUIRE(nb.size() == 4);
  CHECK(nb[0] == Site{-1, 0});
  CHECK(nb[1] == Site{0, -1});
  CHECK(nb[2] == Site{0, 1});
  CHECK(nb[3] == Site{1, 0});
  CHECK(std::is_sorted(nb.begin(), nb.end()));
}

TEST_CASE("reachability parity and range") {
  CHECK(is_reachable(Site{1}, 1));
  CHECK_FALSE(is_reachable(Site{0}, 1));
  CHECK(is_reachable(Site{0}, 2));
  CHECK_FALSE(is_reachable(Site{3}, 1));
  CHECK(is_reachable(Site{1, 1}, 4));
  CHECK_FALSE(is_reachable(Site{1, 0}, 4));
}

TEST_CASE("reachable sites match walk endpoints") {
  for (int d = 1; d <= 4; ++d) {
    for (int k = 1; k <= (d <= 2 ? 8 : 4); ++k) {
      const auto sites = reachable_sites(d, k);
      const auto ends = oracle::walk_endpoints(d, k);
      CHECK(std::set<Site>(sites.begin(), sites.end()) == ends);
      CHECK(sites.size() == ends.size());
      CHECK(std::is_sorted(sites.begin(), sites.end()));
    }
  }
  // d = 1: k + 1 sites; d = 2: (k + 1)^2 sites.
  CHECK(reachable_sites(1, 300).size() == 301);
  CHECK(reachable_sites(2, 10).size() == 121);
}

TEST_CASE("cone layout agrees with reachable_sites") {
  for (int d = 1; d <= 3; ++d) {
    const int n = d == 3 ? 5 : 9;
    const Cone cone(d, n);
    CHECK(cone.layer_size(0) == 1);
    std::size_t total = 1;
    for (int k = 1; k <= n; ++k) {
      const auto sites = reachable_sites(d, k);
      REQUIRE(cone.layer_size(k) == sites.size());
      total += sites.size();
      std::set<Site> seen;
      for (std::size_t i = 0; i < cone.layer_size(k); ++i) {
        const Site x = cone.site(k, i);
        CHECK(is_reachable(x, k));
        CHECK(cone.index(k, x) == i);
        seen.insert(x);
      }
      CHECK(seen.size() == sites.size());
      CHECK_FALSE(cone.index(k, Site::origin(d)).has_value() != (k % 2 == 0));
    }
    CHECK(cone.total_size() == total);
  }
}

TEST_CASE("cone neighbor enumeration is exact and lexicographic") {
  for (int d = 1; d <= 3; ++d) {
    const int n = d == 3 ? 5 : 7;
    const Cone cone(d, n);
    for (int k = 1; k <= n; ++k) {
      for (std::size_t i = 0; i < cone.layer_size(k); ++i) {
        const Site x = cone.site(k, i);
        std::vector<Site> preds, expect;
        cone.for_each_predecessor(k, i, [&](std::size_t j) { preds.push_back(cone.site(k - 1, j)); });
        for (const auto& y : neighbors(x)) {
          if (is_reachable(y, k - 1) || (k == 1 && y == Site::origin(d))) expect.push_back(y);
        }
        CHECK(preds == expect);
        if (k < n) {
          std::vector<Site> succ, expect_succ;
          cone.for_each_successor(k, i, [&](std::size_t j) { succ.push_back(cone.site(k + 1, j)); });
          for (const auto& y : neighbors(x)) {
            if (is_reachable(y, k + 1)) expect_succ.push_back(y);
          }
          CHECK(succ == expect_succ);
        }
      }
    }
  }
}

TEST_CASE("polymer path validation and csv round trip") {
  const PolymerPath p(2, {Site{1, 0}, Site{1, 1}, Site{0, 1}});
  CHECK(p.is_valid());
  CHECK(p.at(2) == Site{1, 1});
  CHECK(p.to_csv_row() == "1,1,0,0,1,1");
  CHECK(PolymerPath::from_csv_row(2, p.to_csv_row()) == p);

  const PolymerPath jump(1, {Site{1}, Site{3}});
  CHECK_FALSE(jump.is_valid());
  CHECK_THROWS_AS(jump.validate(), ConfigError);
  CHECK_FALSE(PolymerPath(1, {Site{0}}).is_valid());
}

TEST_CASE("overlap counts shared steps") {
  const PolymerPath p(1, {Site{1}, Site{0}, Site{1}, Site{2}});
  const PolymerPath q(1, {Site{1}, Site{2}, Site{1}, Site{0}});
  CHECK(overlap(p, q) == 2);
  CHECK(overlap(p, p) == 4);
  CHECK_THROWS_AS(overlap(p, PolymerPath(1, {Site{1}})), ConfigError);
}

TEST_CASE("layer field reads zero outside the cone") {
  auto cone = std::make_shared<const Cone>(1, 3);
  const LayerField f(cone, 2, {0.25, 0.5, 0.25});
  CHECK(f.at(Site{0}) == 0.5);
  CHECK(f.at(Site{1}) == 0.0);
  CHECK(f.at(Site{4}) == 0.0);
  CHECK(f.sum() == 1.0);
}

TEST_CASE("property: random walks stay in the cone and overlap is symmetric") {
  std::mt19937_64 gen(4242);
  for (int t = 0; t < 300; ++t) {
    const int d = 1 + static_cast<int>(gen() % 3);
    const int n = 1 + static_cast<int>(gen() % 20);
    std::vector<Site> a, b;
    Site x = Site::origin(d), y = Site::origin(d);
    for (int k = 1; k <= n; ++k) {
      const auto nx = neighbors(x);
      const auto ny = neighbors(y);
      x = nx[gen() % nx.size()];
      y = ny[gen() % ny.size()];
      CHECK(is_reachable(x, k));
      a.push_back(x);
      b.push_back(y);
    }
    const PolymerPath p(d, a), q(d, b);
    CHECK(p.is_valid());
    CHECK(overlap(p, q) == overlap(q, p));
    CHECK(overlap(p, q) <= n);
    CHECK(PolymerPath::from_csv_row(d, p.to_csv_row()) == p);
  }
}
