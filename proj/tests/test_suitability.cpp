#include <cmath>

#include "doctest.h"
#include "lulcc/suitability.hpp"
#include "support.hpp"

using namespace lulcc;
using namespace lulcc::testing;

TEST_SUITE("suitability") {

TEST_CASE("flat and planar DEMs give zero slope") {
  const auto flat = suitability::slope_from_dem(cont_grid(3, 4, std::vector<double>(12, 7.0)));
  for (double v : flat.cells()) CHECK(v == 0.0);

  std::vector<double> ramp(20);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c) ramp[r * 5 + c] = 3.0 * c;
  const auto planar = suitability::slope_from_dem(cont_grid(4, 5, ramp));
  for (double v : planar.cells()) CHECK(v == 0.0);
}

TEST_CASE("single peak fixture by hand") {
  // cellsize 1. The own row/column carries weight 2. Edge midpoints see
  // gy = (0 + 2*9 + 0) / 4 = 4.5, the steepest value. Corners see
  // gx = gy = (2*0 + 1*9) / 3 = 3, raw 3*sqrt(2). The symmetric peak is flat.
  auto dem = cont_grid(3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0});
  auto h = dem.header();
  h.cellsize = 1.0;
  dem = ContinuousGrid(h, std::vector<double>(dem.cells().begin(), dem.cells().end()));
  const auto s = suitability::slope_from_dem(dem);
  CHECK(s.at(1, 1) == 0.0);
  for (auto [r, c] : {std::pair{0, 1}, {1, 0}, {1, 2}, {2, 1}}) CHECK(s.at(r, c) == doctest::Approx(255.0));
  const double corner = 255.0 * 3.0 * std::sqrt(2.0) / 4.5;
  for (auto [r, c] : {std::pair{0, 0}, {0, 2}, {2, 0}, {2, 2}}) CHECK(s.at(r, c) == doctest::Approx(corner));
}

TEST_CASE("slope needs 2x2") {
  CHECK_THROWS_AS(suitability::slope_from_dem(cont_grid(1, 5, {1, 2, 3, 4, 5})), Error);
}

TEST_CASE("slope suitability transform") {
  CHECK(suitability::slope_suitability(1.0) == 1.0);
  CHECK(suitability::slope_suitability(0.0) == 1.0);
  CHECK(suitability::slope_suitability(0.5) == 1.0);
  CHECK(std::abs(suitability::slope_suitability(32.0) - 0.7071068) < 1e-7);
  double prev = 1.0;
  for (double s = 1.5; s <= 255.0; s += 0.5) {
    const double v = suitability::slope_suitability(s);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
  CHECK_THROWS_AS(suitability::slope_suitability(cont_grid(1, 1, {-1.0})), Error);
  const auto g = suitability::slope_suitability(cont_grid(1, 3, {0.0, 32.0, -9999.0}));
  CHECK(g[0] == 1.0);
  CHECK(g.is_nodata(2));
}

TEST_CASE("proximity distances") {
  const auto target = cat_grid(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0});
  const auto d = suitability::proximity_transform(target, 1);
  CHECK(d.at(1, 1) == 0.0);
  CHECK(d.at(0, 1) == doctest::Approx(30.0));
  CHECK(std::abs(d.at(0, 0) - 42.4264069) < 1e-7);
  CHECK_THROWS_AS(suitability::proximity_transform(target, 5), Error);
}

TEST_CASE("proximity matches brute force") {
  Rng rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const int nr = 1 + static_cast<int>(rng.below(12)), nc = 1 + static_cast<int>(rng.below(12));
    std::vector<int> cells(nr * nc);
    for (auto& v : cells) v = rng.uniform() < 0.1 ? 1 : 0;
    cells[rng.below(cells.size())] = 1;
    const auto d = suitability::proximity_transform(cat_grid(nr, nc, cells), 1);
    for (int r = 0; r < nr; ++r)
      for (int c = 0; c < nc; ++c) {
        double best = INFINITY;
        for (int rr = 0; rr < nr; ++rr)
          for (int cc = 0; cc < nc; ++cc)
            if (cells[rr * nc + cc] == 1) best = std::min(best, std::hypot(30.0 * (rr - r), 30.0 * (cc - c)));
        CHECK(d.at(r, c) == doctest::Approx(best).epsilon(1e-12));
      }
  }
}

TEST_CASE("cramers v tables") {
  Eigen::MatrixXd perfect(2, 2), indep(2, 2), half(2, 2);
  perfect << 10, 0, 0, 10;
  indep << 5, 5, 5, 5;
  half << 30, 10, 10, 30;
  CHECK(std::abs(suitability::cramers_v(perfect) - 1.0) < 1e-12);
  CHECK(suitability::cramers_v(indep) == 0.0);
  CHECK(std::abs(suitability::cramers_v(half) - 0.5) < 1e-12);
  Eigen::MatrixXd with_empty(3, 3);
  with_empty << 30, 0, 10, 0, 0, 0, 10, 0, 30;
  CHECK(std::abs(suitability::cramers_v(with_empty) - 0.5) < 1e-12);
}

TEST_CASE("cramers v on grids") {
  const auto outcome = cat_grid(1, 8, {0, 0, 0, 0, 1, 1, 1, 1});
  const auto driver = cont_grid(1, 8, {0, 1, 2, 3, 10, 11, 12, 13});
  CHECK(std::abs(suitability::cramers_v(driver, outcome, 10) - 1.0) < 1e-12);
  CHECK(suitability::cramers_v(cont_grid(1, 8, std::vector<double>(8, 4.0)), outcome) == 0.0);
  CHECK_THROWS_AS(suitability::cramers_v(driver, cat_grid(1, 8, std::vector<int>(8, 1))), Error);

  Rng rng(67);
  std::vector<double> xs(200);
  std::vector<int> ys(200);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = rng.uniform();
    ys[i] = rng.uniform() < xs[i] ? 1 : 2;
  }
  const auto dr = cont_grid(10, 20, xs);
  const auto oc = cat_grid(10, 20, ys);
  const double v = suitability::cramers_v(dr, oc);
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
  // Affine transforms keep equal-width bin membership.
  std::vector<double> scaled(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) scaled[i] = 4.0 * xs[i] + 2.0;
  CHECK(suitability::cramers_v(cont_grid(10, 20, scaled), oc) == doctest::Approx(v).epsilon(1e-12));
}

}  // TEST_SUITE
