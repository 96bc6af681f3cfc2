#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lulcc/radiometry.hpp"
#include "support.hpp"

using namespace lulcc;
using namespace lulcc::testing;
using radiometry::BandCalibration;

TEST_SUITE("radiometry") {

TEST_CASE("gap fill takes the window mode") {
  constexpr double nd = -9999.0;
  // Clipped 3x3 window around the corner holds {5, 5, 5, 7}.
  const auto band = cont_grid(3, 3, {nd, 5, 9, 5, 5, 9, 7, 9, 9});
  const auto filled = radiometry::slc_gap_fill(band, 3, 1);
  CHECK(filled.at(0, 0) == 5.0);
  for (std::size_t i = 1; i < band.size(); ++i) CHECK(filled[i] == band[i]);
}

TEST_CASE("gap fill ties go to the smaller value") {
  constexpr double nd = -9999.0;
  const auto band = cont_grid(1, 3, {8, nd, 2});
  CHECK(radiometry::slc_gap_fill(band, 3, 1)[1] == 2.0);
}

TEST_CASE("gap fill leaves complete bands alone") {
  const auto band = cont_grid(2, 2, {1, 2, 3, 4});
  CHECK(radiometry::slc_gap_fill(band) == band);
}

TEST_CASE("gap fill stops after max passes") {
  constexpr double nd = -9999.0;
  std::vector<double> cells(1 * 9, nd);
  cells[0] = 1.0;
  const auto band = cont_grid(1, 9, cells);
  const auto filled = radiometry::slc_gap_fill(band, 3, 2);
  CHECK(filled[1] == 1.0);
  CHECK(filled[2] == 1.0);
  CHECK(filled.is_nodata(3));
  CHECK(filled.is_nodata(8));
}

TEST_CASE("gap fill passes read only the previous state") {
  constexpr double nd = -9999.0;
  const auto band = cont_grid(1, 4, {3, nd, nd, nd});
  const auto filled = radiometry::slc_gap_fill(band, 3, 1);
  CHECK(filled[1] == 3.0);
  CHECK(filled.is_nodata(2));
}

TEST_CASE("even window is rejected") {
  CHECK_THROWS_AS(radiometry::slc_gap_fill(cont_grid(1, 1, {1}), 4, 1), Error);
}

TEST_CASE("dark object subtraction clamps at zero") {
  const auto band = cont_grid(1, 3, {12, 5, -9999});
  CHECK(radiometry::dark_object_subtract(band, 0.0) == band);
  const auto out = radiometry::dark_object_subtract(band, 10.0);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 0.0);
  CHECK(out.is_nodata(2));
}

TEST_CASE("dn to radiance") {
  BandCalibration cal{-1.17, 12.65, 1.0, 0.0, 1.0};
  CHECK(radiometry::dn_to_radiance(0.0, cal) == cal.l_min);
  CHECK(radiometry::dn_to_radiance(254.0, cal) == cal.l_max);
  CHECK(radiometry::dn_to_radiance(254.0, BandCalibration{0.0, 10.0}) == 10.0);
  CHECK(radiometry::dn_to_radiance(127.0, BandCalibration{0.0, 254.0}) == doctest::Approx(127.0).epsilon(1e-14));
  CHECK_THROWS_AS(radiometry::dn_to_radiance(256.0, cal), Error);
  CHECK_THROWS_AS(radiometry::dn_to_radiance(-1.0, cal), Error);
}

TEST_CASE("toa reflectance") {
  const double l = 3.7;
  BandCalibration cal{0.0, 10.0, std::numbers::pi * l, 0.0, 1.0};
  CHECK(radiometry::toa_reflectance(0.0, cal) == 0.0);
  CHECK(std::abs(radiometry::toa_reflectance(l, cal) - 1.0) < 1e-12);
  cal.sun_zenith_deg = 60.0;
  CHECK(std::abs(radiometry::toa_reflectance(l, cal) - 2.0) < 1e-12);
}

TEST_CASE("calibration is validated") {
  CHECK_THROWS_AS(BandCalibration({5.0, 1.0}).validate(), Error);
  CHECK_THROWS_AS(BandCalibration({0.0, 1.0, 1.0, 90.0, 1.0}).validate(), Error);
  CHECK_THROWS_AS(BandCalibration({0.0, 1.0, 0.0, 0.0, 1.0}).validate(), Error);
}

}  // TEST_SUITE
