#pragma once

#include <filesystem>
#include <vector>

#include "lulcc/grid.hpp"

namespace lulcc::radiometry {

struct BandCalibration {
  double l_min = 0.0;
  double l_max = 1.0;
  double esun = 1.0;                   // mean solar exoatmospheric irradiance
  double sun_zenith_deg = 0.0;         // [0, 90)
  double earth_sun_distance_au = 1.0;

  void validate() const;
};

// Fills nodata cells with the mode of valid values in a window x window
// neighbourhood (clipped at borders, ties to the smallest value). Each pass
// reads only the previous pass's state; cells with no valid neighbour stay
// nodata and may be reached by a later pass.
ContinuousGrid slc_gap_fill(const ContinuousGrid& band, int window = 9, int max_passes = 5);

ContinuousGrid dark_object_subtract(const ContinuousGrid& band, double dark_dn);

// Radiance from an 8-bit DN. The full-scale denominator is 254, so DN 0 maps
// to l_min and DN 254 maps to l_max.
double dn_to_radiance(double dn, const BandCalibration& cal);

// Top-of-atmosphere planetary reflectance, pi * L * d^2 / (ESUN * cos(zenith)).
double toa_reflectance(double radiance, const BandCalibration& cal);

ContinuousGrid radiance_grid(const ContinuousGrid& dn, const BandCalibration& cal);
ContinuousGrid reflectance_grid(const ContinuousGrid& radiance, const BandCalibration& cal);

// Accepts a single calibration object or an array of them (one per band).
std::vector<BandCalibration> load_calibration(const std::filesystem::path& path);

}  // namespace lulcc::radiometry
