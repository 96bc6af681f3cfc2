#include "lulcc/radiometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "json.hpp"

namespace lulcc::radiometry {

namespace {
constexpr const char* kModule = "radiometry";
constexpr double kDnFullScale = 254.0;
}  // namespace

void BandCalibration::validate() const {
  if (!(l_max > l_min)) throw Error(kModule, "l_max must exceed l_min");
  if (!(esun > 0.0)) throw Error(kModule, "esun must be positive");
  if (!(sun_zenith_deg >= 0.0 && sun_zenith_deg < 90.0))
    throw Error(kModule, "sun_zenith_deg must lie in [0, 90)");
  if (!(earth_sun_distance_au > 0.0)) throw Error(kModule, "earth_sun_distance_au must be positive");
}

ContinuousGrid slc_gap_fill(const ContinuousGrid& band, int window, int max_passes) {
  if (window < 1 || window % 2 == 0) throw Error(kModule, "window size must be odd and positive");
  if (max_passes < 1) throw Error(kModule, "max_passes must be positive");
  const int half = window / 2;
  const int nr = band.nrows(), nc = band.ncols();
  const double nodata = band.header().nodata_value;

  std::vector<double> cur(band.cells().begin(), band.cells().end());
  std::vector<double> values;
  for (int pass = 0; pass < max_passes; ++pass) {
    std::vector<double> next = cur;
    bool remaining = false;
    for (int r = 0; r < nr; ++r) {
      for (int c = 0; c < nc; ++c) {
        const std::size_t i = band.index(r, c);
        if (cur[i] != nodata) continue;
        values.clear();
        for (int rr = std::max(0, r - half); rr <= std::min(nr - 1, r + half); ++rr)
          for (int cc = std::max(0, c - half); cc <= std::min(nc - 1, c + half); ++cc) {
            const double v = cur[band.index(rr, cc)];
            if (v != nodata) values.push_back(v);
          }
        if (values.empty()) {
          remaining = true;
          continue;
        }
        std::sort(values.begin(), values.end());
        double best = values.front();
        std::size_t best_run = 0;
        for (std::size_t k = 0; k < values.size();) {
          std::size_t run = 1;
          while (k + run < values.size() && values[k + run] == values[k]) ++run;
          if (run > best_run) {
            best_run = run;
            best = values[k];
          }
          k += run;
        }
        next[i] = best;
      }
    }
    cur.swap(next);
    if (!remaining) break;
  }
  return ContinuousGrid(band.header(), std::move(cur));
}

ContinuousGrid dark_object_subtract(const ContinuousGrid& band, double dark_dn) {
  if (!std::isfinite(dark_dn)) throw Error(kModule, "dark_dn must be finite");
  ContinuousGrid out = band;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (band.is_nodata(i)) continue;
    out[i] = std::max(band[i] - dark_dn, 0.0);
  }
  return out;
}

double dn_to_radiance(double dn, const BandCalibration& cal) {
  cal.validate();
  if (!(dn >= 0.0 && dn <= 255.0)) throw Error(kModule, "dn out of range [0, 255]");
  // std::lerp is exact at both endpoints.
  return std::lerp(cal.l_min, cal.l_max, dn / kDnFullScale);
}

double toa_reflectance(double radiance, const BandCalibration& cal) {
  cal.validate();
  const double d = cal.earth_sun_distance_au;
  const double cos_zenith = std::cos(cal.sun_zenith_deg * std::numbers::pi / 180.0);
  return std::numbers::pi * radiance * d * d / (cal.esun * cos_zenith);
}

ContinuousGrid radiance_grid(const ContinuousGrid& dn, const BandCalibration& cal) {
  ContinuousGrid out = dn;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!dn.is_nodata(i)) out[i] = dn_to_radiance(dn[i], cal);
  return out;
}

ContinuousGrid reflectance_grid(const ContinuousGrid& radiance, const BandCalibration& cal) {
  ContinuousGrid out = radiance;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!radiance.is_nodata(i)) out[i] = toa_reflectance(radiance[i], cal);
  return out;
}

std::vector<BandCalibration> load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(kModule, "unreadable calibration file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(kModule, std::string("malformed calibration JSON: ") + e.what());
  }
  auto parse_one = [](const nlohmann::json& o) {
    BandCalibration cal;
    try {
      cal.l_min = o.at("l_min").get<double>();
      cal.l_max = o.at("l_max").get<double>();
      cal.esun = o.at("esun").get<double>();
      cal.sun_zenith_deg = o.at("sun_zenith_deg").get<double>();
      cal.earth_sun_distance_au = o.at("earth_sun_distance_au").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(kModule, std::string("calibration entry: ") + e.what());
    }
    cal.validate();
    return cal;
  };
  std::vector<BandCalibration> bands;
  if (j.is_array()) {
    for (const auto& o : j) bands.push_back(parse_one(o));
  } else {
    bands.push_back(parse_one(j));
  }
  if (bands.empty()) throw Error(kModule, "calibration file lists no bands");
  return bands;
}

}  // namespace lulcc::radiometry
