#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "json.hpp"
#include "lulcc/factors.hpp"
#include "lulcc/grid.hpp"
#include "lulcc/hmm.hpp"
#include "lulcc/markov.hpp"

namespace lulcc {

struct Epoch {
  int transitions = 1;  // number of yearly steps governed by this matrix
  TransitionMatrix trans;
};

struct WaterRect {
  int row0 = 0, col0 = 0, row1 = 0, col1 = 0;  // inclusive bounds
};

struct ScenarioConfig {
  int nrows = 64;
  int ncols = 64;
  double cellsize = 30.0;
  std::vector<int> classes{kVegetation, kImpervious, kSoil};
  std::vector<double> initial_mix{0.5, 0.2, 0.3};
  int start_year = 2001;
  int years = 14;
  std::vector<Epoch> epochs;
  std::vector<std::string> factor_names;
  Eigen::MatrixXd emission_means;  // classes x factors
  Eigen::MatrixXd emission_vars;   // classes x factors
  int repeat_factor = 6;
  double slope_amplitude = 120.0;  // relief of the terrain ramp, map units
  double hill_amplitude = 25.0;
  std::vector<int> road_rows;
  std::vector<int> road_cols;
  std::vector<WaterRect> water;
  // to-class -> (weight on suitability z-score, weight on road-distance z-score)
  std::map<int, std::pair<double, double>> placement_weights{
      {kImpervious, {1.0, -1.0}}, {kSoil, {0.5, -0.5}}, {kVegetation, {-0.5, 0.5}}};
  double placement_noise = 0.75;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ScenarioBundle {
  std::vector<int> years;
  std::vector<CategoricalGrid> landcover;
  FactorTable factors;  // min-max normalized
  ContinuousGrid dem;
  ContinuousGrid slope;
  ContinuousGrid suitability;
  CategoricalGrid roads;
  ContinuousGrid proximity;
  CategoricalGrid water_mask;  // 1 on water, 0 elsewhere
  std::vector<GaussianHmmParams> true_params;  // one per epoch
};

ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario_config(const std::filesystem::path& path);

namespace synth {

struct HmmSample {
  std::vector<std::size_t> states;  // indices into params.classes
  ObservationSequence observations;
};

HmmSample sample_hmm_sequence(const GaussianHmmParams& params, std::size_t length, std::uint64_t seed);

ScenarioBundle generate_scenario(const ScenarioConfig& config);

// Writes lc_<year>.asc grids, the driver grids, water_mask.asc, factors.csv
// and truth.json into `dir`.
void write_bundle(const ScenarioBundle& bundle, const ScenarioConfig& config,
                  const std::filesystem::path& dir);

}  // namespace synth
}  // namespace lulcc
