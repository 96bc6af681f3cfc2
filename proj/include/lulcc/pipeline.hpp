#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lulcc/lcm.hpp"
#include "lulcc/synth.hpp"

namespace lulcc {

struct LandcoverInput {
  int year = 0;
  std::filesystem::path path;
};

struct DriverInput {
  std::string name;
  std::filesystem::path path;
};

// Inputs and parameters of a full MC-LR / HMM-LR comparison run. The Markov
// chain for the HMM's initialization comes from the first two land-cover
// years; the LR sub-models and the MC-LR matrix come from base -> calibration;
// both models predict target from the calibration grid.
struct PipelineConfig {
  std::vector<LandcoverInput> landcover;
  std::filesystem::path factors;
  std::vector<DriverInput> drivers;
  std::optional<std::filesystem::path> water_mask;
  std::vector<int> classes{kVegetation, kImpervious, kSoil};
  int base_year = 0;
  int calibration_year = 0;
  int target_year = 0;
  int repeat_factor = 6;
  int max_iter = 50000;
  double tol = 0.01;
  double l2 = 1e-6;
  int bins = 10;
  std::set<Transition> allowed = default_allowed_transitions();
  int urban_code = kImpervious;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  void validate() const;
};

// Relative paths resolve against base_dir.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const PipelineConfig& c);

// Config for a bundle written by synth::write_bundle, with paths relative to
// the bundle directory.
PipelineConfig bundle_pipeline_config(const ScenarioBundle& bundle, const ScenarioConfig& scenario);

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

namespace validate {
// Confusion counts, per-class precision/recall, overall accuracy and urban
// blob statistics.
nlohmann::json validation_report(const CategoricalGrid& actual, const CategoricalGrid& predicted,
                                 std::span<const int> classes, int urban_code, const Mask& mask);
}  // namespace validate

namespace pipeline {

// Runs both integrated models, writes every artifact into config.output_dir
// and returns the comparison report (also written as report.json).
nlohmann::json run_pipeline(const PipelineConfig& config);

}  // namespace pipeline
}  // namespace lulcc
