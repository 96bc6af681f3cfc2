#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lulcc {

// Yearly socioeconomic factor records: one row per year, one column per factor.
struct FactorTable {
  std::vector<int> years;
  std::vector<std::string> factor_names;
  Eigen::MatrixXd values;  // years.size() x factor_names.size()

  std::size_t num_years() const { return years.size(); }
  std::size_t num_factors() const { return factor_names.size(); }
  void validate(int max_year_step = 1) const;
};

// Training sequence for the HMM; row t is the observation vector at step t.
struct ObservationSequence {
  Eigen::MatrixXd observations;
  int repeat_factor = 1;

  Eigen::Index length() const { return observations.rows(); }
  Eigen::Index dim() const { return observations.cols(); }
};

namespace factors {

FactorTable load_factor_table(const std::filesystem::path& path, int max_year_step = 1);
void write_factor_table(const FactorTable& table, const std::filesystem::path& path);

// Per-column min-max scaling to [0, 1]; constant columns become all zeros.
FactorTable normalize_min_max(const FactorTable& table);

ObservationSequence build_observation_sequence(const FactorTable& table, int repeat_factor = 6);

}  // namespace factors
}  // namespace lulcc
