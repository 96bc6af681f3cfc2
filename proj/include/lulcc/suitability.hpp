#pragma once

#include <Eigen/Dense>

#include "lulcc/grid.hpp"

namespace lulcc::suitability {

// Slope magnitude (rise/run) from the 3x3 Horn stencil, rescaled linearly to
// [0, 255] over the grid's own range. Border cells use the neighbours that
// exist: one-sided differences where a side is missing, row/column weights
// renormalized. A constant slope field rescales to all zeros.
ContinuousGrid slope_from_dem(const ContinuousGrid& dem);

// Urbanization suitability 1 / max(slope, 1)^0.1, in (0, 1].
double slope_suitability(double slope);
ContinuousGrid slope_suitability(const ContinuousGrid& slope);

// Exact Euclidean distance (map units) from every cell centre to the nearest
// cell holding target_code.
ContinuousGrid proximity_transform(const CategoricalGrid& target_mask, int target_code);

// Cramer's V of an r x c contingency table. Empty rows and columns are dropped
// before the chi-squared statistic is formed.
double cramers_v(const Eigen::MatrixXd& table);

// Bins the driver into `bins` equal-width intervals over its observed range
// and measures its association with the categorical outcome.
double cramers_v(const ContinuousGrid& driver, const CategoricalGrid& outcome, int bins = 10,
                 const Mask& mask = std::nullopt);

}  // namespace lulcc::suitability
