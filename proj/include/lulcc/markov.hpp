#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lulcc/grid.hpp"

namespace lulcc {

// Row-stochastic class-to-class transition probabilities; row i, column j is
// P(class j at t+1 | class i at t) for classes[i], classes[j].
struct TransitionMatrix {
  std::vector<int> classes;
  Eigen::MatrixXd probs;

  std::size_t size() const { return classes.size(); }
  std::size_t index_of(int code) const;  // throws when the code is unknown
  double at(int from, int to) const { return probs(index_of(from), index_of(to)); }
  void validate(double tol = 1e-9) const;
};

nlohmann::json to_json(const TransitionMatrix& m);
TransitionMatrix transition_matrix_from_json(const nlohmann::json& j);
TransitionMatrix load_transition_matrix(const std::filesystem::path& path);
void save_transition_matrix(const TransitionMatrix& m, const std::filesystem::path& path);

namespace markov {

// Integer cross-tabulation counts[i][j] of cells that hold classes[i] in t0 and
// classes[j] in t1, skipping nodata and masked cells.
Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> cross_tabulate(
    const CategoricalGrid& t0, const CategoricalGrid& t1, std::span<const int> classes,
    const Mask& mask = std::nullopt);

// Row-normalized cross-tabulation. Classes absent at t0 get an identity row.
TransitionMatrix estimate_transition_matrix(const CategoricalGrid& t0, const CategoricalGrid& t1,
                                            std::span<const int> classes,
                                            const Mask& mask = std::nullopt);

// A^k by repeated multiplication.
TransitionMatrix extrapolate_matrix_power(const TransitionMatrix& a, int k);

// Ad hoc power-law rule: raise every entry to `exponent`, then renormalize rows.
TransitionMatrix extrapolate_elementwise_power(const TransitionMatrix& a, double exponent);

// Extrapolates a matrix observed over `base_span` years to `target_span` years:
// an integer ratio uses the matrix power, anything else the elementwise rule.
TransitionMatrix extrapolate_span(const TransitionMatrix& a, int base_span, int target_span);

}  // namespace markov
}  // namespace lulcc
