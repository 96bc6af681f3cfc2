#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lulcc/grid.hpp"
#include "lulcc/markov.hpp"

namespace lulcc {

using Transition = std::pair<int, int>;  // (from class, to class)

// The four sub-modelled change types: V->S, V->I, S->V, S->I.
std::set<Transition> default_allowed_transitions();

struct Driver {
  std::string name;
  ContinuousGrid grid;
};

struct LogisticModel {
  std::vector<std::string> feature_names;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_stddev;

  // Probability for one raw (unstandardized) feature vector.
  double predict(std::span<const double> features) const;
  void validate() const;
};

struct TransitionSubModel {
  int from_class = 0;
  int to_class = 0;
  LogisticModel model;
};

enum class LabelBalance { mixed, no_positive, no_negative };

struct TransitionSamples {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;      // samples x features, raw values
  Eigen::VectorXd labels;        // 0 or 1
  std::vector<std::size_t> cells;  // row-major cell index of each sample
  LabelBalance balance = LabelBalance::mixed;
};

struct PotentialMap {
  int from_class = 0;
  int to_class = 0;
  ContinuousGrid grid;  // probabilities on from_class cells, nodata elsewhere
};

struct QuantumTable {
  std::map<Transition, long long> entries;
  std::map<int, long long> persistence;  // cells of each class that stay put
  std::map<int, long long> class_counts;

  long long at(int from, int to) const;
};

struct Shortfall {
  Transition transition;
  long long quota = 0;
  long long eligible = 0;
  long long allocated = 0;
};

struct AllocationResult {
  CategoricalGrid grid;
  std::map<Transition, long long> allocated;
  std::vector<Shortfall> shortfalls;
};

nlohmann::json to_json(const TransitionSubModel& m);
TransitionSubModel submodel_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QuantumTable& q);

namespace lcm {

TransitionSamples build_transition_samples(const CategoricalGrid& t0, const CategoricalGrid& t1,
                                           std::span<const Driver> drivers, int from_class,
                                           int to_class, const Mask& mask = std::nullopt);

// Penalized negative log-likelihood of the logistic model on standardized
// features z: sum log(1 + e^eta) - y*eta + l2/2 * |w|^2, with eta = b + z.w.
// theta packs (intercept, w).
double logistic_objective(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& theta, double l2);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& theta, double l2);

// Damped Newton on the penalized objective until the gradient max-norm is
// below 1e-8. Features are z-standardized with the sample mean and stddev.
LogisticModel fit_logistic(const TransitionSamples& samples, double l2 = 1e-6);

PotentialMap potential_map(const TransitionSubModel& submodel, std::span<const Driver> drivers,
                           const CategoricalGrid& t0, const Mask& mask = std::nullopt);

// Cell quotas per allowed transition: a_ij * n_i integerized by the largest
// remainder method. Mass of transitions outside `allowed` stays in persistence.
QuantumTable compute_quantum(const TransitionMatrix& a, const CategoricalGrid& t0,
                             const Mask& mask, const std::set<Transition>& allowed);

// Rank allocation: every (cell, transition) candidate is visited in order of
// descending potential (ties: ascending from, to, then cell index) and taken
// while the cell is unclaimed and the transition still has quota left.
AllocationResult allocate_changes(const CategoricalGrid& t0, std::span<const PotentialMap> potentials,
                                  const QuantumTable& quantum, const Mask& mask = std::nullopt);

}  // namespace lcm
}  // namespace lulcc
