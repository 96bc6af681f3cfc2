#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lulcc/factors.hpp"
#include "lulcc/markov.hpp"

namespace lulcc {

inline constexpr double kVarianceFloor = 1e-6;
inline constexpr double kProbabilityFloor = 1e-6;

// Gaussian-emission HMM whose hidden states are land-cover classes. Emissions
// use a diagonal covariance: vars(i, d) is the variance of factor d in state i.
struct GaussianHmmParams {
  std::vector<int> classes;
  Eigen::VectorXd pi;
  TransitionMatrix trans;
  Eigen::MatrixXd means;  // states x factors
  Eigen::MatrixXd vars;   // states x factors

  std::size_t num_states() const { return classes.size(); }
  Eigen::Index dim() const { return means.cols(); }
  void validate() const;
};

struct TrainingTrace {
  std::vector<double> log_likelihoods;  // one per completed E-step
  int iterations_run = 0;
  bool converged = false;
};

struct Posteriors {
  double log_likelihood = 0.0;
  Eigen::MatrixXd gamma;            // T x N state posteriors
  std::vector<Eigen::MatrixXd> xi;  // T-1 slices of N x N pairwise posteriors
};

nlohmann::json to_json(const GaussianHmmParams& p);
GaussianHmmParams hmm_params_from_json(const nlohmann::json& j);
GaussianHmmParams load_hmm_params(const std::filesystem::path& path);
void save_hmm_params(const GaussianHmmParams& p, const std::filesystem::path& path);

namespace hmm {

// pi and trans come from the initial class frequencies and the Markov-chain
// matrix (entries floored at 1e-6, then renormalized). Emission means are the
// centroids of a seeded k-means over the observations, largest cluster first;
// variances start at the global per-factor variance.
GaussianHmmParams init_params(const TransitionMatrix& mc_trans, std::span<const double> initial_freq,
                              const ObservationSequence& obs, std::uint64_t seed);

double log_emission_density(const GaussianHmmParams& params, std::size_t state,
                            std::span<const double> x);

// Scaled forward-backward pass. Emission densities are shifted by their
// per-step maximum before exponentiation, so long sequences do not underflow.
Posteriors forward_backward(const GaussianHmmParams& params, const ObservationSequence& obs);

// Log-likelihood only (forward pass).
double log_likelihood(const GaussianHmmParams& params, const ObservationSequence& obs);

struct TrainingResult {
  GaussianHmmParams params;
  TrainingTrace trace;
};

// Baum-Welch. Stops once the log-likelihood gain of an iteration drops below
// `tol` or after `max_iter` E-steps.
TrainingResult baum_welch_train(const GaussianHmmParams& params, const ObservationSequence& obs,
                                int max_iter = 50000, double tol = 0.01);

TransitionMatrix learned_quantum(const GaussianHmmParams& params);

}  // namespace hmm
}  // namespace lulcc
