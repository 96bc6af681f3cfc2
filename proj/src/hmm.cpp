#include "lulcc/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "lulcc/error.hpp"
#include "lulcc/rng.hpp"

namespace lulcc {

namespace {

constexpr const char* kModule = "hmm";

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const char* name) {
  if (!rows.is_array() || rows.empty()) throw Error(kModule, std::string(name) + " must be a non-empty array");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.at(0).size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != c) throw Error(kModule, std::string(name) + " is ragged");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd floor_and_normalize(Eigen::VectorXd v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::max(v(i), kProbabilityFloor);
  return v / v.sum();
}

// Per-step emission log-densities, T x N.
Eigen::MatrixXd log_emissions(const GaussianHmmParams& p, const ObservationSequence& obs) {
  const Eigen::Index T = obs.length();
  const auto N = static_cast<Eigen::Index>(p.num_states());
  const Eigen::Index D = obs.dim();
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  Eigen::MatrixXd out(T, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    double norm = 0.0;
    for (Eigen::Index d = 0; d < D; ++d) norm += -0.5 * (log_2pi + std::log(p.vars(i, d)));
    for (Eigen::Index t = 0; t < T; ++t) {
      double q = 0.0;
      for (Eigen::Index d = 0; d < D; ++d) {
        const double diff = obs.observations(t, d) - p.means(i, d);
        q += diff * diff / (2.0 * p.vars(i, d));
      }
      out(t, i) = norm - q;
    }
  }
  return out;
}

void check_inputs(const GaussianHmmParams& p, const ObservationSequence& obs) {
  p.validate();
  if (obs.length() < 1) throw Error(kModule, "empty observation sequence");
  if (obs.dim() != p.dim()) throw Error(kModule, "observation dimension does not match emission dimension");
  if (obs.observations.hasNaN()) throw Error(kModule, "NaN observation");
  if (!obs.observations.allFinite()) throw Error(kModule, "non-finite observation");
}

// Scaled forward/backward lattices shared by inference and training.
struct Lattice {
  Eigen::MatrixXd emit;   // exp(log b - shift), T x N
  Eigen::VectorXd shift;  // per-step max log b
  Eigen::MatrixXd alpha;  // scaled, rows sum to 1
  Eigen::MatrixXd beta;   // scaled
  Eigen::VectorXd scale;  // c_t
  double log_likelihood = 0.0;
};

Lattice run_forward(const GaussianHmmParams& p, const ObservationSequence& obs) {
  const Eigen::Index T = obs.length();
  const auto N = static_cast<Eigen::Index>(p.num_states());
  Lattice L;
  const Eigen::MatrixXd logb = log_emissions(p, obs);
  L.shift = logb.rowwise().maxCoeff();
  L.emit.resize(T, N);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index i = 0; i < N; ++i) L.emit(t, i) = std::exp(logb(t, i) - L.shift(t));

  L.alpha.resize(T, N);
  L.scale.resize(T);
  const Eigen::MatrixXd& A = p.trans.probs;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t == 0) {
      L.alpha.row(0) = p.pi.transpose().cwiseProduct(L.emit.row(0));
    } else {
      L.alpha.row(t) = (L.alpha.row(t - 1) * A).cwiseProduct(L.emit.row(t));
    }
    const double c = L.alpha.row(t).sum();
    L.scale(t) = c;
    if (c > 0.0) L.alpha.row(t) /= c;
    L.log_likelihood += std::log(c) + L.shift(t);
  }
  return L;
}

void run_backward(const GaussianHmmParams& p, Lattice& L) {
  const Eigen::Index T = L.alpha.rows();
  const Eigen::Index N = L.alpha.cols();
  const Eigen::MatrixXd& A = p.trans.probs;
  L.beta.resize(T, N);
  L.beta.row(T - 1).setOnes();
  for (Eigen::Index t = T - 1; t-- > 0;) {
    const Eigen::RowVectorXd w = L.emit.row(t + 1).cwiseProduct(L.beta.row(t + 1));
    L.beta.row(t) = (A * w.transpose()).transpose() / L.scale(t + 1);
  }
}

std::vector<std::size_t> kmeans(const Eigen::MatrixXd& X, std::size_t k, std::uint64_t seed,
                                Eigen::MatrixXd& centroids) {
  const Eigen::Index T = X.rows();
  const Eigen::Index D = X.cols();
  Rng rng = Rng::stream(seed, "hmm.kmeans");

  // k-means++ seeding.
  centroids.resize(static_cast<Eigen::Index>(k), D);
  centroids.row(0) = X.row(static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(T))));
  std::vector<double> d2(static_cast<std::size_t>(T));
  for (std::size_t c = 1; c < k; ++c) {
    for (Eigen::Index t = 0; t < T; ++t) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < c; ++m)
        best = std::min(best, (X.row(t) - centroids.row(static_cast<Eigen::Index>(m))).squaredNorm());
      d2[static_cast<std::size_t>(t)] = best;
    }
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    const std::size_t pick = total > 0.0 ? rng.categorical(d2) : rng.below(static_cast<std::size_t>(T));
    centroids.row(static_cast<Eigen::Index>(c)) = X.row(static_cast<Eigen::Index>(pick));
  }

  std::vector<std::size_t> assign(static_cast<std::size_t>(T), k);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (Eigen::Index t = 0; t < T; ++t) {
      std::size_t best_c = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = (X.row(t) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
        if (dist < best) {
          best = dist;
          best_c = c;
        }
      }
      if (assign[static_cast<std::size_t>(t)] != best_c) {
        assign[static_cast<std::size_t>(t)] = best_c;
        changed = true;
      }
    }
    if (!changed) break;
    for (std::size_t c = 0; c < k; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(D);
      std::size_t n = 0;
      for (Eigen::Index t = 0; t < T; ++t)
        if (assign[static_cast<std::size_t>(t)] == c) {
          sum += X.row(t);
          ++n;
        }
      // Empty clusters keep their previous centroid.
      if (n > 0) centroids.row(static_cast<Eigen::Index>(c)) = sum / static_cast<double>(n);
    }
  }
  return assign;
}

}  // namespace

void GaussianHmmParams::validate() const {
  const auto N = static_cast<Eigen::Index>(classes.size());
  if (N == 0) throw Error(kModule, "no hidden states");
  if (pi.size() != N) throw Error(kModule, "pi length does not match state count");
  if ((pi.array() < 0.0).any() || std::fabs(pi.sum() - 1.0) > 1e-9)
    throw Error(kModule, "pi is not a probability vector");
  trans.validate();
  if (trans.classes != classes) throw Error(kModule, "transition classes differ from state classes");
  if (means.rows() != N || vars.rows() != N || means.cols() != vars.cols() || means.cols() < 1)
    throw Error(kModule, "emission parameter shapes are inconsistent");
  if (!means.allFinite() || !vars.allFinite()) throw Error(kModule, "non-finite emission parameter");
  if ((vars.array() < kVarianceFloor).any()) throw Error(kModule, "variance below floor");
}

nlohmann::json to_json(const GaussianHmmParams& p) {
  return {{"classes", p.classes},
          {"pi", std::vector<double>(p.pi.data(), p.pi.data() + p.pi.size())},
          {"trans", matrix_to_json(p.trans.probs)},
          {"means", matrix_to_json(p.means)},
          {"vars", matrix_to_json(p.vars)}};
}

GaussianHmmParams hmm_params_from_json(const nlohmann::json& j) {
  GaussianHmmParams p;
  try {
    p.classes = j.at("classes").get<std::vector<int>>();
    const auto pi = j.at("pi").get<std::vector<double>>();
    p.pi = Eigen::Map<const Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
    p.trans.classes = p.classes;
    p.trans.probs = matrix_from_json(j.at("trans"), "trans");
    p.means = matrix_from_json(j.at("means"), "means");
    p.vars = matrix_from_json(j.at("vars"), "vars");
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, std::string("malformed params JSON: ") + e.what());
  }
  p.validate();
  return p;
}

GaussianHmmParams load_hmm_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(kModule, "unreadable file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(kModule, std::string("malformed JSON: ") + e.what());
  }
  return hmm_params_from_json(j);
}

void save_hmm_params(const GaussianHmmParams& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(kModule, "unwritable path: " + path.string());
  out << to_json(p).dump(2) << '\n';
}

namespace hmm {

GaussianHmmParams init_params(const TransitionMatrix& mc_trans, std::span<const double> initial_freq,
                              const ObservationSequence& obs, std::uint64_t seed) {
  mc_trans.validate();
  const std::size_t N = mc_trans.size();
  if (initial_freq.size() != N) throw Error(kModule, "initial frequency length does not match class count");
  if (obs.length() < 1) throw Error(kModule, "empty observation sequence");
  if (obs.dim() < 1) throw Error(kModule, "observations have no factors");
  if (!obs.observations.allFinite()) throw Error(kModule, "non-finite observation");

  GaussianHmmParams p;
  p.classes = mc_trans.classes;
  p.pi = floor_and_normalize(
      Eigen::Map<const Eigen::VectorXd>(initial_freq.data(), static_cast<Eigen::Index>(N)));
  p.trans = mc_trans;
  for (Eigen::Index i = 0; i < p.trans.probs.rows(); ++i)
    p.trans.probs.row(i) = floor_and_normalize(p.trans.probs.row(i).transpose()).transpose();

  Eigen::MatrixXd centroids;
  const auto assign = kmeans(obs.observations, N, seed, centroids);
  std::vector<std::size_t> sizes(N, 0);
  for (auto a : assign) ++sizes[a];
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });

  const Eigen::Index D = obs.dim();
  p.means.resize(static_cast<Eigen::Index>(N), D);
  for (std::size_t k = 0; k < N; ++k)
    p.means.row(static_cast<Eigen::Index>(k)) = centroids.row(static_cast<Eigen::Index>(order[k]));

  const Eigen::RowVectorXd mean = obs.observations.colwise().mean();
  const Eigen::RowVectorXd var =
      (obs.observations.rowwise() - mean).array().square().colwise().mean().max(kVarianceFloor).matrix();
  p.vars = var.replicate(static_cast<Eigen::Index>(N), 1);
  p.validate();
  return p;
}

double log_emission_density(const GaussianHmmParams& params, std::size_t state,
                            std::span<const double> x) {
  if (state >= params.num_states()) throw Error(kModule, "state index out of range");
  if (static_cast<Eigen::Index>(x.size()) != params.dim())
    throw Error(kModule, "observation dimension does not match emission dimension");
  const auto i = static_cast<Eigen::Index>(state);
  double total = 0.0;
  for (Eigen::Index d = 0; d < params.dim(); ++d) {
    const double v = params.vars(i, d);
    const double diff = x[static_cast<std::size_t>(d)] - params.means(i, d);
    total += -0.5 * std::log(2.0 * std::numbers::pi * v) - diff * diff / (2.0 * v);
  }
  return total;
}

double log_likelihood(const GaussianHmmParams& params, const ObservationSequence& obs) {
  check_inputs(params, obs);
  return run_forward(params, obs).log_likelihood;
}

Posteriors forward_backward(const GaussianHmmParams& params, const ObservationSequence& obs) {
  check_inputs(params, obs);
  Lattice L = run_forward(params, obs);
  run_backward(params, L);
  const Eigen::Index T = obs.length();
  const auto N = static_cast<Eigen::Index>(params.num_states());
  const Eigen::MatrixXd& A = params.trans.probs;

  Posteriors post;
  post.log_likelihood = L.log_likelihood;
  post.gamma = L.alpha.cwiseProduct(L.beta);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double s = post.gamma.row(t).sum();
    if (s > 0.0) post.gamma.row(t) /= s;
  }
  post.xi.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(T - 1, 0)));
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    const Eigen::RowVectorXd w = L.emit.row(t + 1).cwiseProduct(L.beta.row(t + 1));
    Eigen::MatrixXd slice(N, N);
    for (Eigen::Index i = 0; i < N; ++i) slice.row(i) = L.alpha(t, i) * A.row(i).cwiseProduct(w);
    const double s = slice.sum();
    if (s > 0.0) slice /= s;
    post.xi.push_back(std::move(slice));
  }
  return post;
}

TrainingResult baum_welch_train(const GaussianHmmParams& params, const ObservationSequence& obs,
                                int max_iter, double tol) {
  check_inputs(params, obs);
  if (obs.length() < 2) throw Error(kModule, "training needs at least two observations");
  if (max_iter < 0) throw Error(kModule, "max_iter must be non-negative");

  const Eigen::Index T = obs.length();
  const auto N = static_cast<Eigen::Index>(params.num_states());
  const Eigen::Index D = obs.dim();
  const Eigen::MatrixXd& X = obs.observations;

  TrainingResult result{params, {}};
  GaussianHmmParams& p = result.params;
  TrainingTrace& trace = result.trace;

  for (int iter = 0; iter < max_iter; ++iter) {
    Lattice L = run_forward(p, obs);
    if (!std::isfinite(L.log_likelihood))
      throw Error(kModule, "NaN encountered at iteration " + std::to_string(iter));
    trace.log_likelihoods.push_back(L.log_likelihood);
    trace.iterations_run = iter + 1;
    if (iter > 0) {
      const double gain = L.log_likelihood - trace.log_likelihoods[trace.log_likelihoods.size() - 2];
      if (gain < tol) {
        trace.converged = true;
        break;
      }
    }
    run_backward(p, L);

    // Sufficient statistics.
    Eigen::MatrixXd gamma = L.alpha.cwiseProduct(L.beta);
    for (Eigen::Index t = 0; t < T; ++t) {
      const double s = gamma.row(t).sum();
      if (s > 0.0) gamma.row(t) /= s;
    }
    Eigen::MatrixXd xi_sum = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index t = 0; t + 1 < T; ++t) {
      const Eigen::RowVectorXd w = L.emit.row(t + 1).cwiseProduct(L.beta.row(t + 1));
      Eigen::MatrixXd slice(N, N);
      for (Eigen::Index i = 0; i < N; ++i) slice.row(i) = L.alpha(t, i) * p.trans.probs.row(i).cwiseProduct(w);
      const double s = slice.sum();
      if (s > 0.0) xi_sum += slice / s;
    }

    GaussianHmmParams next = p;
    next.pi = gamma.row(0).transpose();
    next.pi /= next.pi.sum();
    for (Eigen::Index i = 0; i < N; ++i) {
      const double row_total = xi_sum.row(i).sum();
      if (row_total > 0.0) next.trans.probs.row(i) = xi_sum.row(i) / row_total;
    }
    const Eigen::VectorXd weight = gamma.colwise().sum().transpose();
    for (Eigen::Index i = 0; i < N; ++i) {
      if (!(weight(i) > 0.0)) continue;
      const Eigen::RowVectorXd mu = (gamma.col(i).transpose() * X) / weight(i);
      Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(D);
      for (Eigen::Index t = 0; t < T; ++t) var += gamma(t, i) * (X.row(t) - mu).array().square().matrix();
      var /= weight(i);
      next.means.row(i) = mu;
      next.vars.row(i) = var.array().max(kVarianceFloor).matrix();
    }
    if (!next.means.allFinite() || !next.vars.allFinite() || !next.trans.probs.allFinite() ||
        !next.pi.allFinite())
      throw Error(kModule, "NaN encountered at iteration " + std::to_string(iter));
    p = std::move(next);
  }
  return result;
}

TransitionMatrix learned_quantum(const GaussianHmmParams& params) {
  params.validate();
  TransitionMatrix out = params.trans;
  out.classes = params.classes;
  out.validate();
  return out;
}

}  // namespace hmm
}  // namespace lulcc
