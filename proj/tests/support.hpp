#pragma once

// Fixtures, random generators and brute-force oracles shared by the unit
// tests and the acceptance runner.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unistd.h>

#include "lulcc/factors.hpp"
#include "lulcc/grid.hpp"
#include "lulcc/hmm.hpp"
#include "lulcc/lcm.hpp"
#include "lulcc/markov.hpp"
#include "lulcc/rng.hpp"
#include <set>

namespace lulcc::testing {

inline GridHeader header(int nrows, int ncols, double cellsize = 30.0) {
  GridHeader h;
  h.nrows = nrows;
  h.ncols = ncols;
  h.cellsize = cellsize;
  return h;
}

inline CategoricalGrid cat_grid(int nrows, int ncols, std::vector<int> cells) {
  return CategoricalGrid(header(nrows, ncols), std::move(cells));
}

inline ContinuousGrid cont_grid(int nrows, int ncols, std::vector<double> cells) {
  return ContinuousGrid(header(nrows, ncols), std::move(cells));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lulcc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Eigen::MatrixXd random_stochastic(Rng& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += m(i, j) = 0.05 + rng.uniform();
    m.row(i) /= s;
  }
  return m;
}

inline std::vector<int> first_classes(int n) {
  std::vector<int> c(n);
  for (int i = 0; i < n; ++i) c[i] = i + 1;
  return c;
}

inline GaussianHmmParams random_params(Rng& rng, int n, int d) {
  GaussianHmmParams p;
  p.classes = first_classes(n);
  p.pi = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) p.pi(i) = 0.1 + rng.uniform();
  p.pi /= p.pi.sum();
  p.trans.classes = p.classes;
  p.trans.probs = random_stochastic(rng, n);
  p.means = Eigen::MatrixXd(n, d);
  p.vars = Eigen::MatrixXd(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) {
      p.means(i, k) = 4.0 * rng.uniform() - 2.0;
      p.vars(i, k) = 0.2 + 2.0 * rng.uniform();
    }
  return p;
}

inline ObservationSequence random_obs(Rng& rng, int t, int d) {
  ObservationSequence o;
  o.observations = Eigen::MatrixXd(t, d);
  for (int i = 0; i < t; ++i)
    for (int k = 0; k < d; ++k) o.observations(i, k) = 3.0 * rng.normal();
  return o;
}

// log P(obs) by summing over all N^T state paths.
inline double brute_force_log_likelihood(const GaussianHmmParams& p, const ObservationSequence& obs) {
  const auto n = static_cast<std::size_t>(p.num_states());
  const auto t = static_cast<std::size_t>(obs.length());
  std::vector<std::vector<double>> logb(t, std::vector<double>(n));
  for (std::size_t s = 0; s < t; ++s) {
    std::vector<double> x(static_cast<std::size_t>(obs.dim()));
    for (Eigen::Index k = 0; k < obs.dim(); ++k) x[k] = obs.observations(static_cast<Eigen::Index>(s), k);
    for (std::size_t i = 0; i < n; ++i) logb[s][i] = hmm::log_emission_density(p, i, x);
  }
  std::vector<double> path_logs;
  std::vector<std::size_t> path(t, 0);
  while (true) {
    double lp = std::log(p.pi(static_cast<Eigen::Index>(path[0]))) + logb[0][path[0]];
    for (std::size_t s = 1; s < t; ++s)
      lp += std::log(p.trans.probs(static_cast<Eigen::Index>(path[s - 1]), static_cast<Eigen::Index>(path[s]))) +
            logb[s][path[s]];
    path_logs.push_back(lp);
    std::size_t pos = 0;
    while (pos < t && ++path[pos] == n) path[pos++] = 0;
    if (pos == t) break;
  }
  double mx = -INFINITY;
  for (double v : path_logs) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : path_logs) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

// Connected components by breadth-first flood fill, 8-connectivity.
inline std::vector<int> flood_fill_labels(const std::vector<std::uint8_t>& fg, int nrows, int ncols, int& count) {
  std::vector<int> labels(fg.size(), 0);
  count = 0;
  for (int start = 0; start < nrows * ncols; ++start) {
    if (!fg[start] || labels[start]) continue;
    ++count;
    std::queue<int> q;
    q.push(start);
    labels[start] = count;
    while (!q.empty()) {
      const int c = q.front();
      q.pop();
      const int r = c / ncols, k = c % ncols;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = k + dc;
          if (rr < 0 || cc < 0 || rr >= nrows || cc >= ncols) continue;
          const int j = rr * ncols + cc;
          if (fg[j] && !labels[j]) {
            labels[j] = count;
            q.push(j);
          }
        }
    }
  }
  return labels;
}

// Two labelings describe the same partition.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == 0) != (b[i] == 0)) return false;
    if (a[i] == 0) continue;
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

// Random allocation problem. Potential maps of one from-class share their
// nodata cells (a driver gap hits every sub-model alike). Quotas within a class
// never exceed the class count; when they exceed the eligible count only one
// transition of that class carries a quota, so min(quota, eligible) is
// attainable for every transition at once.
struct AllocationInstance {
  CategoricalGrid t0;
  Mask mask;
  std::vector<PotentialMap> potentials;
  QuantumTable quantum;
  std::map<Transition, long long> eligible;
};

inline AllocationInstance random_allocation_instance(Rng& rng) {
  AllocationInstance inst;
  const int nr = 2 + static_cast<int>(rng.below(12)), nc = 2 + static_cast<int>(rng.below(12));
  const std::size_t n = static_cast<std::size_t>(nr * nc);
  std::vector<int> cells(n), mask_cells(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    cells[i] = 1 + static_cast<int>(rng.below(3));
    if (rng.uniform() < 0.05) cells[i] = -9999;
    if (rng.uniform() < 0.1) mask_cells[i] = 1;
  }
  inst.t0 = CategoricalGrid(header(nr, nc), cells);
  if (rng.uniform() < 0.7) inst.mask = CategoricalGrid(header(nr, nc), mask_cells);

  const std::set<Transition> allowed = default_allowed_transitions();
  for (int from : {kVegetation, kSoil}) {
    std::vector<bool> gap(n);
    for (std::size_t i = 0; i < n; ++i) gap[i] = rng.uniform() < 0.3;
    long long count = 0, eligible = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (cells[i] != from || masked(inst.mask, i)) continue;
      ++count;
      if (!gap[i]) ++eligible;
    }
    std::vector<Transition> mine;
    for (const auto& t : allowed)
      if (t.first == from) mine.push_back(t);
    for (const auto& t : mine) {
      PotentialMap pm{t.first, t.second, ContinuousGrid(header(nr, nc), -9999.0)};
      for (std::size_t i = 0; i < n; ++i)
        if (cells[i] == from && !gap[i]) {
          // Coarse values force ties between cells and between transitions.
          pm.grid[i] = rng.uniform() < 0.3 ? std::floor(rng.uniform() * 4.0) / 4.0 : rng.uniform();
        }
      inst.potentials.push_back(std::move(pm));
      inst.eligible[t] = eligible;
    }
    // Quotas: either split within the eligible pool, or overflow a single transition.
    if (rng.uniform() < 0.25 && count > 0) {
      const auto pick = mine[rng.below(mine.size())];
      for (const auto& t : mine) inst.quantum.entries[t] = 0;
      inst.quantum.entries[pick] = static_cast<long long>(rng.below(static_cast<std::size_t>(count) + 1));
    } else {
      long long left = eligible;
      for (const auto& t : mine) {
        const long long q = static_cast<long long>(rng.below(static_cast<std::size_t>(left) + 1));
        inst.quantum.entries[t] = q;
        left -= q;
      }
    }
    long long moved = 0;
    for (const auto& t : mine) moved += inst.quantum.entries[t];
    inst.quantum.class_counts[from] = count;
    inst.quantum.persistence[from] = count - moved;
  }
  return inst;
}

}  // namespace lulcc::testing
