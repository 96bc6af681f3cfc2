#include "lulcc/markov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace lulcc {

namespace {
constexpr const char* kModule = "markov";
}

std::size_t TransitionMatrix::index_of(int code) const {
  auto it = std::find(classes.begin(), classes.end(), code);
  if (it == classes.end()) throw Error(kModule, "unknown class code " + std::to_string(code));
  return static_cast<std::size_t>(it - classes.begin());
}

void TransitionMatrix::validate(double tol) const {
  const auto n = static_cast<Eigen::Index>(classes.size());
  if (n == 0) throw Error(kModule, "transition matrix has no classes");
  if (probs.rows() != n || probs.cols() != n)
    throw Error(kModule, "transition matrix shape does not match class list");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = probs(i, j);
      if (!(p >= 0.0 && p <= 1.0)) throw Error(kModule, "transition entry outside [0, 1]");
    }
    if (std::fabs(probs.row(i).sum() - 1.0) > tol)
      throw Error(kModule, "row " + std::to_string(classes[static_cast<std::size_t>(i)]) +
                               " does not sum to 1");
  }
}

nlohmann::json to_json(const TransitionMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.probs.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.probs.cols(); ++j) row.push_back(m.probs(i, j));
    rows.push_back(std::move(row));
  }
  return {{"classes", m.classes}, {"probs", std::move(rows)}};
}

TransitionMatrix transition_matrix_from_json(const nlohmann::json& j) {
  TransitionMatrix m;
  try {
    m.classes = j.at("classes").get<std::vector<int>>();
    const auto& rows = j.at("probs");
    const auto n = static_cast<Eigen::Index>(m.classes.size());
    if (rows.size() != m.classes.size()) throw Error(kModule, "probs row count mismatch");
    m.probs.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (row.size() != m.classes.size()) throw Error(kModule, "probs column count mismatch");
      for (Eigen::Index k = 0; k < n; ++k) m.probs(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, std::string("malformed transition matrix JSON: ") + e.what());
  }
  m.validate();
  return m;
}

TransitionMatrix load_transition_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(kModule, "unreadable file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(kModule, std::string("malformed JSON: ") + e.what());
  }
  return transition_matrix_from_json(j);
}

void save_transition_matrix(const TransitionMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(kModule, "unwritable path: " + path.string());
  out << to_json(m).dump(2) << '\n';
}

namespace markov {

Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> cross_tabulate(
    const CategoricalGrid& t0, const CategoricalGrid& t1, std::span<const int> classes,
    const Mask& mask) {
  if (classes.empty()) throw Error(kModule, "class list is empty");
  validate_alignment(t0, t1);
  if (mask) validate_alignment(t0, *mask);

  // Codes are small non-negative integers; a lookup table beats a search.
  const int max_code = *std::max_element(classes.begin(), classes.end());
  std::vector<int> slot(static_cast<std::size_t>(std::max(max_code, 0)) + 1, -1);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] < 0) throw Error(kModule, "class codes must be non-negative");
    slot[static_cast<std::size_t>(classes[k])] = static_cast<int>(k);
  }
  auto lookup = [&](int code) {
    return (code >= 0 && static_cast<std::size_t>(code) < slot.size()) ? slot[static_cast<std::size_t>(code)] : -1;
  };

  const auto n = static_cast<Eigen::Index>(classes.size());
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  for (std::size_t i = 0; i < t0.size(); ++i) {
    if (t0.is_nodata(i) || t1.is_nodata(i) || masked(mask, i)) continue;
    const int a = lookup(t0[i]);
    const int b = lookup(t1[i]);
    if (a < 0 || b < 0)
      throw Error(kModule, "cell class " + std::to_string(a < 0 ? t0[i] : t1[i]) +
                               " outside the class list and not masked");
    ++counts(a, b);
  }
  return counts;
}

TransitionMatrix estimate_transition_matrix(const CategoricalGrid& t0, const CategoricalGrid& t1,
                                            std::span<const int> classes, const Mask& mask) {
  const auto counts = cross_tabulate(t0, t1, classes, mask);
  TransitionMatrix m;
  m.classes.assign(classes.begin(), classes.end());
  const auto n = counts.rows();
  m.probs = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const long long row_total = counts.row(i).sum();
    if (row_total == 0) {
      m.probs(i, i) = 1.0;
      continue;
    }
    for (Eigen::Index j = 0; j < n; ++j)
      m.probs(i, j) = static_cast<double>(counts(i, j)) / static_cast<double>(row_total);
  }
  return m;
}

TransitionMatrix extrapolate_matrix_power(const TransitionMatrix& a, int k) {
  if (k < 0) throw Error(kModule, "power must be non-negative");
  a.validate();
  TransitionMatrix out = a;
  const auto n = a.probs.rows();
  out.probs = Eigen::MatrixXd::Identity(n, n);
  for (int step = 0; step < k; ++step) out.probs = out.probs * a.probs;
  return out;
}

TransitionMatrix extrapolate_elementwise_power(const TransitionMatrix& a, double exponent) {
  if (!(exponent > 0.0) || !std::isfinite(exponent))
    throw Error(kModule, "exponent must be positive");
  a.validate();
  if (exponent == 1.0) return a;
  TransitionMatrix out = a;
  for (Eigen::Index i = 0; i < a.probs.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.probs.cols(); ++j) out.probs(i, j) = std::pow(a.probs(i, j), exponent);
    const double total = out.probs.row(i).sum();
    out.probs.row(i) /= total;
  }
  return out;
}

TransitionMatrix extrapolate_span(const TransitionMatrix& a, int base_span, int target_span) {
  if (base_span < 1 || target_span < 0) throw Error(kModule, "invalid extrapolation spans");
  if (target_span % base_span == 0) return extrapolate_matrix_power(a, target_span / base_span);
  return extrapolate_elementwise_power(a, static_cast<double>(target_span) / base_span);
}

}  // namespace markov
}  // namespace lulcc
