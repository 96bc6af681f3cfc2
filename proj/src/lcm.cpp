#include "lulcc/lcm.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace lulcc {

namespace {

constexpr const char* kModule = "lcm";

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& z, const Eigen::VectorXd& theta) {
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(z.rows(), theta(0));
  if (z.cols() > 0) eta += z * theta.tail(z.cols());
  return eta;
}

}  // namespace

std::set<Transition> default_allowed_transitions() {
  return {{kVegetation, kSoil}, {kVegetation, kImpervious}, {kSoil, kVegetation}, {kSoil, kImpervious}};
}

double LogisticModel::predict(std::span<const double> features) const {
  if (static_cast<Eigen::Index>(features.size()) != coefficients.size())
    throw Error(kModule, "feature count mismatch");
  double eta = intercept;
  for (Eigen::Index k = 0; k < coefficients.size(); ++k)
    eta += coefficients(k) * (features[static_cast<std::size_t>(k)] - feature_mean(k)) / feature_stddev(k);
  return sigmoid(eta);
}

void LogisticModel::validate() const {
  const auto p = static_cast<Eigen::Index>(feature_names.size());
  if (coefficients.size() != p || feature_mean.size() != p || feature_stddev.size() != p)
    throw Error(kModule, "logistic model shapes are inconsistent");
  if (!std::isfinite(intercept) || !coefficients.allFinite() || !feature_mean.allFinite() ||
      !feature_stddev.allFinite())
    throw Error(kModule, "logistic model holds a non-finite value");
  if ((feature_stddev.array() <= 0.0).any()) throw Error(kModule, "standardization stddev must be positive");
}

long long QuantumTable::at(int from, int to) const {
  auto it = entries.find({from, to});
  return it == entries.end() ? 0 : it->second;
}

nlohmann::json to_json(const TransitionSubModel& m) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"from_class", m.from_class},
          {"to_class", m.to_class},
          {"feature_names", m.model.feature_names},
          {"intercept", m.model.intercept},
          {"coefficients", vec(m.model.coefficients)},
          {"standardization", {{"mean", vec(m.model.feature_mean)}, {"stddev", vec(m.model.feature_stddev)}}}};
}

TransitionSubModel submodel_from_json(const nlohmann::json& j) {
  TransitionSubModel m;
  auto vec = [](const std::vector<double>& v) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  try {
    m.from_class = j.at("from_class").get<int>();
    m.to_class = j.at("to_class").get<int>();
    m.model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.model.intercept = j.at("intercept").get<double>();
    m.model.coefficients = vec(j.at("coefficients").get<std::vector<double>>());
    m.model.feature_mean = vec(j.at("standardization").at("mean").get<std::vector<double>>());
    m.model.feature_stddev = vec(j.at("standardization").at("stddev").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, std::string("malformed sub-model JSON: ") + e.what());
  }
  if (m.from_class == m.to_class) throw Error(kModule, "sub-model from_class equals to_class");
  m.model.validate();
  return m;
}

nlohmann::json to_json(const QuantumTable& q) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [t, n] : q.entries) entries.push_back({{"from", t.first}, {"to", t.second}, {"cells", n}});
  nlohmann::json persistence = nlohmann::json::object();
  for (const auto& [c, n] : q.persistence) persistence[std::to_string(c)] = n;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [c, n] : q.class_counts) counts[std::to_string(c)] = n;
  return {{"entries", entries}, {"persistence", persistence}, {"class_counts", counts}};
}

namespace lcm {

TransitionSamples build_transition_samples(const CategoricalGrid& t0, const CategoricalGrid& t1,
                                           std::span<const Driver> drivers, int from_class,
                                           int to_class, const Mask& mask) {
  if (drivers.empty()) throw Error(kModule, "no driver grids");
  validate_alignment(t0, t1);
  for (const auto& d : drivers) validate_alignment(t0, d.grid);
  if (mask) validate_alignment(t0, *mask);

  TransitionSamples s;
  for (const auto& d : drivers) s.feature_names.push_back(d.name);
  std::vector<double> values;
  std::vector<double> labels;
  for (std::size_t i = 0; i < t0.size(); ++i) {
    if (t0.is_nodata(i) || t0[i] != from_class || masked(mask, i) || t1.is_nodata(i)) continue;
    bool ok = true;
    for (const auto& d : drivers) ok = ok && !d.grid.is_nodata(i);
    if (!ok) continue;
    for (const auto& d : drivers) values.push_back(d.grid[i]);
    labels.push_back(t1[i] == to_class ? 1.0 : 0.0);
    s.cells.push_back(i);
  }
  if (s.cells.empty()) throw Error(kModule, "zero eligible cells");
  const auto n = static_cast<Eigen::Index>(s.cells.size());
  const auto p = static_cast<Eigen::Index>(drivers.size());
  s.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, p);
  s.labels = Eigen::Map<const Eigen::VectorXd>(labels.data(), n);
  const double positives = s.labels.sum();
  if (positives == 0.0) s.balance = LabelBalance::no_positive;
  else if (positives == static_cast<double>(n)) s.balance = LabelBalance::no_negative;
  return s;
}

double logistic_objective(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& theta, double l2) {
  const Eigen::VectorXd eta = linear_predictor(z, theta);
  double f = 0.0;
  for (Eigen::Index t = 0; t < eta.size(); ++t) f += softplus(eta(t)) - y(t) * eta(t);
  if (z.cols() > 0) f += 0.5 * l2 * theta.tail(z.cols()).squaredNorm();
  return f;
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& theta, double l2) {
  const Eigen::VectorXd eta = linear_predictor(z, theta);
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index t = 0; t < eta.size(); ++t) resid(t) = sigmoid(eta(t)) - y(t);
  Eigen::VectorXd g(theta.size());
  g(0) = resid.sum();
  if (z.cols() > 0) g.tail(z.cols()) = z.transpose() * resid + l2 * theta.tail(z.cols());
  return g;
}

LogisticModel fit_logistic(const TransitionSamples& samples, double l2) {
  const Eigen::MatrixXd& x = samples.features;
  const Eigen::VectorXd& y = samples.labels;
  if (!(l2 >= 0.0)) throw Error(kModule, "l2 must be non-negative");
  if (x.rows() < 2) throw Error(kModule, "logistic fit needs at least 2 samples");
  if (y.size() != x.rows()) throw Error(kModule, "label count does not match sample count");
  if (static_cast<Eigen::Index>(samples.feature_names.size()) != x.cols())
    throw Error(kModule, "feature name count does not match feature columns");
  if (!x.allFinite()) throw Error(kModule, "non-finite feature value");

  const Eigen::Index n = x.rows(), p = x.cols();
  LogisticModel model;
  model.feature_names = samples.feature_names;
  model.feature_mean = x.colwise().mean().transpose();
  model.feature_stddev.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double sd = std::sqrt((x.col(k).array() - model.feature_mean(k)).square().mean());
    if (!(sd > 1e-12 * std::max(1.0, std::fabs(model.feature_mean(k)))))
      throw Error(kModule, "constant feature '" + samples.feature_names[static_cast<std::size_t>(k)] + "'");
    model.feature_stddev(k) = sd;
  }
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index k = 0; k < p; ++k)
    z.col(k) = (x.col(k).array() - model.feature_mean(k)) / model.feature_stddev(k);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
  const double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
  theta(0) = std::log(ybar / (1.0 - ybar));

  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = z;
  double f = logistic_objective(z, y, theta, l2);
  for (int iter = 0; iter < 500; ++iter) {
    const Eigen::VectorXd g = logistic_gradient(z, y, theta, l2);
    if (g.cwiseAbs().maxCoeff() < 1e-8) break;
    const Eigen::VectorXd eta = linear_predictor(z, theta);
    Eigen::VectorXd w(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      const double s = sigmoid(eta(t));
      w(t) = s * (1.0 - s);
    }
    Eigen::MatrixXd h = design.transpose() * w.asDiagonal() * design;
    for (Eigen::Index k = 1; k <= p; ++k) h(k, k) += l2;
    h.diagonal().array() += 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
    const Eigen::VectorXd step = h.ldlt().solve(g);
    if (!step.allFinite()) break;

    double t = 1.0;
    const double slope = g.dot(step);
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
      const Eigen::VectorXd cand = theta - t * step;
      const double fc = logistic_objective(z, y, cand, l2);
      if (fc <= f - 1e-4 * t * slope || fc <= f) {
        theta = cand;
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  model.intercept = theta(0);
  model.coefficients = theta.tail(p);
  model.validate();
  return model;
}

PotentialMap potential_map(const TransitionSubModel& submodel, std::span<const Driver> drivers,
                           const CategoricalGrid& t0, const Mask& mask) {
  const auto& model = submodel.model;
  if (drivers.size() != model.feature_names.size()) throw Error(kModule, "feature count mismatch");
  for (std::size_t k = 0; k < drivers.size(); ++k)
    if (drivers[k].name != model.feature_names[k])
      throw Error(kModule, "driver '" + drivers[k].name + "' does not match feature '" +
                               model.feature_names[k] + "'");
  for (const auto& d : drivers) validate_alignment(t0, d.grid);
  if (mask) validate_alignment(t0, *mask);

  PotentialMap pm{submodel.from_class, submodel.to_class,
                  ContinuousGrid(t0.header(), t0.header().nodata_value)};
  std::vector<double> features(drivers.size());
  for (std::size_t i = 0; i < t0.size(); ++i) {
    if (t0.is_nodata(i) || t0[i] != submodel.from_class || masked(mask, i)) continue;
    bool ok = true;
    for (std::size_t k = 0; k < drivers.size(); ++k) {
      if (drivers[k].grid.is_nodata(i)) ok = false;
      features[k] = drivers[k].grid[i];
    }
    if (ok) pm.grid[i] = model.predict(features);
  }
  return pm;
}

QuantumTable compute_quantum(const TransitionMatrix& a, const CategoricalGrid& t0, const Mask& mask,
                             const std::set<Transition>& allowed) {
  a.validate();
  if (mask) validate_alignment(t0, *mask);
  for (const auto& [from, to] : allowed) {
    if (from == to) throw Error(kModule, "allowed transition with from == to");
    a.index_of(from);
    a.index_of(to);
  }

  QuantumTable q;
  for (int c : a.classes) q.class_counts[c] = 0;
  for (std::size_t i = 0; i < t0.size(); ++i) {
    if (t0.is_nodata(i) || masked(mask, i)) continue;
    auto it = q.class_counts.find(t0[i]);
    if (it == q.class_counts.end())
      throw Error(kModule, "transition matrix does not cover class " + std::to_string(t0[i]));
    ++it->second;
  }

  for (std::size_t ri = 0; ri < a.classes.size(); ++ri) {
    const int from = a.classes[ri];
    const long long n = q.class_counts[from];
    // Buckets: allowed targets in ascending code order, persistence last.
    std::vector<int> targets;
    std::vector<double> mass;
    double kept = 0.0;
    for (std::size_t cj = 0; cj < a.classes.size(); ++cj) {
      const int to = a.classes[cj];
      const double p = a.probs(static_cast<Eigen::Index>(ri), static_cast<Eigen::Index>(cj));
      if (to != from && allowed.count({from, to})) {
        targets.push_back(to);
        mass.push_back(p);
      } else {
        kept += p;
      }
    }
    mass.push_back(kept);

    std::vector<long long> alloc(mass.size());
    std::vector<double> remainder(mass.size());
    long long assigned = 0;
    for (std::size_t b = 0; b < mass.size(); ++b) {
      const double raw = mass[b] * static_cast<double>(n);
      alloc[b] = static_cast<long long>(std::floor(raw));
      remainder[b] = raw - std::floor(raw);
      assigned += alloc[b];
    }
    std::vector<std::size_t> order(mass.size());
    for (std::size_t b = 0; b < order.size(); ++b) order[b] = b;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return remainder[x] > remainder[y]; });
    for (std::size_t k = 0; assigned < n; k = (k + 1) % order.size()) {
      ++alloc[order[k]];
      ++assigned;
    }
    for (std::size_t b = 0; b < targets.size(); ++b) q.entries[{from, targets[b]}] = alloc[b];
    q.persistence[from] = alloc.back();
  }
  return q;
}

AllocationResult allocate_changes(const CategoricalGrid& t0, std::span<const PotentialMap> potentials,
                                  const QuantumTable& quantum, const Mask& mask) {
  if (mask) validate_alignment(t0, *mask);
  for (const auto& pm : potentials) validate_alignment(t0, pm.grid);

  struct Candidate {
    double potential;
    int from;
    int to;
    std::size_t cell;
  };
  std::vector<Candidate> candidates;
  std::map<Transition, long long> remaining;
  std::map<Transition, long long> eligible;
  for (const auto& [t, quota] : quantum.entries) {
    if (quota <= 0) continue;
    auto pm = std::find_if(potentials.begin(), potentials.end(), [&](const PotentialMap& m) {
      return m.from_class == t.first && m.to_class == t.second;
    });
    if (pm == potentials.end())
      throw Error(kModule, "no potential map for transition " + std::to_string(t.first) + "->" +
                               std::to_string(t.second));
    remaining[t] = quota;
    long long count = 0;
    for (std::size_t i = 0; i < t0.size(); ++i) {
      if (t0.is_nodata(i) || t0[i] != t.first || masked(mask, i) || pm->grid.is_nodata(i)) continue;
      candidates.push_back({pm->grid[i], t.first, t.second, i});
      ++count;
    }
    eligible[t] = count;
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.potential != y.potential) return x.potential > y.potential;
    return std::tie(x.from, x.to, x.cell) < std::tie(y.from, y.to, y.cell);
  });

  AllocationResult result{t0, {}, {}};
  std::vector<bool> claimed(t0.size(), false);
  for (const auto& c : candidates) {
    if (claimed[c.cell]) continue;
    long long& left = remaining[{c.from, c.to}];
    if (left == 0) continue;
    claimed[c.cell] = true;
    --left;
    result.grid[c.cell] = c.to;
    ++result.allocated[{c.from, c.to}];
  }
  for (const auto& [t, quota] : quantum.entries) {
    if (quota <= 0) continue;
    const long long got = result.allocated[t];
    if (got < quota) result.shortfalls.push_back({t, quota, eligible[t], got});
  }
  return result;
}

}  // namespace lcm
}  // namespace lulcc
