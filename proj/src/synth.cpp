#include "lulcc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "lulcc/rng.hpp"
#include "lulcc/suitability.hpp"

namespace lulcc {

namespace {

constexpr const char* kModule = "synth";

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows.at(static_cast<std::size_t>(i)).size()) != c)
      throw Error(kModule, "ragged matrix in scenario config");
    for (Eigen::Index k = 0; k < c; ++k)
      m(i, k) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

std::vector<double> zscores(const ContinuousGrid& g) {
  std::vector<double> out(g.cells().begin(), g.cells().end());
  const double n = static_cast<double>(out.size());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : out) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return out;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (nrows < 2 || ncols < 2) throw Error(kModule, "grid must be at least 2x2");
  if (!(cellsize > 0.0)) throw Error(kModule, "cellsize must be positive");
  if (classes.empty()) throw Error(kModule, "no classes");
  if (std::find(classes.begin(), classes.end(), kWater) != classes.end())
    throw Error(kModule, "water code is reserved for the mask");
  if (initial_mix.size() != classes.size()) throw Error(kModule, "initial_mix length mismatch");
  if (std::any_of(initial_mix.begin(), initial_mix.end(), [](double p) { return p < 0.0; }) ||
      std::fabs(std::accumulate(initial_mix.begin(), initial_mix.end(), 0.0) - 1.0) > 1e-9)
    throw Error(kModule, "initial_mix is not a probability vector");
  if (years < 2) throw Error(kModule, "years must be >= 2");
  if (epochs.empty()) throw Error(kModule, "no epochs");
  int steps = 0;
  for (const auto& e : epochs) {
    if (e.transitions < 1) throw Error(kModule, "epoch needs at least one transition");
    e.trans.validate();
    if (e.trans.classes != classes) throw Error(kModule, "epoch classes differ from scenario classes");
    steps += e.transitions;
  }
  if (steps != years - 1) throw Error(kModule, "epoch transitions must sum to years - 1");
  const auto n = static_cast<Eigen::Index>(classes.size());
  if (factor_names.empty()) throw Error(kModule, "no factor names");
  const auto d = static_cast<Eigen::Index>(factor_names.size());
  if (emission_means.rows() != n || emission_means.cols() != d || emission_vars.rows() != n ||
      emission_vars.cols() != d)
    throw Error(kModule, "emission parameter shape mismatch");
  if ((emission_vars.array() <= 0.0).any()) throw Error(kModule, "emission variances must be positive");
  if (repeat_factor < 1) throw Error(kModule, "repeat_factor must be >= 1");
  for (int r : road_rows)
    if (r < 0 || r >= nrows) throw Error(kModule, "road row out of range");
  for (int c : road_cols)
    if (c < 0 || c >= ncols) throw Error(kModule, "road column out of range");
  if (road_rows.empty() && road_cols.empty()) throw Error(kModule, "scenario needs at least one road");
  if (!(placement_noise >= 0.0)) throw Error(kModule, "placement_noise must be non-negative");
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  try {
    c.nrows = j.value("nrows", c.nrows);
    c.ncols = j.value("ncols", c.ncols);
    c.cellsize = j.value("cellsize", c.cellsize);
    c.classes = j.value("classes", c.classes);
    c.initial_mix = j.value("initial_mix", c.initial_mix);
    c.start_year = j.value("start_year", c.start_year);
    c.years = j.value("years", c.years);
    for (const auto& e : j.at("epochs")) {
      Epoch epoch;
      epoch.transitions = e.at("transitions").get<int>();
      epoch.trans.classes = c.classes;
      epoch.trans.probs = matrix_from_json(e.at("trans"));
      c.epochs.push_back(std::move(epoch));
    }
    c.factor_names = j.at("factor_names").get<std::vector<std::string>>();
    c.emission_means = matrix_from_json(j.at("emission_means"));
    c.emission_vars = matrix_from_json(j.at("emission_vars"));
    c.repeat_factor = j.value("repeat_factor", c.repeat_factor);
    c.slope_amplitude = j.value("slope_amplitude", c.slope_amplitude);
    c.hill_amplitude = j.value("hill_amplitude", c.hill_amplitude);
    c.road_rows = j.value("road_rows", c.road_rows);
    c.road_cols = j.value("road_cols", c.road_cols);
    if (j.contains("water"))
      for (const auto& w : j.at("water")) {
        auto v = w.get<std::vector<int>>();
        if (v.size() != 4) throw Error(kModule, "water rectangle needs [row0, col0, row1, col1]");
        c.water.push_back({v[0], v[1], v[2], v[3]});
      }
    if (j.contains("placement_weights")) {
      c.placement_weights.clear();
      for (auto& [code, w] : j.at("placement_weights").items()) {
        auto v = w.get<std::vector<double>>();
        if (v.size() != 2) throw Error(kModule, "placement weight needs [suitability, proximity]");
        c.placement_weights[std::stoi(code)] = {v[0], v[1]};
      }
    }
    c.placement_noise = j.value("placement_noise", c.placement_noise);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(kModule, "unreadable file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(kModule, std::string("invalid config: ") + e.what());
  }
  return scenario_config_from_json(j);
}

namespace synth {

HmmSample sample_hmm_sequence(const GaussianHmmParams& params, std::size_t length, std::uint64_t seed) {
  params.validate();
  if (length < 1) throw Error(kModule, "sequence length must be >= 1");
  Rng rng = Rng::stream(seed, "synth.hmm");
  const Eigen::Index D = params.dim();
  HmmSample out;
  out.states.resize(length);
  out.observations.repeat_factor = 1;
  out.observations.observations.resize(static_cast<Eigen::Index>(length), D);
  std::vector<double> row(params.num_states());
  for (std::size_t t = 0; t < length; ++t) {
    if (t == 0) {
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = params.pi(static_cast<Eigen::Index>(k));
    } else {
      const auto prev = static_cast<Eigen::Index>(out.states[t - 1]);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = params.trans.probs(prev, static_cast<Eigen::Index>(k));
    }
    const std::size_t s = rng.categorical(row);
    out.states[t] = s;
    for (Eigen::Index d = 0; d < D; ++d)
      out.observations.observations(static_cast<Eigen::Index>(t), d) =
          params.means(static_cast<Eigen::Index>(s), d) +
          std::sqrt(params.vars(static_cast<Eigen::Index>(s), d)) * rng.normal();
  }
  return out;
}

ScenarioBundle generate_scenario(const ScenarioConfig& config) {
  config.validate();
  const int nr = config.nrows, nc = config.ncols;
  GridHeader header;
  header.nrows = nr;
  header.ncols = nc;
  header.cellsize = config.cellsize;
  header.nodata_value = -9999;
  const std::size_t ncell = header.size();

  ScenarioBundle b;

  // Water mask.
  b.water_mask = CategoricalGrid(header, 0);
  for (const auto& w : config.water)
    for (int r = std::max(0, w.row0); r <= std::min(nr - 1, w.row1); ++r)
      for (int c = std::max(0, w.col0); c <= std::min(nc - 1, w.col1); ++c) b.water_mask.at(r, c) = 1;

  // Terrain: a ramp steepening towards the south plus seeded hills.
  {
    Rng rng = Rng::stream(config.seed, "synth.terrain");
    const double phase_r = 2.0 * std::numbers::pi * rng.uniform();
    const double phase_c = 2.0 * std::numbers::pi * rng.uniform();
    std::vector<double> z(ncell);
    for (int r = 0; r < nr; ++r)
      for (int c = 0; c < nc; ++c) {
        const double y = static_cast<double>(r) / (nr - 1);
        const double x = static_cast<double>(c) / (nc - 1);
        z[header.ncols * static_cast<std::size_t>(r) + c] =
            config.slope_amplitude * y * y * y +
            config.hill_amplitude * y * std::sin(6.0 * x + phase_c) * std::cos(5.0 * y + phase_r);
      }
    b.dem = ContinuousGrid(header, std::move(z));
  }
  b.slope = suitability::slope_from_dem(b.dem);
  b.suitability = suitability::slope_suitability(b.slope);

  b.roads = CategoricalGrid(header, 0);
  for (int r : config.road_rows)
    for (int c = 0; c < nc; ++c) b.roads.at(r, c) = 1;
  for (int c : config.road_cols)
    for (int r = 0; r < nr; ++r) b.roads.at(r, c) = 1;
  b.proximity = suitability::proximity_transform(b.roads, 1);

  const std::vector<double> suit_z = zscores(b.suitability);
  const std::vector<double> prox_z = zscores(b.proximity);

  Legend legend = canonical_legend();
  for (int code : config.classes)
    if (!legend.count(code)) legend[code] = "class_" + std::to_string(code);

  // Year 0.
  {
    Rng rng = Rng::stream(config.seed, "synth.initial");
    CategoricalGrid g(header, kWater, legend);
    for (std::size_t i = 0; i < ncell; ++i) {
      if (b.water_mask[i]) continue;
      g[i] = config.classes[rng.categorical(config.initial_mix)];
    }
    b.landcover.push_back(std::move(g));
  }

  // Yearly evolution.
  std::vector<std::size_t> epoch_of_step;
  for (std::size_t e = 0; e < config.epochs.size(); ++e)
    for (int k = 0; k < config.epochs[e].transitions; ++k) epoch_of_step.push_back(e);

  const std::size_t nclass = config.classes.size();
  for (int step = 0; step + 1 < config.years; ++step) {
    const auto& A = config.epochs[epoch_of_step[static_cast<std::size_t>(step)]].trans;
    const CategoricalGrid& prev = b.landcover.back();
    CategoricalGrid next = prev;
    Rng draw = Rng::stream(config.seed, "synth.draw." + std::to_string(step));
    Rng place = Rng::stream(config.seed, "synth.place." + std::to_string(step));

    for (std::size_t ci = 0; ci < nclass; ++ci) {
      const int from = config.classes[ci];
      std::vector<std::size_t> cells;
      for (std::size_t i = 0; i < ncell; ++i)
        if (!b.water_mask[i] && prev[i] == from) cells.push_back(i);
      if (cells.empty()) continue;

      std::vector<double> row(nclass);
      for (std::size_t k = 0; k < nclass; ++k)
        row[k] = A.probs(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(k));
      std::vector<std::size_t> counts(nclass, 0);
      for (std::size_t n = 0; n < cells.size(); ++n) ++counts[draw.categorical(row)];

      std::vector<bool> taken(cells.size(), false);
      std::vector<double> score(cells.size());
      std::vector<std::size_t> order(cells.size());
      for (std::size_t cj = 0; cj < nclass; ++cj) {
        if (cj == ci || counts[cj] == 0) continue;
        const int to = config.classes[cj];
        const auto wit = config.placement_weights.find(to);
        const auto w = wit == config.placement_weights.end() ? std::pair{0.0, 0.0} : wit->second;
        for (std::size_t n = 0; n < cells.size(); ++n)
          score[n] = w.first * suit_z[cells[n]] + w.second * prox_z[cells[n]] +
                     config.placement_noise * place.normal();
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return score[x] > score[y]; });
        std::size_t moved = 0;
        for (std::size_t n : order) {
          if (moved == counts[cj]) break;
          if (taken[n]) continue;
          taken[n] = true;
          next[cells[n]] = to;
          ++moved;
        }
      }
    }
    b.landcover.push_back(std::move(next));
  }

  // Factor table from class-frequency-weighted emission means plus noise.
  {
    Rng rng = Rng::stream(config.seed, "synth.factors");
    const auto D = static_cast<Eigen::Index>(config.factor_names.size());
    b.factors.factor_names = config.factor_names;
    b.factors.values.resize(config.years, D);
    const CategoricalGrid mask = b.water_mask;
    for (int y = 0; y < config.years; ++y) {
      b.years.push_back(config.start_year + y);
      const auto freq = class_frequencies(b.landcover[static_cast<std::size_t>(y)], config.classes, mask);
      for (Eigen::Index d = 0; d < D; ++d) {
        double mean = 0.0, var = 0.0;
        for (std::size_t k = 0; k < nclass; ++k) {
          mean += freq[k] * config.emission_means(static_cast<Eigen::Index>(k), d);
          var += freq[k] * config.emission_vars(static_cast<Eigen::Index>(k), d);
        }
        b.factors.values(y, d) = mean + std::sqrt(var) * rng.normal();
      }
    }
    b.factors.years = b.years;
    b.factors = factors::normalize_min_max(b.factors);
  }

  for (const auto& e : config.epochs) {
    GaussianHmmParams p;
    p.classes = config.classes;
    p.pi = Eigen::Map<const Eigen::VectorXd>(config.initial_mix.data(),
                                             static_cast<Eigen::Index>(config.initial_mix.size()));
    p.trans = e.trans;
    p.means = config.emission_means;
    p.vars = config.emission_vars.array().max(kVarianceFloor).matrix();
    b.true_params.push_back(std::move(p));
  }
  return b;
}

void write_bundle(const ScenarioBundle& bundle, const ScenarioConfig& config,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t y = 0; y < bundle.years.size(); ++y)
    write_ascii_grid(bundle.landcover[y], dir / ("lc_" + std::to_string(bundle.years[y]) + ".asc"));
  write_ascii_grid(bundle.dem, dir / "dem.asc");
  write_ascii_grid(bundle.slope, dir / "slope.asc");
  write_ascii_grid(bundle.suitability, dir / "slope_suitability.asc");
  write_ascii_grid(bundle.roads, dir / "roads.asc");
  write_ascii_grid(bundle.proximity, dir / "road_proximity.asc");
  write_ascii_grid(bundle.water_mask, dir / "water_mask.asc");
  factors::write_factor_table(bundle.factors, dir / "factors.csv");

  nlohmann::json truth;
  truth["seed"] = config.seed;
  truth["years"] = bundle.years;
  truth["epochs"] = nlohmann::json::array();
  for (std::size_t e = 0; e < config.epochs.size(); ++e)
    truth["epochs"].push_back({{"transitions", config.epochs[e].transitions},
                               {"params", to_json(bundle.true_params[e])}});
  std::ofstream out(dir / "truth.json", std::ios::trunc);
  if (!out) throw Error(kModule, "unwritable path: " + (dir / "truth.json").string());
  out << truth.dump(2) << '\n';
}

}  // namespace synth
}  // namespace lulcc
