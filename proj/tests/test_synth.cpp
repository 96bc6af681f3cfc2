#include <fstream>

#include "doctest.h"
#include "lulcc/factors.hpp"
#include "lulcc/markov.hpp"
#include "lulcc/synth.hpp"
#include "support.hpp"

using namespace lulcc;
using namespace lulcc::testing;

namespace {

Eigen::MatrixXd rows3(std::initializer_list<double> v) {
  Eigen::MatrixXd m(3, 3);
  auto it = v.begin();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = *it++;
  return m;
}

ScenarioConfig small_config(std::vector<Eigen::MatrixXd> epochs, std::vector<int> steps, int size = 48) {
  ScenarioConfig c;
  c.nrows = c.ncols = size;
  c.years = 1;
  for (int s : steps) c.years += s;
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    Epoch ep;
    ep.transitions = steps[e];
    ep.trans.classes = c.classes;
    ep.trans.probs = epochs[e];
    c.epochs.push_back(ep);
  }
  c.factor_names = {"a", "b"};
  c.emission_means = Eigen::MatrixXd(3, 2);
  c.emission_means << 1, 2, 5, 6, 3, 1;
  c.emission_vars = Eigen::MatrixXd::Constant(3, 2, 0.1);
  c.road_rows = {size / 3};
  c.road_cols = {size / 2};
  c.water = {{0, 0, 3, 3}};
  c.seed = 99;
  return c;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("absorbing start stays put") {
  GaussianHmmParams p;
  p.classes = {1, 2, 3};
  p.pi = Eigen::Vector3d(1, 0, 0);
  p.trans.classes = p.classes;
  p.trans.probs = Eigen::MatrixXd::Identity(3, 3);
  p.means = Eigen::MatrixXd::Zero(3, 1);
  p.vars = Eigen::MatrixXd::Ones(3, 1);
  const auto s = synth::sample_hmm_sequence(p, 50, 4);
  for (auto st : s.states) CHECK(st == 0);
}

TEST_CASE("sequences are seed-determined") {
  Rng rng(101);
  const auto p = random_params(rng, 3, 2);
  const auto a = synth::sample_hmm_sequence(p, 200, 8);
  const auto b = synth::sample_hmm_sequence(p, 200, 8);
  CHECK(a.states == b.states);
  CHECK(a.observations.observations == b.observations.observations);
  CHECK(synth::sample_hmm_sequence(p, 200, 9).states != a.states);
}

TEST_CASE("empirical transitions approach the generator") {
  GaussianHmmParams p;
  p.classes = {1, 2, 3};
  p.pi = Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3);
  p.trans.classes = p.classes;
  p.trans.probs = rows3({0.8, 0.1, 0.1, 0.05, 0.8, 0.15, 0.1, 0.1, 0.8});
  p.means = Eigen::MatrixXd::Zero(3, 1);
  p.vars = Eigen::MatrixXd::Ones(3, 1);
  const auto s = synth::sample_hmm_sequence(p, 100000, 12);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t t = 1; t < s.states.size(); ++t)
    counts(static_cast<Eigen::Index>(s.states[t - 1]), static_cast<Eigen::Index>(s.states[t])) += 1;
  for (int i = 0; i < 3; ++i) counts.row(i) /= counts.row(i).sum();
  CHECK((counts - p.trans.probs).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("identity dynamics never change the grid") {
  const auto b = synth::generate_scenario(small_config({Eigen::MatrixXd::Identity(3, 3)}, {4}));
  REQUIRE(b.landcover.size() == 5);
  for (const auto& g : b.landcover) CHECK(g == b.landcover.front());
}

TEST_CASE("bundles are seed-determined and water is constant") {
  const auto cfg = small_config({rows3({0.9, 0.05, 0.05, 0.04, 0.9, 0.06, 0.06, 0.06, 0.88})}, {5});
  const auto a = synth::generate_scenario(cfg);
  const auto b = synth::generate_scenario(cfg);
  for (std::size_t y = 0; y < a.landcover.size(); ++y) CHECK(a.landcover[y] == b.landcover[y]);
  CHECK(a.factors.values == b.factors.values);
  CHECK(a.dem == b.dem);
  for (std::size_t i = 0; i < a.water_mask.size(); ++i) {
    if (a.water_mask[i] == 0) continue;
    for (const auto& g : a.landcover) CHECK(g[i] == kWater);
  }
  CHECK_NOTHROW(factors::normalize_min_max(a.factors));
  CHECK(a.factors.values.minCoeff() >= 0.0);
  CHECK(a.factors.values.maxCoeff() <= 1.0);
  validate_alignment(a.landcover.front(), a.slope);
  validate_alignment(a.landcover.front(), a.proximity);
}

TEST_CASE("non-stationary persistence shows up in the grids") {
  const auto cfg = small_config({rows3({0.90, 0.05, 0.05, 0.04, 0.90, 0.06, 0.06, 0.06, 0.88}),
                                 rows3({0.93, 0.04, 0.03, 0.02, 0.96, 0.02, 0.04, 0.05, 0.91})},
                                {4, 4}, 96);
  const auto b = synth::generate_scenario(cfg);
  const std::vector<int> vis{1, 2, 3};
  double first = 0.0, second = 0.0;
  for (int y = 0; y < 4; ++y)
    first += markov::estimate_transition_matrix(b.landcover[y], b.landcover[y + 1], vis, b.water_mask).at(2, 2);
  for (int y = 4; y < 8; ++y)
    second += markov::estimate_transition_matrix(b.landcover[y], b.landcover[y + 1], vis, b.water_mask).at(2, 2);
  CHECK(second > first);
}

TEST_CASE("yearly matrices track the generator at 128x128") {
  const auto truth = rows3({0.90, 0.05, 0.05, 0.04, 0.90, 0.06, 0.06, 0.06, 0.88});
  const auto b = synth::generate_scenario(small_config({truth}, {3}, 128));
  const std::vector<int> vis{1, 2, 3};
  for (int y = 0; y < 3; ++y) {
    const auto m = markov::estimate_transition_matrix(b.landcover[y], b.landcover[y + 1], vis, b.water_mask);
    CHECK((m.probs - truth).cwiseAbs().maxCoeff() < 0.03);
  }
}

TEST_CASE("invalid configs are rejected") {
  auto cfg = small_config({Eigen::MatrixXd::Identity(3, 3)}, {4});
  cfg.years = 3;
  CHECK_THROWS_AS(synth::generate_scenario(cfg), Error);
  cfg = small_config({rows3({0.5, 0.5, 0.5, 0, 1, 0, 0, 0, 1})}, {2});
  CHECK_THROWS_AS(synth::generate_scenario(cfg), Error);
  cfg = small_config({Eigen::MatrixXd::Identity(3, 3)}, {2});
  cfg.emission_vars(0, 0) = 0.0;
  CHECK_THROWS_AS(synth::generate_scenario(cfg), Error);
}

TEST_CASE("bundle files load back") {
  TempDir dir("synth");
  const auto cfg = small_config({rows3({0.9, 0.05, 0.05, 0.04, 0.9, 0.06, 0.06, 0.06, 0.88})}, {2}, 16);
  const auto b = synth::generate_scenario(cfg);
  synth::write_bundle(b, cfg, dir.path());
  CHECK(read_categorical_grid(dir / ("lc_" + std::to_string(b.years.back()) + ".asc")) == b.landcover.back());
  CHECK(read_categorical_grid(dir / "water_mask.asc") == b.water_mask);
  CHECK(factors::load_factor_table(dir / "factors.csv").values == b.factors.values);
  CHECK(std::filesystem::exists(dir / "truth.json"));
}

}  // TEST_SUITE
