#include "lulcc/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "lulcc/factors.hpp"
#include "lulcc/hmm.hpp"
#include "lulcc/markov.hpp"
#include "lulcc/suitability.hpp"
#include "lulcc/validate.hpp"

namespace lulcc {

namespace {

constexpr const char* kModule = "pipeline";

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(kModule, "unwritable path: " + path.string());
  out << j.dump(2) << '\n';
}

std::string transition_tag(const Transition& t) {
  return std::to_string(t.first) + "_" + std::to_string(t.second);
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(kModule, "SHA-256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, "unreadable file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void PipelineConfig::validate() const {
  if (landcover.size() < 2) throw Error(kModule, "need at least two land-cover grids");
  auto has_year = [&](int y) {
    return std::any_of(landcover.begin(), landcover.end(), [y](const auto& l) { return l.year == y; });
  };
  for (int y : {base_year, calibration_year, target_year})
    if (!has_year(y)) throw Error(kModule, "no land-cover grid for year " + std::to_string(y));
  if (!(base_year < calibration_year && calibration_year < target_year))
    throw Error(kModule, "years must satisfy base < calibration < target");
  if (drivers.empty()) throw Error(kModule, "no driver grids");
  if (classes.empty()) throw Error(kModule, "no classes");
  if (repeat_factor < 1 || max_iter < 0 || !(tol > 0.0) || !(l2 >= 0.0) || bins < 1)
    throw Error(kModule, "invalid model parameter");
  std::vector<std::filesystem::path> files{factors};
  for (const auto& l : landcover) files.push_back(l.path);
  for (const auto& d : drivers) files.push_back(d.path);
  if (water_mask) files.push_back(*water_mask);
  for (const auto& f : files)
    if (!std::filesystem::exists(f)) throw Error(kModule, "missing input file: " + f.string());
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  try {
    for (const auto& l : j.at("landcover"))
      c.landcover.push_back({l.at("year").get<int>(), resolve(base_dir, l.at("path").get<std::string>())});
    c.factors = resolve(base_dir, j.at("factors").get<std::string>());
    for (const auto& d : j.at("drivers"))
      c.drivers.push_back({d.at("name").get<std::string>(), resolve(base_dir, d.at("path").get<std::string>())});
    if (j.contains("water_mask") && !j.at("water_mask").is_null())
      c.water_mask = resolve(base_dir, j.at("water_mask").get<std::string>());
    c.classes = j.value("classes", c.classes);
    c.base_year = j.at("base_year").get<int>();
    c.calibration_year = j.at("calibration_year").get<int>();
    c.target_year = j.at("target_year").get<int>();
    c.repeat_factor = j.value("repeat_factor", c.repeat_factor);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.tol = j.value("tol", c.tol);
    c.l2 = j.value("l2", c.l2);
    c.bins = j.value("bins", c.bins);
    if (j.contains("allowed")) {
      c.allowed.clear();
      for (const auto& t : j.at("allowed")) {
        auto v = t.get<std::vector<int>>();
        if (v.size() != 2) throw Error(kModule, "allowed entries are [from, to] pairs");
        c.allowed.insert({v[0], v[1]});
      }
    }
    c.urban_code = j.value("urban_code", c.urban_code);
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, std::string("invalid pipeline config: ") + e.what());
  }
  std::sort(c.landcover.begin(), c.landcover.end(),
            [](const auto& a, const auto& b) { return a.year < b.year; });
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["landcover"] = nlohmann::json::array();
  for (const auto& l : c.landcover) j["landcover"].push_back({{"year", l.year}, {"path", l.path.generic_string()}});
  j["factors"] = c.factors.generic_string();
  j["drivers"] = nlohmann::json::array();
  for (const auto& d : c.drivers) j["drivers"].push_back({{"name", d.name}, {"path", d.path.generic_string()}});
  j["water_mask"] = c.water_mask ? nlohmann::json(c.water_mask->generic_string()) : nlohmann::json(nullptr);
  j["classes"] = c.classes;
  j["base_year"] = c.base_year;
  j["calibration_year"] = c.calibration_year;
  j["target_year"] = c.target_year;
  j["repeat_factor"] = c.repeat_factor;
  j["max_iter"] = c.max_iter;
  j["tol"] = c.tol;
  j["l2"] = c.l2;
  j["bins"] = c.bins;
  j["allowed"] = nlohmann::json::array();
  for (const auto& [f, t] : c.allowed) j["allowed"].push_back({f, t});
  j["urban_code"] = c.urban_code;
  j["output_dir"] = c.output_dir.generic_string();
  j["seed"] = c.seed;
  return j;
}

PipelineConfig bundle_pipeline_config(const ScenarioBundle& bundle, const ScenarioConfig& scenario) {
  PipelineConfig c;
  for (int y : bundle.years) c.landcover.push_back({y, "lc_" + std::to_string(y) + ".asc"});
  c.factors = "factors.csv";
  c.drivers = {{"slope_suitability", "slope_suitability.asc"}, {"road_proximity", "road_proximity.asc"}};
  c.water_mask = "water_mask.asc";
  c.classes = scenario.classes;
  // Mirror the 2001 / 2009 / 2014 layout: calibrate over the first ~60% of
  // the record, predict the final year.
  const int n = static_cast<int>(bundle.years.size());
  c.base_year = bundle.years.front();
  c.calibration_year = bundle.years[static_cast<std::size_t>(std::clamp((n - 1) * 8 / 13, 1, n - 2))];
  c.target_year = bundle.years.back();
  c.repeat_factor = scenario.repeat_factor;
  c.output_dir = "out";
  c.seed = scenario.seed;
  return c;
}

namespace validate {

nlohmann::json validation_report(const CategoricalGrid& actual, const CategoricalGrid& predicted,
                                 std::span<const int> classes, int urban_code, const Mask& mask) {
  const auto cm = confusion_matrix(actual, predicted, classes, mask);
  nlohmann::json j;
  j["confusion"] = to_json(cm);
  j["scores"] = to_json(precision_recall(cm));
  j["overall_accuracy"] = overall_accuracy(cm);
  j["blobs"] = to_json(blob_analysis(actual, predicted, urban_code, mask));
  return j;
}

}  // namespace validate

namespace pipeline {

nlohmann::json run_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto& out = config.output_dir;
  std::filesystem::create_directories(out);

  std::map<int, CategoricalGrid> grids;
  for (const auto& l : config.landcover) grids.emplace(l.year, read_categorical_grid(l.path));
  Mask mask;
  if (config.water_mask) mask = read_categorical_grid(*config.water_mask);
  std::vector<Driver> drivers;
  for (const auto& d : config.drivers) drivers.push_back({d.name, read_continuous_grid(d.path)});
  {
    std::vector<GridHeader> headers;
    for (const auto& [y, g] : grids) headers.push_back(g.header());
    for (const auto& d : drivers) headers.push_back(d.grid.header());
    if (mask) headers.push_back(mask->header());
    validate_alignment(std::span<const GridHeader>(headers));
  }
  const auto& classes = config.classes;
  const CategoricalGrid& base = grids.at(config.base_year);
  const CategoricalGrid& calib = grids.at(config.calibration_year);
  const CategoricalGrid& target = grids.at(config.target_year);
  const CategoricalGrid& second = std::next(grids.begin())->second;

  std::vector<std::string> artifacts;
  auto save = [&](const nlohmann::json& j, const std::string& name) {
    write_json(j, out / name);
    artifacts.push_back(name);
  };

  // Temporal models.
  const TransitionMatrix mc_init = markov::estimate_transition_matrix(base, second, classes, mask);
  save(to_json(mc_init), "mc_init.json");
  const auto initial_freq = class_frequencies(base, classes, mask);

  FactorTable table = factors::normalize_min_max(factors::load_factor_table(config.factors));
  const ObservationSequence obs = factors::build_observation_sequence(table, config.repeat_factor);
  const GaussianHmmParams init = hmm::init_params(mc_init, initial_freq, obs, config.seed);
  const auto trained = hmm::baum_welch_train(init, obs, config.max_iter, config.tol);
  save(to_json(trained.params), "hmm_params.json");
  save({{"log_likelihoods", trained.trace.log_likelihoods},
        {"iterations_run", trained.trace.iterations_run},
        {"converged", trained.trace.converged}},
       "hmm_trace.json");
  const TransitionMatrix hmm_quantum_matrix = hmm::learned_quantum(trained.params);

  const TransitionMatrix mc_calib = markov::estimate_transition_matrix(base, calib, classes, mask);
  save(to_json(mc_calib), "mc_calibration.json");
  const int base_span = config.calibration_year - config.base_year;
  const int target_span = config.target_year - config.calibration_year;
  const TransitionMatrix mc_extrap = markov::extrapolate_span(mc_calib, base_span, target_span);
  save(to_json(mc_extrap), "mc_extrapolated.json");

  // Spatial sub-models.
  std::vector<PotentialMap> potentials;
  nlohmann::json submodel_report = nlohmann::json::array();
  for (const auto& t : config.allowed) {
    auto samples = lcm::build_transition_samples(base, calib, drivers, t.first, t.second, mask);
    TransitionSubModel sm{t.first, t.second, lcm::fit_logistic(samples, config.l2)};
    save(to_json(sm), "submodel_" + transition_tag(t) + ".json");
    auto pm = lcm::potential_map(sm, drivers, calib, mask);
    const std::string grid_name = "potential_" + transition_tag(t) + ".asc";
    write_ascii_grid(pm.grid, out / grid_name);
    artifacts.push_back(grid_name);
    potentials.push_back(std::move(pm));
    const char* balance = samples.balance == LabelBalance::mixed        ? "mixed"
                          : samples.balance == LabelBalance::no_positive ? "no_positive"
                                                                         : "no_negative";
    submodel_report.push_back({{"from", t.first},
                               {"to", t.second},
                               {"samples", samples.labels.size()},
                               {"positives", samples.labels.sum()},
                               {"label_balance", balance}});
  }

  // Driver discriminatory power against urbanization over the calibration span.
  nlohmann::json cramers = nlohmann::json::object();
  {
    CategoricalGrid outcome(base.header(), 0);
    CategoricalGrid eligible(base.header(), 0);
    for (std::size_t i = 0; i < base.size(); ++i) {
      const bool skip = masked(mask, i) || base.is_nodata(i) || calib.is_nodata(i) ||
                        base[i] == config.urban_code;
      eligible[i] = skip ? 1 : 0;
      outcome[i] = (!skip && calib[i] == config.urban_code) ? 1 : 0;
    }
    for (const auto& d : drivers) {
      try {
        cramers[d.name] = suitability::cramers_v(d.grid, outcome, config.bins, eligible);
      } catch (const Error&) {
        cramers[d.name] = nullptr;
      }
    }
  }

  nlohmann::json models = nlohmann::json::object();
  auto run_model = [&](const std::string& tag, const TransitionMatrix& a) {
    const QuantumTable q = lcm::compute_quantum(a, calib, mask, config.allowed);
    save(to_json(q), "quantum_" + tag + ".json");
    const AllocationResult alloc = lcm::allocate_changes(calib, potentials, q, mask);
    const std::string grid_name = "predicted_" + tag + ".asc";
    write_ascii_grid(alloc.grid, out / grid_name);
    artifacts.push_back(grid_name);
    nlohmann::json report = validate::validation_report(target, alloc.grid, classes, config.urban_code, mask);
    report["cramers_v"] = cramers;
    nlohmann::json shortfalls = nlohmann::json::array();
    for (const auto& s : alloc.shortfalls)
      shortfalls.push_back({{"from", s.transition.first}, {"to", s.transition.second},
                            {"quota", s.quota}, {"eligible", s.eligible}, {"allocated", s.allocated}});
    report["shortfalls"] = shortfalls;
    save(report, "validation_" + tag + ".json");
    const std::string overlay = "overlay_" + tag + ".ppm";
    validate::render_overlay(target, alloc.grid, config.urban_code, out / overlay, mask);
    artifacts.push_back(overlay);
    models[tag] = {{"overall_accuracy", report["overall_accuracy"]},
                   {"urban_persistence", a.at(config.urban_code, config.urban_code)},
                   {"scores", report["scores"]},
                   {"blobs", report["blobs"]}};
  };
  run_model("mc", mc_extrap);
  run_model("hmm", hmm_quantum_matrix);

  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& a : artifacts) hashes[a] = sha256_file(out / a);

  // The hash covers inputs and parameters, not where the outputs went.
  nlohmann::json config_json = to_json(config);
  config_json.erase("output_dir");
  nlohmann::json report;
  report["config_hash"] = sha256_hex(config_json.dump());
  report["seed"] = config.seed;
  report["years"] = {{"base", config.base_year}, {"calibration", config.calibration_year},
                     {"target", config.target_year}};
  report["mc_extrapolation"] = target_span % base_span == 0 ? "matrix_power" : "elementwise_power";
  report["hmm_training"] = {{"iterations_run", trained.trace.iterations_run},
                            {"converged", trained.trace.converged},
                            {"final_log_likelihood", trained.trace.log_likelihoods.empty()
                                                         ? nlohmann::json(nullptr)
                                                         : nlohmann::json(trained.trace.log_likelihoods.back())}};
  report["submodels"] = submodel_report;
  report["cramers_v"] = cramers;
  report["models"] = models;
  report["hmm_minus_mc_accuracy"] =
      models["hmm"]["overall_accuracy"].get<double>() - models["mc"]["overall_accuracy"].get<double>();
  report["artifacts"] = hashes;
  write_json(report, out / "report.json");
  return report;
}

}  // namespace pipeline
}  // namespace lulcc
