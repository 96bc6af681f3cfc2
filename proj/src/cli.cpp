#include "lulcc/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lulcc/factors.hpp"
#include "lulcc/grid.hpp"
#include "lulcc/hmm.hpp"
#include "lulcc/lcm.hpp"
#include "lulcc/markov.hpp"
#include "lulcc/pipeline.hpp"
#include "lulcc/radiometry.hpp"
#include "lulcc/suitability.hpp"
#include "lulcc/synth.hpp"
#include "lulcc/validate.hpp"

namespace lulcc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_json_file(const json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cli", "unwritable path: " + path.string());
  out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cli", "unreadable file: " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw Error("cli", "malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::vector<Driver> parse_drivers(const std::vector<std::string>& specs) {
  std::vector<Driver> drivers;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("cli", "driver must be NAME=PATH: " + s);
    drivers.push_back({s.substr(0, eq), read_continuous_grid(s.substr(eq + 1))});
  }
  return drivers;
}

std::set<Transition> parse_allowed(const std::vector<std::string>& specs) {
  if (specs.empty()) return default_allowed_transitions();
  std::set<Transition> out;
  for (const auto& s : specs) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw Error("cli", "transition must be FROM:TO: " + s);
    try {
      out.insert({std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))});
    } catch (const std::exception&) {
      throw Error("cli", "transition must be FROM:TO: " + s);
    }
  }
  return out;
}

Mask load_mask(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_categorical_grid(path);
}

struct Options {
  // shared
  std::vector<int> classes{kVegetation, kImpervious, kSoil};
  std::string mask, out;
  // mc
  std::string t0, t1, matrix;
  int power = -1;
  double exponent = 0.0;
  int base_span = 0, target_span = 0;
  // hmm
  std::string factors, init_matrix, freq_grid, trace;
  std::vector<double> freq;
  int repeat = 6, max_iter = 50000;
  double tol = 0.01;
  std::uint64_t seed = 0;
  // lr / predict
  std::vector<std::string> drivers, allowed, submodels;
  double l2 = 1e-6;
  std::string quantum = "hmm", params, quantum_out;
  // validate
  std::string actual, predicted, report, overlay, outcome;
  int urban = kImpervious, bins = 10;
  // radiometry
  std::string in, calibration;
  int window = 9, passes = 5;
  std::size_t band = 0;
  double dark_dn = 0.0;
  // synth / pipeline
  std::string config;
};

int cmd_mc_estimate(const Options& o, std::ostream& out) {
  const auto m = markov::estimate_transition_matrix(read_categorical_grid(o.t0), read_categorical_grid(o.t1),
                                                    o.classes, load_mask(o.mask));
  save_transition_matrix(m, o.out);
  out << to_json(m).dump() << '\n';
  return 0;
}

int cmd_mc_extrapolate(const Options& o, std::ostream& out, const CLI::App& sub) {
  const auto a = load_transition_matrix(o.matrix);
  const int modes = static_cast<int>(sub.count("--power") + sub.count("--exponent") +
                                     (sub.count("--target-span") ? 1 : 0));
  if (modes != 1) throw Error("cli", "give exactly one of --power, --exponent, or --base-span/--target-span");
  TransitionMatrix m;
  if (sub.count("--power")) m = markov::extrapolate_matrix_power(a, o.power);
  else if (sub.count("--exponent")) m = markov::extrapolate_elementwise_power(a, o.exponent);
  else m = markov::extrapolate_span(a, o.base_span, o.target_span);
  save_transition_matrix(m, o.out);
  out << to_json(m).dump() << '\n';
  return 0;
}

int cmd_hmm_train(const Options& o, std::ostream& out) {
  const auto mc = load_transition_matrix(o.init_matrix);
  std::vector<double> freq = o.freq;
  if (!o.freq_grid.empty()) freq = class_frequencies(read_categorical_grid(o.freq_grid), mc.classes, load_mask(o.mask));
  if (freq.empty()) throw Error("cli", "give --freq or --freq-grid");
  const auto table = factors::normalize_min_max(factors::load_factor_table(o.factors));
  const auto obs = factors::build_observation_sequence(table, o.repeat);
  const auto init = hmm::init_params(mc, freq, obs, o.seed);
  const auto result = hmm::baum_welch_train(init, obs, o.max_iter, o.tol);
  save_hmm_params(result.params, o.out);
  if (!o.trace.empty()) write_json_file(json(result.trace.log_likelihoods), o.trace);
  out << json{{"iterations_run", result.trace.iterations_run}, {"converged", result.trace.converged},
              {"learned_quantum", to_json(hmm::learned_quantum(result.params))}}
             .dump()
      << '\n';
  return 0;
}

int cmd_lr_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const auto t0 = read_categorical_grid(o.t0);
  const auto t1 = read_categorical_grid(o.t1);
  const auto drivers = parse_drivers(o.drivers);
  const Mask mask = load_mask(o.mask);
  fs::create_directories(o.out);
  json written = json::array();
  for (const auto& t : parse_allowed(o.allowed)) {
    const auto samples = lcm::build_transition_samples(t0, t1, drivers, t.first, t.second, mask);
    if (samples.balance != LabelBalance::mixed)
      err << "warning: transition " << t.first << "->" << t.second << " has "
          << (samples.balance == LabelBalance::no_positive ? "no positive" : "no negative")
          << " samples\n";
    const TransitionSubModel sm{t.first, t.second, lcm::fit_logistic(samples, o.l2)};
    const fs::path path = fs::path(o.out) / ("submodel_" + std::to_string(t.first) + "_" +
                                             std::to_string(t.second) + ".json");
    write_json_file(to_json(sm), path);
    written.push_back(path.generic_string());
  }
  out << written.dump() << '\n';
  return 0;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const auto t0 = read_categorical_grid(o.t0);
  const auto drivers = parse_drivers(o.drivers);
  const Mask mask = load_mask(o.mask);
  TransitionMatrix a;
  if (o.quantum == "hmm") {
    if (o.params.empty()) throw Error("cli", "--quantum hmm needs --params");
    a = hmm::learned_quantum(load_hmm_params(o.params));
  } else {
    if (o.matrix.empty()) throw Error("cli", "--quantum mc needs --matrix");
    a = load_transition_matrix(o.matrix);
    if (o.target_span > 0) a = markov::extrapolate_span(a, std::max(o.base_span, 1), o.target_span);
  }
  std::vector<PotentialMap> potentials;
  std::set<Transition> allowed;
  for (const auto& path : o.submodels) {
    const auto sm = submodel_from_json(read_json_file(path));
    allowed.insert({sm.from_class, sm.to_class});
    potentials.push_back(lcm::potential_map(sm, drivers, t0, mask));
  }
  if (!o.allowed.empty()) allowed = parse_allowed(o.allowed);
  const auto q = lcm::compute_quantum(a, t0, mask, allowed);
  if (!o.quantum_out.empty()) write_json_file(to_json(q), o.quantum_out);
  const auto result = lcm::allocate_changes(t0, potentials, q, mask);
  write_ascii_grid(result.grid, o.out);
  json shortfalls = json::array();
  for (const auto& s : result.shortfalls)
    shortfalls.push_back({{"from", s.transition.first}, {"to", s.transition.second}, {"quota", s.quota},
                          {"eligible", s.eligible}, {"allocated", s.allocated}});
  out << json{{"quantum", to_json(q)}, {"shortfalls", shortfalls}}.dump() << '\n';
  return 0;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto actual = read_categorical_grid(o.actual);
  const auto predicted = read_categorical_grid(o.predicted);
  const Mask mask = load_mask(o.mask);
  json report = validate::validation_report(actual, predicted, o.classes, o.urban, mask);
  json cramers = json::object();
  if (!o.drivers.empty()) {
    if (o.outcome.empty()) throw Error("cli", "--driver in validate needs --outcome");
    const auto outcome = read_categorical_grid(o.outcome);
    for (const auto& d : parse_drivers(o.drivers))
      cramers[d.name] = suitability::cramers_v(d.grid, outcome, o.bins, mask);
  }
  report["cramers_v"] = cramers;
  write_json_file(report, o.report);
  if (!o.overlay.empty()) validate::render_overlay(actual, predicted, o.urban, o.overlay, mask);
  out << json{{"overall_accuracy", report["overall_accuracy"]}}.dump() << '\n';
  return 0;
}

radiometry::BandCalibration pick_band(const Options& o) {
  const auto bands = radiometry::load_calibration(o.calibration);
  if (o.band >= bands.size()) throw Error("cli", "calibration has no band " + std::to_string(o.band));
  return bands[o.band];
}

int cmd_synth(const Options& o, std::ostream& out) {
  const auto config = load_scenario_config(o.config);
  const auto bundle = synth::generate_scenario(config);
  synth::write_bundle(bundle, config, o.out);
  write_json_file(to_json(bundle_pipeline_config(bundle, config)), fs::path(o.out) / "pipeline.json");
  out << json{{"bundle", o.out}, {"years", bundle.years}}.dump() << '\n';
  return 0;
}

int cmd_pipeline(const Options& o, std::ostream& out, const CLI::App& sub) {
  const fs::path cfg_path(o.config);
  PipelineConfig cfg = pipeline_config_from_json(read_json_file(cfg_path), cfg_path.parent_path());
  if (sub.count("--out")) cfg.output_dir = o.out;
  if (sub.count("--seed")) cfg.seed = o.seed;
  if (sub.count("--repeat")) cfg.repeat_factor = o.repeat;
  if (sub.count("--max-iter")) cfg.max_iter = o.max_iter;
  if (sub.count("--tol")) cfg.tol = o.tol;
  if (sub.count("--l2")) cfg.l2 = o.l2;
  if (sub.count("--bins")) cfg.bins = o.bins;
  const json report = pipeline::run_pipeline(cfg);
  out << json{{"output_dir", cfg.output_dir.generic_string()},
              {"mc_accuracy", report["models"]["mc"]["overall_accuracy"]},
              {"hmm_accuracy", report["models"]["hmm"]["overall_accuracy"]}}
             .dump()
      << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Land-cover change modelling toolkit (MC-LR and HMM-LR)", "lulcc"};
  app.require_subcommand(1);
  Options o;

  auto classes_opt = [&](CLI::App* s) {
    s->add_option("--classes", o.classes, "Ordered class codes")->delimiter(',');
  };

  auto* mc_est = app.add_subcommand("mc-estimate", "Estimate a transition matrix from two grids");
  mc_est->add_option("--t0", o.t0)->required();
  mc_est->add_option("--t1", o.t1)->required();
  mc_est->add_option("--mask", o.mask);
  mc_est->add_option("--out", o.out)->required();
  classes_opt(mc_est);

  auto* mc_ext = app.add_subcommand("mc-extrapolate", "Extrapolate a transition matrix in time");
  mc_ext->add_option("--matrix", o.matrix)->required();
  mc_ext->add_option("--power", o.power, "Matrix power k");
  mc_ext->add_option("--exponent", o.exponent, "Elementwise power-law exponent");
  mc_ext->add_option("--base-span", o.base_span);
  mc_ext->add_option("--target-span", o.target_span);
  mc_ext->add_option("--out", o.out)->required();

  auto* hmm_train = app.add_subcommand("hmm-train", "Train the Gaussian HMM on a factor table");
  hmm_train->add_option("--factors", o.factors)->required();
  hmm_train->add_option("--init-matrix", o.init_matrix)->required();
  hmm_train->add_option("--freq", o.freq, "Initial class frequencies")->delimiter(',');
  hmm_train->add_option("--freq-grid", o.freq_grid, "Grid to count initial frequencies from");
  hmm_train->add_option("--mask", o.mask);
  hmm_train->add_option("--repeat", o.repeat);
  hmm_train->add_option("--max-iter", o.max_iter);
  hmm_train->add_option("--tol", o.tol);
  hmm_train->add_option("--seed", o.seed);
  hmm_train->add_option("--out", o.out)->required();
  hmm_train->add_option("--trace", o.trace);

  auto* lr_fit = app.add_subcommand("lr-fit", "Fit logistic transition sub-models");
  lr_fit->add_option("--t0", o.t0)->required();
  lr_fit->add_option("--t1", o.t1)->required();
  lr_fit->add_option("--driver", o.drivers, "NAME=PATH, repeatable")->required();
  lr_fit->add_option("--allowed", o.allowed, "FROM:TO, repeatable")->delimiter(',');
  lr_fit->add_option("--mask", o.mask);
  lr_fit->add_option("--l2", o.l2);
  lr_fit->add_option("--out-dir", o.out)->required();

  auto* predict = app.add_subcommand("predict", "Allocate predicted changes onto a grid");
  predict->add_option("--t0", o.t0)->required();
  predict->add_option("--submodel", o.submodels)->required();
  predict->add_option("--driver", o.drivers, "NAME=PATH, repeatable")->required();
  predict->add_option("--quantum", o.quantum)->check(CLI::IsMember({"mc", "hmm"}));
  predict->add_option("--matrix", o.matrix);
  predict->add_option("--base-span", o.base_span);
  predict->add_option("--target-span", o.target_span);
  predict->add_option("--params", o.params);
  predict->add_option("--allowed", o.allowed)->delimiter(',');
  predict->add_option("--mask", o.mask);
  predict->add_option("--quantum-out", o.quantum_out);
  predict->add_option("--out", o.out)->required();

  auto* val = app.add_subcommand("validate", "Compare predicted and actual grids");
  val->add_option("--actual", o.actual)->required();
  val->add_option("--predicted", o.predicted)->required();
  val->add_option("--urban", o.urban);
  val->add_option("--mask", o.mask);
  val->add_option("--report", o.report)->required();
  val->add_option("--overlay", o.overlay);
  val->add_option("--driver", o.drivers);
  val->add_option("--outcome", o.outcome);
  val->add_option("--bins", o.bins);
  classes_opt(val);

  auto* rad = app.add_subcommand("radiometry", "Single-band radiometric utilities");
  rad->require_subcommand(1);
  auto* gap = rad->add_subcommand("gap-fill", "Fill scan-line gaps with the windowed mode");
  gap->add_option("--in", o.in)->required();
  gap->add_option("--out", o.out)->required();
  gap->add_option("--window", o.window);
  gap->add_option("--passes", o.passes);
  auto* dos = rad->add_subcommand("dark-subtract", "Subtract a dark-object DN");
  dos->add_option("--in", o.in)->required();
  dos->add_option("--out", o.out)->required();
  dos->add_option("--dark-dn", o.dark_dn)->required();
  auto* radiance = rad->add_subcommand("radiance", "Convert DN to spectral radiance");
  auto* reflect = rad->add_subcommand("reflectance", "Convert radiance to TOA reflectance");
  for (auto* s : {radiance, reflect}) {
    s->add_option("--in", o.in)->required();
    s->add_option("--out", o.out)->required();
    s->add_option("--calibration", o.calibration)->required();
    s->add_option("--band", o.band);
  }

  auto* syn = app.add_subcommand("synth", "Generate a synthetic scenario bundle");
  syn->add_option("--config", o.config)->required();
  syn->add_option("--out", o.out)->required();

  auto* pipe = app.add_subcommand("pipeline", "Run MC-LR and HMM-LR end to end");
  pipe->add_option("--config", o.config)->required();
  pipe->add_option("--out", o.out);
  pipe->add_option("--seed", o.seed);
  pipe->add_option("--repeat", o.repeat);
  pipe->add_option("--max-iter", o.max_iter);
  pipe->add_option("--tol", o.tol);
  pipe->add_option("--l2", o.l2);
  pipe->add_option("--bins", o.bins);

  if (!args.empty() && !args.front().starts_with('-') && app.get_subcommand_no_throw(args.front()) == nullptr) {
    err << json{{"error", {{"module", "cli"}, {"message", "unknown subcommand: " + args.front()}}}}.dump() << '\n';
    err << app.help();
    return 2;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", {{"module", "cli"}, {"message", e.what()}}}}.dump() << '\n';
    err << app.help();
    return 2;
  }

  try {
    if (*mc_est) return cmd_mc_estimate(o, out);
    if (*mc_ext) return cmd_mc_extrapolate(o, out, *mc_ext);
    if (*hmm_train) return cmd_hmm_train(o, out);
    if (*lr_fit) return cmd_lr_fit(o, out, err);
    if (*predict) return cmd_predict(o, out);
    if (*val) return cmd_validate(o, out);
    if (*gap) {
      write_ascii_grid(radiometry::slc_gap_fill(read_continuous_grid(o.in), o.window, o.passes), o.out);
      return 0;
    }
    if (*dos) {
      write_ascii_grid(radiometry::dark_object_subtract(read_continuous_grid(o.in), o.dark_dn), o.out);
      return 0;
    }
    if (*radiance) {
      write_ascii_grid(radiometry::radiance_grid(read_continuous_grid(o.in), pick_band(o)), o.out);
      return 0;
    }
    if (*reflect) {
      write_ascii_grid(radiometry::reflectance_grid(read_continuous_grid(o.in), pick_band(o)), o.out);
      return 0;
    }
    if (*syn) return cmd_synth(o, out);
    if (*pipe) return cmd_pipeline(o, out, *pipe);
  } catch (const Error& e) {
    err << json{{"error", {{"module", e.module()}, {"message", e.detail()}}}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", {{"module", "cli"}, {"message", e.what()}}}}.dump() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace lulcc::cli
