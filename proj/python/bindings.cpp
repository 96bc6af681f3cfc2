// Python bindings for the core operations. Grids cross the boundary as 2-D
// numpy arrays plus a header dict; JSON documents cross as strings and are
// decoded on the Python side.

#include <fstream>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "json.hpp"
#include "lulcc/cli.hpp"
#include "lulcc/factors.hpp"
#include "lulcc/hmm.hpp"
#include "lulcc/lcm.hpp"
#include "lulcc/markov.hpp"
#include "lulcc/pipeline.hpp"
#include "lulcc/radiometry.hpp"
#include "lulcc/suitability.hpp"
#include "lulcc/synth.hpp"
#include "lulcc/validate.hpp"

namespace py = pybind11;
using namespace lulcc;

namespace {

using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

GridHeader header_for(const py::buffer_info& info, double cellsize, double nodata) {
  if (info.ndim != 2) throw py::value_error("grid arrays must be 2-D");
  GridHeader h;
  h.nrows = static_cast<int>(info.shape[0]);
  h.ncols = static_cast<int>(info.shape[1]);
  h.cellsize = cellsize;
  h.nodata_value = nodata;
  return h;
}

CategoricalGrid to_categorical(const IntArray& a, double cellsize = 30.0, double nodata = -9999.0) {
  const auto info = a.request();
  const auto* p = static_cast<const int*>(info.ptr);
  return CategoricalGrid(header_for(info, cellsize, nodata), std::vector<int>(p, p + a.size()));
}

ContinuousGrid to_continuous(const RealArray& a, double cellsize = 30.0, double nodata = -9999.0) {
  const auto info = a.request();
  const auto* p = static_cast<const double*>(info.ptr);
  return ContinuousGrid(header_for(info, cellsize, nodata), std::vector<double>(p, p + a.size()));
}

Mask to_mask(const std::optional<IntArray>& a) {
  if (!a) return std::nullopt;
  return to_categorical(*a);
}

template <typename T>
py::array_t<T> to_numpy(const Raster<T>& g) {
  py::array_t<T> out({g.nrows(), g.ncols()});
  std::copy(g.cells().begin(), g.cells().end(), out.mutable_data());
  return out;
}

py::dict header_dict(const GridHeader& h) {
  py::dict d;
  d["ncols"] = h.ncols;
  d["nrows"] = h.nrows;
  d["xllcorner"] = h.xllcorner;
  d["yllcorner"] = h.yllcorner;
  d["cellsize"] = h.cellsize;
  d["nodata_value"] = h.nodata_value;
  return d;
}

TransitionMatrix make_matrix(std::vector<int> classes, Eigen::MatrixXd probs) {
  TransitionMatrix m{std::move(classes), std::move(probs)};
  m.validate();
  return m;
}

ObservationSequence make_obs(Eigen::MatrixXd x) {
  ObservationSequence o;
  o.observations = std::move(x);
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Land-cover change modelling core (MC-LR and HMM-LR)";

  py::register_exception<Error>(m, "LulccError", PyExc_RuntimeError);

  // grid
  m.def("read_categorical_grid", [](const std::filesystem::path& path) {
    const auto g = read_categorical_grid(path);
    return py::make_tuple(to_numpy(g), header_dict(g.header()));
  });
  m.def("read_continuous_grid", [](const std::filesystem::path& path) {
    const auto g = read_continuous_grid(path);
    return py::make_tuple(to_numpy(g), header_dict(g.header()));
  });
  m.def("write_categorical_grid",
        [](const IntArray& a, const std::filesystem::path& path, double cellsize, double nodata) {
          write_ascii_grid(to_categorical(a, cellsize, nodata), path);
        },
        py::arg("cells"), py::arg("path"), py::arg("cellsize") = 30.0, py::arg("nodata") = -9999.0);
  m.def("write_continuous_grid",
        [](const RealArray& a, const std::filesystem::path& path, double cellsize, double nodata) {
          write_ascii_grid(to_continuous(a, cellsize, nodata), path);
        },
        py::arg("cells"), py::arg("path"), py::arg("cellsize") = 30.0, py::arg("nodata") = -9999.0);
  m.def("class_frequencies",
        [](const IntArray& g, const std::vector<int>& classes, const std::optional<IntArray>& mask) {
          return class_frequencies(to_categorical(g), classes, to_mask(mask));
        },
        py::arg("grid"), py::arg("classes"), py::arg("mask") = py::none());

  // radiometry
  m.def("dn_to_radiance", [](double dn, double l_min, double l_max) {
    return radiometry::dn_to_radiance(dn, {l_min, l_max});
  });
  m.def("toa_reflectance",
        [](double radiance, double esun, double sun_zenith_deg, double earth_sun_distance_au) {
          return radiometry::toa_reflectance(radiance, {0.0, 1.0, esun, sun_zenith_deg, earth_sun_distance_au});
        },
        py::arg("radiance"), py::arg("esun"), py::arg("sun_zenith_deg") = 0.0,
        py::arg("earth_sun_distance_au") = 1.0);
  m.def("slc_gap_fill",
        [](const RealArray& band, int window, int max_passes, double nodata) {
          return to_numpy(radiometry::slc_gap_fill(to_continuous(band, 30.0, nodata), window, max_passes));
        },
        py::arg("band"), py::arg("window") = 9, py::arg("max_passes") = 5, py::arg("nodata") = -9999.0);

  // markov
  m.def("estimate_transition_matrix",
        [](const IntArray& t0, const IntArray& t1, const std::vector<int>& classes,
           const std::optional<IntArray>& mask) {
          return markov::estimate_transition_matrix(to_categorical(t0), to_categorical(t1), classes, to_mask(mask))
              .probs;
        },
        py::arg("t0"), py::arg("t1"), py::arg("classes"), py::arg("mask") = py::none());
  m.def("extrapolate_matrix_power", [](const Eigen::MatrixXd& a, int k) {
    std::vector<int> classes(static_cast<std::size_t>(a.rows()));
    for (std::size_t i = 0; i < classes.size(); ++i) classes[i] = static_cast<int>(i) + 1;
    return markov::extrapolate_matrix_power(make_matrix(classes, a), k).probs;
  });
  m.def("extrapolate_elementwise_power", [](const Eigen::MatrixXd& a, double exponent) {
    std::vector<int> classes(static_cast<std::size_t>(a.rows()));
    for (std::size_t i = 0; i < classes.size(); ++i) classes[i] = static_cast<int>(i) + 1;
    return markov::extrapolate_elementwise_power(make_matrix(classes, a), exponent).probs;
  });

  // hmm
  py::class_<GaussianHmmParams>(m, "GaussianHmmParams")
      .def(py::init([](std::vector<int> classes, Eigen::VectorXd pi, Eigen::MatrixXd trans, Eigen::MatrixXd means,
                       Eigen::MatrixXd vars) {
             GaussianHmmParams p;
             p.trans = make_matrix(classes, std::move(trans));
             p.classes = std::move(classes);
             p.pi = std::move(pi);
             p.means = std::move(means);
             p.vars = std::move(vars);
             p.validate();
             return p;
           }),
           py::arg("classes"), py::arg("pi"), py::arg("trans"), py::arg("means"), py::arg("vars"))
      .def_readonly("classes", &GaussianHmmParams::classes)
      .def_readonly("pi", &GaussianHmmParams::pi)
      .def_property_readonly("trans", [](const GaussianHmmParams& p) { return p.trans.probs; })
      .def_readonly("means", &GaussianHmmParams::means)
      .def_readonly("vars", &GaussianHmmParams::vars)
      .def("to_json", [](const GaussianHmmParams& p) { return to_json(p).dump(); });
  m.def("init_params",
        [](const std::vector<int>& classes, const Eigen::MatrixXd& mc_trans, const std::vector<double>& freq,
           const Eigen::MatrixXd& obs, std::uint64_t seed) {
          return hmm::init_params(make_matrix(classes, mc_trans), freq, make_obs(obs), seed);
        },
        py::arg("classes"), py::arg("mc_trans"), py::arg("initial_freq"), py::arg("obs"), py::arg("seed") = 0);
  m.def("log_likelihood", [](const GaussianHmmParams& p, const Eigen::MatrixXd& obs) {
    return hmm::log_likelihood(p, make_obs(obs));
  });
  m.def("forward_backward", [](const GaussianHmmParams& p, const Eigen::MatrixXd& obs) {
    auto post = hmm::forward_backward(p, make_obs(obs));
    return py::make_tuple(post.log_likelihood, post.gamma, post.xi);
  });
  m.def("baum_welch_train",
        [](const GaussianHmmParams& p, const Eigen::MatrixXd& obs, int max_iter, double tol) {
          auto r = hmm::baum_welch_train(p, make_obs(obs), max_iter, tol);
          py::dict trace;
          trace["log_likelihoods"] = r.trace.log_likelihoods;
          trace["iterations_run"] = r.trace.iterations_run;
          trace["converged"] = r.trace.converged;
          return py::make_tuple(r.params, trace);
        },
        py::arg("params"), py::arg("obs"), py::arg("max_iter") = 50000, py::arg("tol") = 0.01);
  m.def("learned_quantum", [](const GaussianHmmParams& p) { return hmm::learned_quantum(p).probs; });
  m.def("sample_hmm_sequence", [](const GaussianHmmParams& p, std::size_t length, std::uint64_t seed) {
    auto s = synth::sample_hmm_sequence(p, length, seed);
    return py::make_tuple(s.states, s.observations.observations);
  });

  // suitability
  m.def("slope_from_dem",
        [](const RealArray& dem, double cellsize) { return to_numpy(suitability::slope_from_dem(to_continuous(dem, cellsize))); },
        py::arg("dem"), py::arg("cellsize") = 30.0);
  m.def("slope_suitability", py::overload_cast<double>(&suitability::slope_suitability));
  m.def("proximity_transform",
        [](const IntArray& target, int code, double cellsize) {
          return to_numpy(suitability::proximity_transform(to_categorical(target, cellsize), code));
        },
        py::arg("target"), py::arg("code"), py::arg("cellsize") = 30.0);
  m.def("cramers_v_table", [](const Eigen::MatrixXd& table) { return suitability::cramers_v(table); });
  m.def("cramers_v",
        [](const RealArray& driver, const IntArray& outcome, int bins, const std::optional<IntArray>& mask) {
          return suitability::cramers_v(to_continuous(driver), to_categorical(outcome), bins, to_mask(mask));
        },
        py::arg("driver"), py::arg("outcome"), py::arg("bins") = 10, py::arg("mask") = py::none());

  // lcm
  m.def("fit_logistic",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2) {
          TransitionSamples s;
          for (Eigen::Index k = 0; k < x.cols(); ++k) s.feature_names.push_back("x" + std::to_string(k));
          s.features = x;
          s.labels = y;
          const auto model = lcm::fit_logistic(s, l2);
          py::dict d;
          d["intercept"] = model.intercept;
          d["coefficients"] = model.coefficients;
          d["feature_mean"] = model.feature_mean;
          d["feature_stddev"] = model.feature_stddev;
          return d;
        },
        py::arg("features"), py::arg("labels"), py::arg("l2") = 1e-6);
  m.def("compute_quantum",
        [](const std::vector<int>& classes, const Eigen::MatrixXd& a, const IntArray& t0,
           const std::optional<IntArray>& mask, const std::optional<std::set<Transition>>& allowed) {
          const auto q = lcm::compute_quantum(make_matrix(classes, a), to_categorical(t0), to_mask(mask),
                                              allowed ? *allowed : default_allowed_transitions());
          return to_json(q).dump();
        },
        py::arg("classes"), py::arg("matrix"), py::arg("t0"), py::arg("mask") = py::none(),
        py::arg("allowed") = py::none());

  // validate
  m.def("validation_report",
        [](const IntArray& actual, const IntArray& predicted, const std::vector<int>& classes, int urban_code,
           const std::optional<IntArray>& mask) {
          return validate::validation_report(to_categorical(actual), to_categorical(predicted), classes, urban_code,
                                             to_mask(mask))
              .dump();
        },
        py::arg("actual"), py::arg("predicted"), py::arg("classes") = std::vector<int>{1, 2, 3},
        py::arg("urban_code") = 2, py::arg("mask") = py::none());

  // synth / pipeline / cli
  m.def("synthesize", [](const std::filesystem::path& config, const std::filesystem::path& out_dir) {
    const auto cfg = load_scenario_config(config);
    const auto bundle = synth::generate_scenario(cfg);
    synth::write_bundle(bundle, cfg, out_dir);
    const auto pipeline_cfg = to_json(bundle_pipeline_config(bundle, cfg));
    std::ofstream(out_dir / "pipeline.json") << pipeline_cfg.dump(2) << '\n';
    return pipeline_cfg.dump();
  });
  m.def("run_pipeline",
        [](const std::filesystem::path& config, const std::optional<std::filesystem::path>& out_dir) {
          std::ifstream in(config);
          if (!in) throw Error("cli", "unreadable file: " + config.string());
          auto cfg = pipeline_config_from_json(nlohmann::json::parse(in), config.parent_path());
          if (out_dir) cfg.output_dir = *out_dir;
          py::gil_scoped_release release;
          return pipeline::run_pipeline(cfg).dump();
        },
        py::arg("config"), py::arg("output_dir") = py::none());
  m.def("cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
