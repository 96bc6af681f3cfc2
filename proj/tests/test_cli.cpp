#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "lulcc/cli.hpp"
#include "lulcc/pipeline.hpp"
#include "lulcc/synth.hpp"
#include "support.hpp"

using namespace lulcc;
using namespace lulcc::testing;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

// Small bundle on disk; the epochs mirror the shipped scenario at a size that
// keeps the test fast.
void write_small_bundle(const std::filesystem::path& dir) {
  const json cfg = {
      {"nrows", 40},
      {"ncols", 40},
      {"years", 6},
      {"epochs",
       {{{"transitions", 3}, {"trans", {{0.90, 0.05, 0.05}, {0.04, 0.90, 0.06}, {0.06, 0.06, 0.88}}}},
        {{"transitions", 2}, {"trans", {{0.93, 0.04, 0.03}, {0.02, 0.96, 0.02}, {0.04, 0.05, 0.91}}}}}},
      {"factor_names", {"a", "b"}},
      {"emission_means", {{1, 2}, {5, 6}, {3, 1}}},
      {"emission_vars", {{0.05, 0.05}, {0.05, 0.05}, {0.05, 0.05}}},
      {"road_rows", {12}},
      {"road_cols", {25}},
      {"water", {{30, 0, 39, 6}}},
      {"seed", 5}};
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "scenario.json") << cfg.dump();
  REQUIRE(run({"synth", "--config", (dir / "scenario.json").string(), "--out", (dir / "bundle").string()}).code == 0);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("unknown subcommand exits 2 with usage") {
  const auto r = run({"frobnicate"});
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown subcommand") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 2);
  CHECK(run({"mc-estimate", "--t0", "x.asc"}).code == 2);
}

TEST_CASE("help exits 0") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("pipeline") != std::string::npos);
}

TEST_CASE("module errors exit 1 with a json line") {
  const auto r = run({"mc-estimate", "--t0", "/nonexistent/a.asc", "--t1", "/nonexistent/b.asc", "--out", "/tmp/x.json"});
  CHECK(r.code == 1);
  const auto line = json::parse(r.err.substr(0, r.err.find('\n')));
  CHECK(line["error"]["module"] == "grid");
}

TEST_CASE("markov subcommands") {
  TempDir dir("cli");
  write_ascii_grid(cat_grid(1, 4, {1, 1, 2, 3}), dir / "t0.asc");
  write_ascii_grid(cat_grid(1, 4, {1, 2, 2, 3}), dir / "t1.asc");
  REQUIRE(run({"mc-estimate", "--t0", (dir / "t0.asc").string(), "--t1", (dir / "t1.asc").string(), "--out",
               (dir / "m.json").string()})
              .code == 0);
  const auto m = read_json(dir / "m.json");
  CHECK(m["probs"][0][1] == 0.5);

  REQUIRE(run({"mc-extrapolate", "--matrix", (dir / "m.json").string(), "--power", "2", "--out",
               (dir / "m2.json").string()})
              .code == 0);
  CHECK(read_json(dir / "m2.json")["probs"][0][0] == 0.25);
  CHECK(run({"mc-extrapolate", "--matrix", (dir / "m.json").string(), "--out", (dir / "m3.json").string()}).code == 1);
}

TEST_CASE("radiometry subcommands") {
  TempDir dir("cli");
  write_ascii_grid(cont_grid(1, 2, {0, 254}), dir / "dn.asc");
  std::ofstream(dir / "cal.json") << R"({"l_min": -1.5, "l_max": 20.0, "esun": 1500, "sun_zenith_deg": 30, "earth_sun_distance_au": 1.0})";
  REQUIRE(run({"radiometry", "radiance", "--in", (dir / "dn.asc").string(), "--calibration",
               (dir / "cal.json").string(), "--out", (dir / "l.asc").string()})
              .code == 0);
  const auto l = read_continuous_grid(dir / "l.asc");
  CHECK(l[0] == -1.5);
  CHECK(l[1] == 20.0);
  CHECK(run({"radiometry", "reflectance", "--in", (dir / "l.asc").string(), "--calibration",
             (dir / "cal.json").string(), "--out", (dir / "r.asc").string()})
            .code == 0);
}

TEST_CASE("model subcommands chain together") {
  TempDir dir("cli");
  write_small_bundle(dir.path());
  const auto b = dir / "bundle";
  const std::string first = (b / "lc_2001.asc").string(), second = (b / "lc_2002.asc").string();
  const std::string base = (b / "lc_2001.asc").string(), cal = (b / "lc_2004.asc").string();
  const std::string target = (b / "lc_2006.asc").string(), water = (b / "water_mask.asc").string();
  const std::string d1 = "slope_suitability=" + (b / "slope_suitability.asc").string();
  const std::string d2 = "road_proximity=" + (b / "road_proximity.asc").string();

  REQUIRE(run({"mc-estimate", "--t0", first, "--t1", second, "--mask", water, "--out", (dir / "init.json").string()}).code == 0);
  const auto trained = run({"hmm-train", "--factors", (b / "factors.csv").string(), "--init-matrix",
                            (dir / "init.json").string(), "--freq-grid", base, "--mask", water, "--out",
                            (dir / "params.json").string(), "--trace", (dir / "trace.json").string()});
  REQUIRE(trained.code == 0);
  CHECK(read_json(dir / "trace.json").size() >= 1);

  REQUIRE(run({"mc-estimate", "--t0", base, "--t1", cal, "--mask", water, "--out", (dir / "cal.json").string()}).code == 0);
  REQUIRE(run({"lr-fit", "--t0", base, "--t1", cal, "--driver", d1, "--driver", d2, "--mask", water, "--out-dir",
               (dir / "models").string()})
              .code == 0);
  std::vector<std::string> submodels;
  for (const auto& e : std::filesystem::directory_iterator(dir / "models")) submodels.push_back(e.path().string());
  std::sort(submodels.begin(), submodels.end());
  REQUIRE(submodels.size() == 4);

  auto predict = [&](std::vector<std::string> extra, const std::string& out) {
    std::vector<std::string> args{"predict", "--t0", cal, "--driver", d1, "--driver", d2, "--mask", water,
                                  "--out", out};
    for (const auto& s : submodels) {
      args.push_back("--submodel");
      args.push_back(s);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  };
  const auto hmm = predict({"--quantum", "hmm", "--params", (dir / "params.json").string()}, (dir / "p_hmm.asc").string());
  REQUIRE(hmm.code == 0);
  const auto mc = predict({"--quantum", "mc", "--matrix", (dir / "cal.json").string(), "--base-span", "3",
                           "--target-span", "2"},
                          (dir / "p_mc.asc").string());
  REQUIRE(mc.code == 0);
  CHECK(predict({"--quantum", "hmm"}, (dir / "x.asc").string()).code == 1);

  // --quantum hmm uses the learned transition probabilities directly.
  const auto learned = load_hmm_params(dir / "params.json").trans;
  const auto q = json::parse(hmm.out)["quantum"];
  const auto t0 = read_categorical_grid(cal);
  const auto expected = lcm::compute_quantum(learned, t0, read_categorical_grid(water), default_allowed_transitions());
  CHECK(q == to_json(expected));

  REQUIRE(run({"validate", "--actual", target, "--predicted", (dir / "p_hmm.asc").string(), "--mask", water,
               "--report", (dir / "v.json").string(), "--overlay", (dir / "v.ppm").string()})
              .code == 0);
  const auto v = read_json(dir / "v.json");
  CHECK(v.contains("overall_accuracy"));
  CHECK(v.contains("confusion"));
  CHECK(std::filesystem::file_size(dir / "v.ppm") > 40 * 40 * 3);
}

TEST_CASE("pipeline runs are bit-identical and flags override the config") {
  TempDir dir("cli");
  write_small_bundle(dir.path());
  const auto cfg = (dir / "bundle" / "pipeline.json").string();
  REQUIRE(run({"pipeline", "--config", cfg, "--out", (dir / "r1").string()}).code == 0);
  REQUIRE(run({"pipeline", "--config", cfg, "--out", (dir / "r2").string()}).code == 0);
  const auto a = read_json(dir / "r1" / "report.json");
  const auto b = read_json(dir / "r2" / "report.json");
  CHECK(a["artifacts"] == b["artifacts"]);
  CHECK(a["config_hash"] == b["config_hash"]);
  for (const auto& [name, hash] : a["artifacts"].items())
    CHECK(sha256_file(dir / "r1" / name) == hash.get<std::string>());

  REQUIRE(run({"pipeline", "--config", cfg, "--out", (dir / "r3").string(), "--bins", "5"}).code == 0);
  const auto c = read_json(dir / "r3" / "report.json");
  CHECK(c["config_hash"] != a["config_hash"]);
}

}  // TEST_SUITE
