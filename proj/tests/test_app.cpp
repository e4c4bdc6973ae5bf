#include <filesystem>
#include <fstream>

#include <doctest.h>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "homsusp/app.hpp"
#include "homsusp/error.hpp"
#include "homsusp/io.hpp"
#include "homsusp/verify.hpp"

using namespace homsusp;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("homsusp_app_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string write_config(const fs::path& dir, const std::string& text) {
  fs::create_directories(dir);
  const fs::path p = dir / "config.toml";
  std::ofstream(p) << text;
  return p.string();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

json read_json(const fs::path& p) { return json::parse(read_text(p.string())); }

const char* kSmall = R"(
seed = 3
[cell]
h = "1/8"
[geometry]
h_per_cell = 0.125
eps = "1/2"
[macro]
h = "1/16"
[verify]
eps = ["1/2", "1/4"]
seed_count = 1
dilute_phi = [0.01, 0.02]
dilute_h = ["1/8", "1/16"]
[forces]
z = [[0.0, 0.0], [1.0, 2.0]]
ergodic_eps = "1/16"
ergodic_seeds = 3
samples = 64
)";

}  // namespace

TEST_CASE("empty config resolves to the defaults and round-trips") {
  const RunConfig c = parse_config("");
  CHECK(c.seed == 1);
  CHECK(c.dim == 2);
  CHECK(c.geometry.shape == "disk");
  CHECK(c.geometry.phi == 0.1);
  CHECK(c.verify.eps == std::vector<std::string>{"1/4", "1/8", "1/16"});
  CHECK(c.verify.seed_count == 3);
  CHECK(c.geometry.h_per_cell == 1.0 / 16);
  const std::string text = resolved_config(c);
  const RunConfig again = parse_config(text);
  CHECK(resolved_config(again) == text);
  for (const char* key : {"[geometry]", "[fem]", "[cell]", "[forces]", "[macro]", "[macro.picard]", "[micro.picard]",
                          "[verify]", "seed = 1"})
    CHECK(text.find(key) != std::string::npos);
}

TEST_CASE("config values: fractions, numbers and lists") {
  const RunConfig c = parse_config(R"(
seed = 42
jobs = 2
[geometry]
shape = "ellipse"
aspect = 0.5
phi = 0.2
eps = 0.125
h_per_cell = "1/32"
[verify]
eps = ["1/4", 0.125]
[forces]
profile = "linear"
b = [1, -2]
weight_cos = [0.25]
)");
  CHECK(c.seed == 42);
  CHECK(c.jobs == 2);
  CHECK(c.geometry.eps == "1/8");
  CHECK(c.geometry.h_per_cell == 1.0 / 32);
  CHECK(c.verify.eps == std::vector<std::string>{"1/4", "1/8"});
  CHECK(c.forces.b == std::array<double, 2>{1.0, -2.0});
  CHECK(make_shape(c).kind == ShapeKind::Ellipse);
  const auto model = make_force_model(c);
  REQUIRE(model.has_value());
  CHECK(model->profile().kind == Profile::Kind::Linear);
  CHECK(model->weight().cos_coef == std::vector<double>{0.25});
}

TEST_CASE("unknown keys, wrong types and bad values are ConfigError") {
  CHECK(code_of([] { parse_config("sed = 1"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[geometry]\nphy = 0.1"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[macro.picard]\ntheta = 0.5\nomega = 1"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[solver]\ntol = 1"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("seed = \"one\""); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("jobs = 1.5"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[fem]\nsolver = \"cg\""); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("dim = 3"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[geometry]\nshape = \"star\""); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[forces]\nprofile = \"cubic\""); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[forces]\nweight_mean = 0.1\nweight_cos = [0.5]"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[macro.picard]\ntheta = 0"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("seed = [1"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[geometry]\nphi = 0.65"); }) == ErrorCode::ShapeTouchesBoundary);
  CHECK(code_of([] { load_config("/nonexistent/homsusp.toml"); }) == ErrorCode::ConfigError);
}

TEST_CASE("flag overrides") {
  RunConfig c = parse_config("seed = 3\njobs = 1");
  Overrides o;
  o.seed = 7;
  o.jobs = 4;
  o.out = "elsewhere";
  o.quiet = true;
  apply_overrides(c, o);
  CHECK(c.seed == 7);
  CHECK(c.jobs == 4);
  CHECK(c.out == "elsewhere");
  CHECK(c.quiet);
  Overrides three;
  three.dim = 3;
  CHECK(code_of([&] { apply_overrides(c, three); }) == ErrorCode::ConfigError);
}

TEST_CASE("exit codes, error JSON and SHA-256") {
  CHECK(exit_code_for(ErrorCode::ConfigError) == 2);
  CHECK(exit_code_for(ErrorCode::ShapeTouchesBoundary) == 2);
  CHECK(exit_code_for(ErrorCode::SolverDiverged) == 3);
  CHECK(exit_code_for(ErrorCode::PicardStalled) == 3);
  const json j = json::parse(error_json(TracedError(ErrorCode::PicardStalled, "stalled", {1.0, 0.5})));
  CHECK(j["error"] == "PicardStalled");
  CHECK(j["message"] == "stalled");
  CHECK(j["exit_code"] == 3);
  CHECK(j["trace"].size() == 2);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("dispatch: missing config and unknown command exit with 2") {
  Overrides quiet;
  quiet.quiet = true;
  CHECK(dispatch("tensor", "/nonexistent/config.toml", quiet) == 2);
  CHECK(dispatch("tensor", "", quiet) == 2);
  const fs::path dir = scratch("unknown");
  CHECK(dispatch("plot", write_config(dir, ""), quiet) == 2);
}

TEST_CASE("dispatch tensor: CSV matches the cell module, manifest hashes the artifacts") {
  const fs::path dir = scratch("tensor");
  Overrides o;
  o.out = (dir / "out").string();
  o.quiet = true;
  REQUIRE(dispatch("tensor", write_config(dir, kSmall), o) == 0);
  for (const char* f : {"tensor.csv", "basis.csv", "chi_1.vtk", "chi_2.vtk", "manifest.json", "resolved_config.toml"})
    CHECK(fs::exists(dir / "out" / f));
  const std::string csv = read_text((dir / "out" / "tensor.csv").string());
  CHECK(csv.rfind("# schema_version=1 table=tensor\nquantity,a,b,value\n", 0) == 0);

  const EffectiveTensor t = effective_tensor(build_cell_mesh(InclusionShape::disk(0.1), 1.0 / 8), 1.0).tensor;
  CHECK(csv.find("mu_star,2,2," + format_double(t.mu_star(1, 1)) + "\n") != std::string::npos);
  CHECK(csv.find("shear_viscosity,,," + format_double(t.mu_star(1, 1)) + "\n") != std::string::npos);

  const json m = read_json(dir / "out" / "manifest.json");
  CHECK(m["command"] == "tensor");
  CHECK(m["seed"] == 3);
  CHECK(m["versions"]["csv_schema"] == 1);
  for (const auto& e : m["outputs"])
    CHECK(e["sha256"] == sha256_hex(read_text((dir / "out" / e["file"].get<std::string>()).string())));
  CHECK(m["outputs"].size() == 4);
  const std::string echoed = read_text((dir / "out" / "resolved_config.toml").string());
  CHECK(echoed.find("h = 0.125") != std::string::npos);
  CHECK(m["inputs"]["resolved_config_sha256"].get<std::string>().size() == 64);
  for (const auto& entry : fs::directory_iterator(dir / "out"))
    CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
}

TEST_CASE("dispatch converge: --seed overrides the config and the resolved config reproduces the manifest") {
  const fs::path dir = scratch("converge");
  Overrides o;
  o.out = (dir / "first").string();
  o.seed = 7;
  o.quiet = true;
  REQUIRE(dispatch("converge", write_config(dir, kSmall), o) == 0);
  const json m = read_json(dir / "first" / "manifest.json");
  CHECK(m["seed"] == 7);
  const std::string csv = read_text((dir / "first" / "convergence.csv").string());
  CHECK(csv.find("\n1/2,7,") != std::string::npos);
  CHECK(csv.find("\n1/4,7,") != std::string::npos);
  CHECK(fs::exists(dir / "first" / "verdicts.csv"));

  Overrides again;
  again.out = (dir / "second").string();
  again.quiet = true;
  REQUIRE(dispatch("converge", (dir / "first" / "resolved_config.toml").string(), again) == 0);
  CHECK(read_text((dir / "second" / "manifest.json").string()) == read_text((dir / "first" / "manifest.json").string()));
}

TEST_CASE("dispatch: every command writes its table") {
  const fs::path dir = scratch("all");
  const std::string cfg = write_config(dir, kSmall);
  const std::vector<std::pair<std::string, std::string>> cases{
      {"cell", "cell.csv"}, {"fstar", "fstar.csv"}, {"ergodic", "ergodic.csv"}, {"macro", "macro.csv"},
      {"micro", "micro.csv"}, {"dilute", "dilute_fit.csv"}};
  for (const auto& [command, file] : cases) {
    Overrides o;
    o.out = (dir / command).string();
    o.quiet = true;
    CAPTURE(command);
    REQUIRE(dispatch(command, cfg, o) == 0);
    CHECK(fs::exists(dir / command / file));
    CHECK(read_json(dir / command / "manifest.json")["command"] == command);
  }
  const std::string fstar = read_text((dir / "fstar" / "fstar.csv").string());
  CHECK(fstar.find("z1,z2,f1,f2,half_width1,half_width2,samples\n") != std::string::npos);
  // f*(0) = 0 for the sqrt1p profile.
  CHECK(fstar.find("\n0,0,0,0,") != std::string::npos);
  CHECK(fs::exists(dir / "macro" / "u_star.vtk"));
  CHECK(fs::exists(dir / "cell" / "chi.vtk"));
}

TEST_CASE("dispatch: solver failure exits with 3 and writes error.json") {
  const fs::path dir = scratch("stall");
  const std::string cfg = write_config(dir, std::string(kSmall) + R"(
[macro.picard]
theta = 0.1
max_iterations = 2
tol = 1e-14
)");
  Overrides o;
  o.out = (dir / "out").string();
  o.quiet = true;
  CHECK(dispatch("macro", cfg, o) == 3);
  const json e = read_json(dir / "out" / "error.json");
  CHECK(e["error"] == "PicardStalled");
  CHECK(e["exit_code"] == 3);
  CHECK(!e["trace"].empty());
  CHECK_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("dispatch: bad strain is a config-class error") {
  const fs::path dir = scratch("strain");
  const std::string cfg = write_config(dir, std::string(kSmall) + "\n");
  RunConfig c = load_config(cfg);
  CHECK(c.cell.strain == std::array<double, 4>{0.0, 1.0, 1.0, 0.0});
  const std::string bad = write_config(dir / "bad", R"(
[cell]
h = "1/8"
strain = [1, 0, 0, 0]
)");
  Overrides o;
  o.out = (dir / "out").string();
  o.quiet = true;
  CHECK(dispatch("cell", bad, o) == 2);
  CHECK(read_json(dir / "out" / "error.json")["error"] == "NonTraceFreeStrain");
}
