#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mkinf/cli.hpp"
#include "mkinf/io.hpp"

using namespace mkinf;
namespace fs = std::filesystem;

namespace {

const std::string kData = MKINF_DATA_DIR;

struct Outcome {
  int status;
  nlohmann::json stdout_json;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mkinf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  nlohmann::json j;
  if (!out.str().empty()) j = nlohmann::json::parse(out.str());
  return {status, j};
}

std::string scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mkinf_cli_test_" + name);
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("barycenter of the constant curve") {
  const auto out = scratch("constant");
  const auto r = invoke({"barycenter", "--curve", kData + "/constant.json", "--schedule", "4,8", "--out", out});
  REQUIRE(r.status == 0);
  const auto bary = io::measure_from_json(io::read_json_file(out + "/barycenter.json"));
  const auto curve = io::curve_from_json(io::read_json_file(kData + "/constant.json"));
  CHECK(std::sqrt(w2(bary, curve.sample(0).measure).cost) <= 1e-9);
  const auto csv = slurp(out + "/convergence.csv");
  CHECK(csv.rfind("N,objective,w2_step,fixed_point_residual\n", 0) == 0);
  CHECK(count(csv, "\n") == 3);
}

TEST_CASE("validate on the tiny instance directory") {
  const auto out = scratch("tiny");
  const auto r = invoke({"validate", "--instances", kData + "/tiny", "--out", out});
  CHECK(r.status == 0);
  const auto report = io::read_json_file(out + "/validation.json");
  CHECK(report.at("passed").get<bool>());
  for (const auto& inst : report.at("instances"))
    for (const auto& c : inst.at("checks"))
      if (!c.contains("skipped")) CHECK(c.contains("residual"));
}

TEST_CASE("process on the Dirac line approaches 1/6") {
  const auto out = scratch("dirac");
  const auto r = invoke({"process", "--curve", kData + "/dirac_line.json", "--schedule", "16", "--out", out});
  REQUIRE(r.status == 0);
  const auto report = io::read_json_file(out + "/cost_report.json");
  CHECK(std::abs(report.at("mk_cost").get<double>() - 1.0 / 6) <= 2.0 / 16);
  CHECK(fs::exists(out + "/paths.csv"));
  CHECK(fs::exists(out + "/couplings.csv"));
  CHECK(slurp(out + "/paths.csv").rfind("atom,weight,t,x0\n", 0) == 0);
}

TEST_CASE("identical config and seed give byte-identical JSON") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    REQUIRE(invoke({"process", "--curve", kData + "/translation_2d.json", "--schedule", "2,4,8", "--out", dir}).status == 0);
    REQUIRE(invoke({"validate", "--seed", "99", "--count", "8", "--out", dir}).status == 0);
    REQUIRE(invoke({"plot", "--process", dir + "/process.json", "--out", dir}).status == 0);
  }
  for (const char* f : {"process.json", "cost_report.json", "validation.json", "paths.csv", "couplings.csv"})
    CHECK(slurp(a + "/" + f) == slurp(b + "/" + f));
  const auto sa = slurp(a + "/paths.svg"), sb = slurp(b + "/paths.svg");
  CHECK(count(sa, "<polyline") == count(sb, "<polyline"));
  CHECK(count(sa, "<polyline") > 0);

  const auto c = scratch("det_c");
  REQUIRE(invoke({"validate", "--seed", "100", "--count", "8", "--out", c}).status == 0);
  CHECK(slurp(a + "/validation.json") != slurp(c + "/validation.json"));
}

TEST_CASE("reroot through the CLI keeps the cost") {
  const auto out = scratch("reroot");
  REQUIRE(invoke({"process", "--curve", kData + "/translation_2d.json", "--schedule", "4", "--out", out}).status == 0);
  const auto r = invoke({"reroot", "--process", out + "/process.json", "--t0", "0.5", "--out", out});
  REQUIRE(r.status == 0);
  CHECK(std::abs(r.stdout_json.at("mk_cost_before").get<double>() - r.stdout_json.at("mk_cost_after").get<double>()) <= 1e-9);
  const auto proc = io::process_from_json(io::read_json_file(out + "/rerooted_process.json"));
  CHECK(proc.nodes() == 4);
}

TEST_CASE("usage errors exit with status 2") {
  CHECK(invoke({}).status == 2);
  CHECK(invoke({"barycenter", "--curve", kData + "/constant.json"}).status == 2);
  CHECK(invoke({"barycenter", "--curve", kData + "/constant.json", "--schedule", "4", "--strategy", "best"}).status == 2);
  CHECK(invoke({"barycenter", "--curve", kData + "/constant.json", "--schedule", "4", "--tol", "nope=1"}).status == 2);
  CHECK(invoke({"barycenter", "--curve", kData + "/constant.json", "--schedule", "4", "--tol", "certify_tol=-1"}).status == 2);
  CHECK(invoke({"reroot", "--process", "x.json"}).status == 2);
  CHECK(invoke({"frobnicate"}).status == 2);
}

TEST_CASE("failures exit with status 1 and an error object") {
  const auto out = scratch("fail");
  auto r = invoke({"barycenter", "--curve", out + "/missing.json", "--schedule", "4", "--out", out});
  CHECK(r.status == 1);
  CHECK(r.stdout_json.at("kind") == "parse_error");

  fs::create_directories(out);
  std::ofstream(out + "/broken.json") << "{\"samples\": [";
  r = invoke({"barycenter", "--curve", out + "/broken.json", "--schedule", "4", "--out", out});
  CHECK(r.status == 1);
  CHECK(r.stdout_json.at("kind") == "parse_error");

  r = invoke({"validate", "--instances", kData + "/tiny", "--tol", "certify_tol=1e-30", "--out", out});
  CHECK(r.status == 1);
  CHECK(r.stdout_json.at("kind") == "validation_failure");

  // prefer_ak on a curve with no density flags
  r = invoke({"barycenter", "--curve", kData + "/constant.json", "--schedule", "4", "--strategy", "prefer_ak", "--out", out});
  CHECK(r.status == 1);
}

TEST_CASE("JSON round trips") {
  const auto curve = io::curve_from_json(io::read_json_file(kData + "/translation_2d.json"));
  const auto again = io::curve_from_json(io::to_json(curve));
  REQUIRE(again.size() == curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    CHECK(again.sample(k).t == curve.sample(k).t);
    CHECK(again.sample(k).measure.points() == curve.sample(k).measure.points());
    CHECK(again.sample(k).flags.has_value() == curve.sample(k).flags.has_value());
  }
  CHECK(io::to_json(again) == io::to_json(curve));

  const DiscreteMeasure mu({{0.1, 0.2}, {0.3, 0.4}}, {0.25, 0.75});
  const auto back = io::measure_from_json(io::to_json(mu));
  CHECK(back.points() == mu.points());
  CHECK(back.weights() == mu.weights());
  CHECK_THROWS(io::measure_from_json(nlohmann::json{{"dim", 3}, {"points", {{0.0, 1.0}}}, {"weights", {1.0}}}));
  CHECK_THROWS(io::measure_from_json(nlohmann::json{{"points", {{0.0}}}}));
}
