#include "fairpos/dgp.hpp"
#include "fairpos/error.hpp"
#include "fairpos/io.hpp"
#include "fairpos/report.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fairpos;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected fairpos::Error");
  return ErrorCode::BadConfig;
}

std::string small_csv() {
  std::ostringstream os;
  os << "x,arm,y\n";
  const SampledData s = sample(dgps::two_atom(), 60, 3);
  for (std::size_t i = 0; i < s.n(); ++i) {
    os << s.covariates(static_cast<Eigen::Index>(i), 0) << ',' << (s.treatments[i] == 0 ? "north" : "south") << ','
       << s.outcomes[static_cast<Eigen::Index>(i)] << '\n';
  }
  return os.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fairpos_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("csv parsing") {
  const CsvTable t = parse_csv("\xEF\xBB\xBF" "a,b,\"c,d\"\r\n1,\"x \"\"y\"\"\",3\r\n\n4,5,6");
  CHECK(t.header == std::vector<std::string>{"a", "b", "c,d"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x \"y\"");
  CHECK(t.rows[1][2] == "6");
  CHECK(code_of([] { parse_csv("a,b\n1\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_csv("a,b\n\"1,2\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_csv(""); }) == ErrorCode::ParseError);
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("plain") == "plain");
}

TEST_CASE("column selection") {
  const CsvTable t = parse_csv("x1,x2,arm,y\n1,2,a,0.5\n3,4,b,1.5\n");
  const RawRows raw = select_columns(t, "arm", "y", {"x2", "x1"});
  CHECK(raw.covariates(0, 0) == 2.0);
  CHECK(raw.covariates(1, 1) == 3.0);
  CHECK(raw.treatments == std::vector<std::string>{"a", "b"});
  CHECK(code_of([&] { select_columns(t, "arm", "missing", {"x1"}); }) == ErrorCode::SchemaError);
  CHECK(code_of([&] { select_columns(t, "arm", "y", {"y"}); }) == ErrorCode::SchemaError);
  const CsvTable bad = parse_csv("x,arm,y\nfoo,a,1\n");
  CHECK(code_of([&] { select_columns(bad, "arm", "y", {"x"}); }) == ErrorCode::ParseError);
}

TEST_CASE("family specs") {
  const FamilySpec a = parse_family_spec("exp_tilt:0.9", 0.5);
  CHECK(a.tag == FamilyTag::exp_tilt);
  CHECK(a.delta == 0.9);
  CHECK(parse_family_spec("multiplicative", 0.25).delta == 0.25);
  CHECK(code_of([] { parse_family_spec("tsm:abc", 0.5); }) == ErrorCode::BadConfig);
  CHECK(code_of([] { parse_family_spec("exp_tilt:2", 0.5); }) == ErrorCode::BadConfig);
  CHECK(default_family_specs().size() == 5);
}

TEST_CASE("config file applies under flags") {
  AnalysisRequest req;
  apply_config_json(nlohmann::json::parse(R"({"k": 10, "folds": 3, "families": ["tsm", {"tag": "exp_tilt", "delta": 0.7}]})"),
                    req);
  CHECK(req.config.smoothing_k == 10.0);
  CHECK(req.config.folds == 3);
  REQUIRE(req.families.size() == 2);
  CHECK(req.families[1].delta == 0.7);
  CHECK(code_of([&] { apply_config_json(nlohmann::json::parse(R"({"nope": 1})"), req); }) ==
        ErrorCode::SchemaError);
  CHECK(code_of([&] { apply_config_json(nlohmann::json::parse(R"({"k": "x"})"), req); }) == ErrorCode::SchemaError);
  const auto echo = config_to_json(req);
  CHECK(echo.at("k") == 10.0);
  CHECK(echo.at("families").size() == 2);
}

TEST_CASE("analysis report shape with string labels") {
  const fs::path dir = temp_dir("analysis");
  write_atomic(dir / "in.csv", small_csv());
  AnalysisRequest req;
  req.input = (dir / "in.csv").string();
  req.treatment = "arm";
  req.outcome = "y";
  req.covariates = {"x"};
  req.families = {{FamilyTag::tsm, 0.0}};
  req.config.seed = 4;
  const AnalysisResult res = run_analysis(req);
  const auto j = to_json(res);
  CHECK(j.at("schema_version") == kSchemaVersion);
  CHECK(j.at("label_map").size() == 2);
  CHECK(j.at("label_map")[0].at("label") == "north");
  REQUIRE(j.at("families").size() == 1);
  CHECK(j.at("families")[0].at("estimates").size() == 2);
  CHECK(j.at("families")[0].at("contrasts").size() == 1);
  CHECK(j.at("families")[0].at("diagnostics").contains("zero_propensity_cells"));
  CHECK(j.contains("runtime_ms"));
  const std::string table = render_table(res);
  CHECK(table.find("[tsm]") != std::string::npos);
  CHECK(table.find("north") != std::string::npos);
  const std::string plot = plot_csv(res, res.families[0]);
  CHECK(plot.rfind("label,psi,se,ci_lo,ci_hi,observed_mean\n", 0) == 0);

  req.benchmark = "south";
  const AnalysisResult res2 = run_analysis(req);
  CHECK(res2.benchmark == 1);
  CHECK(res2.families[0].contrasts[0].estimate ==
        res2.families[0].estimates.psi_hat[1] - res2.families[0].estimates.psi_hat[0]);
  req.benchmark = "west";
  CHECK(code_of([&] { run_analysis(req); }) == ErrorCode::BadLabel);
}

TEST_CASE("report is reproducible apart from timing") {
  const fs::path dir = temp_dir("repro");
  write_atomic(dir / "in.csv", small_csv());
  AnalysisRequest req;
  req.input = (dir / "in.csv").string();
  req.treatment = "arm";
  req.outcome = "y";
  req.covariates = {"x"};
  auto strip = [](nlohmann::json j) {
    j.erase("runtime_ms");
    return j.dump();
  };
  const std::string a = strip(to_json(run_analysis(req)));
  const std::string b = strip(to_json(run_analysis(req)));
  req.config.threads = 4;
  const std::string c = strip(to_json(run_analysis(req)));
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("missing outcome column is a schema error") {
  const fs::path dir = temp_dir("schema");
  write_atomic(dir / "in.csv", small_csv());
  AnalysisRequest req;
  req.input = (dir / "in.csv").string();
  req.treatment = "arm";
  req.outcome = "readmit";
  req.covariates = {"x"};
  CHECK(code_of([&] { run_analysis(req); }) == ErrorCode::SchemaError);
}

TEST_CASE("atomic write replaces the target and leaves no temp file") {
  const fs::path dir = temp_dir("atomic");
  write_atomic(dir / "f.txt", "one");
  write_atomic(dir / "f.txt", "two");
  std::ifstream in(dir / "f.txt");
  std::string s;
  std::getline(in, s);
  CHECK(s == "two");
  CHECK_FALSE(fs::exists(dir / "f.txt.tmp"));
}

TEST_CASE("experiment reports serialize") {
  SimulationReport r;
  r.experiment = "demo";
  r.add_gate("g", 0.5, "<= 1", true);
  r.summary["x"] = 1.0;
  const auto j = to_json(r, 12.0);
  CHECK(j.at("pass") == true);
  CHECK(j.at("gates")[0].at("name") == "g");
  CHECK(j.at("runtime_ms") == 12.0);
  CHECK(render_table(r).find("pass") != std::string::npos);
}
