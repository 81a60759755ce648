#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "grushin/cli.hpp"

using grushin::cli::run;
using grushin::cli::RunResult;
using Json = nlohmann::ordered_json;

namespace {

const std::string kSamples = GRUSHIN_SAMPLES;

std::string sample(const std::string& rel) { return kSamples + "/" + rel; }

Json body(const RunResult& r) {
  EXPECT_FALSE(r.out.empty()) << r.err;
  return Json::parse(r.out);
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto p = std::filesystem::temp_directory_path() / ("grushin_cli_" + std::to_string(::getpid()) + "_" + name);
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST(Cli, ClassifySquares) {
  const RunResult r = run({"classify", "squares", "--k1", "3", "--k2", "4"});
  EXPECT_EQ(r.code, 0);
  const Json j = body(r);
  EXPECT_EQ(j["status"], "Hypoelliptic");
  EXPECT_EQ(j["loss"]["num"], 2);
  EXPECT_EQ(j["loss"]["den"], 1);
  EXPECT_TRUE(j.contains("provenance"));
}

TEST(Cli, SpectrumHarmonic) {
  const RunResult r = run({"spectrum", "--h", "1", "--c2", "1", "--c1", "0", "--count", "3"});
  EXPECT_EQ(r.code, 0);
  const Json j = body(r);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(j["eigenvalues"][k][0].get<double>(), 2 * k + 1, 1e-4 * (2 * k + 1));
  EXPECT_EQ(j["provenance"]["grid_n"], 2047);
}

TEST(Cli, KohnEvenRoot) {
  const Json j = body(run({"classify", "kohn", "--g", "x^2", "--f", "x^2"}));
  EXPECT_EQ(j["loss"]["num"], 4);
  EXPECT_EQ(j["loss"]["den"], 3);
}

TEST(Cli, ExitCodeContract) {
  EXPECT_EQ(run({"classify", "gilioli", "--h", "3", "--beta", "-3,0,2", "--xi", "1"}).code, 0);
  EXPECT_EQ(run({"classify", "gilioli", "--h", "3", "--beta", "-3,1,1"}).code, 2);
  EXPECT_EQ(run({"classify", "tangential", "--model", sample("models/tangential_r3.json")}).code, 0);
  EXPECT_EQ(run({"classify", "tangential", "--model", sample("models/tangential_r3_flipped.json")}).code, 0);
  EXPECT_EQ(run({"check-symbol", "--file", sample("fields/tangential_sign.json"), "--mode", "tangential"}).code, 0);
  EXPECT_EQ(run({"classify", "kohn", "--g", "x^(1/2)"}).code, 1);
  EXPECT_EQ(run({"classify", "squares", "--k1", "3"}).code, 1);
  EXPECT_EQ(run({"reduce", "--model", "/nonexistent/model.json"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
}

TEST(Cli, UndeterminedTangentialSign) {
  const auto f = temp_file("real.json", R"({"h":3,"m_prime":1,"principal":"e1 + y1*abs_eta","y0":[0,0],"eta0":[0,1],"gap_clause":true})");
  const RunResult r = run({"check-symbol", "--file", f.string(), "--mode", "tangential"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(body(r)["outcome"], "undetermined");
  std::filesystem::remove(f);
}

TEST(Cli, ParseErrorsCarryPositions) {
  const RunResult r = run({"classify", "kohn", "--g", "x^2 + * x"});
  EXPECT_EQ(r.code, 1);
  const Json e = Json::parse(r.err);
  EXPECT_EQ(e["kind"], "parse");
  EXPECT_EQ(e["offset"], 6);
  EXPECT_TRUE(e.contains("provenance"));

  const auto bad = temp_file("bad.json", "{\"preset\": \"squares\",\n \"k1\": 3,, }");
  const RunResult j = run({"reduce", "--model", bad.string()});
  EXPECT_EQ(j.code, 1);
  EXPECT_EQ(Json::parse(j.err)["kind"], "parse");
  std::filesystem::remove(bad);

  EXPECT_EQ(Json::parse(run({"classify", "kohn", "--g", "i*x"}).err)["kind"], "mode-violation");
}

TEST(Cli, AccuracyFailureReportsBothGrids) {
  const RunResult r = run({"--grid-n", "17", "spectrum", "--h", "1", "--T", "40", "--count", "3"});
  EXPECT_EQ(r.code, 1);
  const Json e = Json::parse(r.err);
  EXPECT_EQ(e["kind"], "accuracy");
  EXPECT_TRUE(e.contains("coarse"));
  EXPECT_TRUE(e.contains("fine"));
}

TEST(Cli, ToleranceBounds) {
  EXPECT_EQ(run({"--tol", "1e-20", "classify", "squares", "--k1", "1", "--k2", "1"}).code, 1);
  EXPECT_EQ(run({"--jobs", "0", "classify", "squares", "--k1", "1", "--k2", "1"}).code, 1);
}

TEST(Cli, Deterministic) {
  const std::vector<std::string> args{"reduce", "--model", sample("models/squares_3_4.json")};
  const RunResult a = run(args), b = run(args);
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const Json j = body(a);
  EXPECT_EQ(j["orders"][2], "0");
}

TEST(Cli, ReduceAndAssemble) {
  const Json k = body(run({"reduce", "--model", sample("models/kohn_h3_k1.json")}));
  EXPECT_NEAR(k["ell"][2][0].get<double>(), 5.0, 1e-3);
  const RunResult a = run({"classify", "assemble", "--model", sample("models/gilioli_h2.json")});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(body(a)["status"], "HypoellipticMinimalLoss");
}

TEST(Cli, CheckSymbolModes) {
  const RunResult pass = run({"check-symbol", "--file", sample("fields/h2_pass.json"), "--c", "0.5"});
  EXPECT_EQ(pass.code, 0);
  EXPECT_TRUE(body(pass)["pass"].get<bool>());
  const RunResult fail = run({"check-symbol", "--file", sample("fields/h2_fail.json")});
  EXPECT_EQ(fail.code, 0);
  EXPECT_FALSE(body(fail)["pass"].get<bool>());
  EXPECT_TRUE(body(fail).contains("violation"));
  const RunResult h3 = run({"check-symbol", "--file", sample("fields/h3_bracket.json"), "--mode", "h3"});
  EXPECT_EQ(h3.code, 0);
  EXPECT_EQ(run({"check-symbol", "--file", sample("fields/h2_pass.json"), "--c", "-1"}).code, 1);
}

TEST(Cli, ProbeLoss) {
  const RunResult r = run({"probe-loss", "--file", sample("fields/probe_h2.json"), "--t", "1:256"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(body(r)["slope"].get<double>(), 1.0 / 3.0, 0.1);
}

TEST(Cli, CsvAndOutputFile) {
  const RunResult csv = run({"--format", "csv", "spectrum", "--h", "1", "--count", "2"});
  EXPECT_EQ(csv.code, 0);
  EXPECT_EQ(csv.out.rfind("j,re,im,error\n", 0), 0u);
  EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 3);
  EXPECT_EQ(run({"--format", "csv", "classify", "squares", "--k1", "1", "--k2", "2"}).out, "status,loss\nHypoelliptic,2\n");
  EXPECT_EQ(run({"--format", "csv", "check-symbol", "--file", sample("fields/h2_pass.json")}).code, 1);

  const auto path = std::filesystem::temp_directory_path() / ("grushin_cli_out_" + std::to_string(::getpid()) + ".json");
  const RunResult o = run({"--output", path.string(), "classify", "even-example", "--h", "2", "--k", "1"});
  EXPECT_EQ(o.code, 0);
  EXPECT_TRUE(o.out.empty());
  std::ifstream in(path);
  const Json j = Json::parse(in);
  EXPECT_EQ(j["loss"]["num"], 5);
  std::filesystem::remove(path);
}

TEST(Sweep, KernelGridTwelveLines) {
  const RunResult r = run({"--jobs", "3", "sweep", "--grid", sample("sweeps/kernels.jsonl"), "--command", "critical-b1+spectrum"});
  EXPECT_EQ(r.code, 0) << r.err;
  std::stringstream ss(r.out);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    const Json j = Json::parse(line);
    EXPECT_EQ(j["index"], n);
    EXPECT_TRUE(j["ok"].get<bool>()) << line;
    EXPECT_TRUE(j["result"]["certified"].get<bool>()) << line;
    ++n;
  }
  EXPECT_EQ(n, 12);
  const RunResult serial = run({"--jobs", "1", "sweep", "--grid", sample("sweeps/kernels.jsonl")});
  EXPECT_EQ(serial.out, r.out);
}

TEST(Sweep, EmptyGrid) {
  const auto f = temp_file("empty.jsonl", "\n\n");
  const RunResult r = run({"sweep", "--grid", f.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::filesystem::remove(f);
}

TEST(Sweep, MalformedRowReportedInline) {
  const auto f = temp_file("rows.jsonl", "{\"k1\":3,\"k2\":4}\n{\"k1\":3,\n{\"k1\":2,\"k2\":5}\n{\"k1\":\"x\",\"k2\":1}\n");
  const RunResult r = run({"--jobs", "2", "sweep", "--grid", f.string(), "--command", "classify-squares"});
  EXPECT_EQ(r.code, 0);
  std::vector<Json> rows;
  std::stringstream ss(r.out);
  for (std::string line; std::getline(ss, line);) rows.push_back(Json::parse(line));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_TRUE(rows[0]["ok"].get<bool>());
  EXPECT_FALSE(rows[1]["ok"].get<bool>());
  EXPECT_EQ(rows[1]["error"]["kind"], "parse");
  EXPECT_EQ(rows[2]["result"]["loss"]["den"], 3);
  EXPECT_FALSE(rows[3]["ok"].get<bool>());
  std::filesystem::remove(f);
}

TEST(Sweep, UnknownCommandAndCsvRejected) {
  EXPECT_EQ(run({"sweep", "--grid", sample("sweeps/kernels.jsonl"), "--command", "nope"}).code, 1);
  EXPECT_EQ(run({"--format", "csv", "sweep", "--grid", sample("sweeps/kernels.jsonl")}).code, 1);
}

TEST(Settings, JobsFromEnvironment) {
  ::setenv("GRUSHIN_LAB_JOBS", "5", 1);
  EXPECT_EQ(grushin::cli::default_jobs(), 5u);
  ::setenv("GRUSHIN_LAB_JOBS", "garbage", 1);
  EXPECT_EQ(grushin::cli::default_jobs(), 1u);
  ::unsetenv("GRUSHIN_LAB_JOBS");
  EXPECT_EQ(grushin::cli::default_jobs(), 1u);
}
