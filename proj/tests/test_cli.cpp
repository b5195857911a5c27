#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

using json = nlohmann::json;

namespace {

struct run_result {
  int status = -1;
  std::string out;
};

run_result run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + " \"" CLI_BINARY "\" " + args + " 2>/dev/null";
  run_result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t k;
  while ((k = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, k);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string form_file(const std::string& name, const std::string& hessian) {
  auto path = std::filesystem::path(testing::TempDir()) / name;
  std::ofstream(path) << R"({"hessian": )" << hessian << "}";
  return path.string();
}

json parse(const run_result& r) {
  json j = json::parse(r.out);
  EXPECT_EQ(j.at("schema"), "circle-forms/1");
  return j;
}

const std::string sos4 = form_file("sos4.json", "[[2,0,0,0],[0,2,0,0],[0,0,2,0],[0,0,0,2]]");
const std::string sos2 = form_file("sos2.json", "[[2,0],[0,2]]");
const std::string hyp = form_file("hyp.json", "[[2,0],[0,-2]]");

}  // namespace

TEST(Cli, RepCountOfOne) {
  auto r = run("rep-count --form " + sos4 + " --n 1");
  ASSERT_EQ(r.status, 0);
  auto j = parse(r);
  EXPECT_EQ(j.at("count"), 8);
  EXPECT_EQ(j.at("command"), "rep-count");
}

TEST(Cli, MissingFormIsUsageError) {
  auto r = run("rep-count --n 1");
  EXPECT_EQ(r.status, 2);
  auto j = parse(r);
  EXPECT_EQ(j.at("error").at("kind"), "UsageError");
  EXPECT_TRUE(j.at("error").at("message").is_string());
}

TEST(Cli, FareyOrderFive) {
  auto r = run("farey --order 5");
  ASSERT_EQ(r.status, 0);
  auto j = parse(r);
  EXPECT_EQ(j.at("count"), 10);
  ASSERT_EQ(j.at("fractions").size(), 10u);
  EXPECT_EQ(j["fractions"][0]["a"], 0);
  EXPECT_EQ(j["fractions"][0]["q"], 1);
  auto csv = run("farey --order 5 --format csv");
  ASSERT_EQ(csv.status, 0);
  EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 11);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("nonsense").status, 2);
  EXPECT_EQ(run("farey --order 0").status, 2);
  EXPECT_EQ(run("rep-count --form /nonexistent.json --n 1").status, 2);
  EXPECT_EQ(run("rep-count --form " + hyp + " --n 1").status, 2);
  EXPECT_EQ(run("singular-integral --form " + sos2 + " --n 1 --scale 2").status, 2);  // B = infinity, 2 variables
  EXPECT_EQ(run("rep-count --form " + sos4 + " --n 1 --weighted --bump 1,1.5").status, 2);
  auto bad = form_file("bad.json", "[[1,0],[0,2]]");  // odd diagonal
  auto r = run("rep-count --form " + bad + " --n 1");
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(parse(r).at("error").at("kind"), "UsageError");
}

TEST(Cli, ComputationErrorExitsOne) {
  // modulus far above the enumeration guard
  auto r = run("expsum --kind gauss --form " + sos4 + " --q 5000 --d 1");
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(parse(r).at("error").at("kind"), "ComputationError");
}

TEST(Cli, EverySubcommandRoundTrips) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"farey --order 3", {"order", "count", "fractions"}},
      {"expsum --kind quadratic --d 1 --q 7", {"kind", "q", "value", "bound", "method"}},
      {"expsum --kind gauss --form " + sos2 + " --d 1 --q 5 --r 1,2", {"value", "bound"}},
      {"expsum --kind kappa --q 7 --a 1 --b 2 --parity 1 --method closed", {"value", "method"}},
      {"singular-series --form " + sos4 + " --n 5 --cutoff 20", {"n", "cutoff", "value", "max_imag"}},
      {"singular-integral --form " + sos2 + " --n 1 --scale 2 --cutoff 4 --bump 2,0.5", {"value", "est_error"}},
      {"rep-count --form " + sos2 + " --n 5 --weighted --scale 2 --bump 1.5,0", {"weighted_count", "scale"}},
      {"verify --form " + sos4 + " --n-max 6 --cutoff 10", {"reports", "max_normalized_error", "eps"}},
      {"decompose --form " + sos2 + " --n 0 --scale 2 --bump 0.4,0 --r-cut 2 --tol 1e-2",
       {"M", "E1", "E2", "E3", "total", "R", "e3_tail_bound"}},
  };
  for (const auto& [args, keys] : cases) {
    auto r = run(args + " --seed 7");
    ASSERT_EQ(r.status, 0) << args << "\n" << r.out;
    auto j = parse(r);
    EXPECT_EQ(j.at("seed"), 7) << args;
    for (const auto& k : keys) EXPECT_TRUE(j.contains(k)) << args << " lacks " << k;
    EXPECT_EQ(json::parse(j.dump()), j);
  }
}

TEST(Cli, VerifyRowsAndCsv) {
  auto csv = (std::filesystem::path(testing::TempDir()) / "verify.csv").string();
  auto r = run("verify --form " + sos4 + " --n-max 5 --cutoff 10 --csv " + csv);
  ASSERT_EQ(r.status, 0);
  auto j = parse(r);
  ASSERT_EQ(j["reports"].size(), 5u);
  EXPECT_EQ(j["reports"][0]["exact"], 8.0);
  EXPECT_EQ(j["reports"][1]["exact"], 24.0);
  for (const auto& row : j["reports"])
    EXPECT_EQ(row["residual"].get<double>(), row["exact"].get<double>() - row["main"].get<double>());
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "n,exact,main,residual,normalized_error");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 5);
}

TEST(Cli, DeterministicAcrossRunsAndThreadCaps) {
  const std::string args = "verify --form " + sos4 + " --n-max 12 --cutoff 30 --seed 3";
  auto a = run(args), b = run(args), c = run(args, "CIRCLE_FORMS_THREADS=1"), d = run(args, "CIRCLE_FORMS_THREADS=3");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  EXPECT_EQ(a.out, d.out);
}
