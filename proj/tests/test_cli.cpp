#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PLUGINFDR_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pluginfdr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string file(const std::string& name, const std::string& content) {
    const auto p = dir_ / name;
    std::ofstream(p) << content;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string l;
  while (std::getline(ss, l)) out.push_back(l);
  return out;
}

}  // namespace

TEST_F(Cli, EstimateStorey) {
  const auto p = file("p.csv", "p\n0.1\n0.2\n0.6\n0.9\n");
  const auto r = run("estimate --pvalues " + p + " --estimator storey");
  ASSERT_EQ(r.code, 0);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 2u);
  EXPECT_EQ(ls[0], "estimator,adjustment,m,m0_hat,pi0_hat_raw,pi0_hat,mc_se,seed,warnings");
  const auto f = fields(ls[1]);
  EXPECT_EQ(f[3], "6");
  EXPECT_EQ(f[4], "1.5");
  EXPECT_EQ(f[5], "1");
}

TEST_F(Cli, BhRejections) {
  const auto p = file("p.csv", "p\n0.01\n0.02\n0.9\n");
  const auto r = run("bh --pvalues " + p + " --alpha 0.05");
  ASSERT_EQ(r.code, 0);
  int rejected = 0;
  const auto ls = lines(r.out);
  for (std::size_t i = 1; i < ls.size(); ++i) rejected += fields(ls[i])[2] == "1";
  EXPECT_EQ(rejected, 2);
}

TEST_F(Cli, FetSupportsFeedDuAdjustment) {
  const auto t = file("t.csv", "a,b,c,d\n3,1,1,3\n0,4,4,0\n2,2,2,2\n");
  const auto pcsv = path("p.csv");
  const auto sjson = path("s.json");
  ASSERT_EQ(run("fet --input " + t + " --alternative greater --emit-supports " + sjson + " --out " + pcsv).code, 0);
  std::ifstream in(pcsv);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(std::stod(first), 17.0 / 70.0);
  const auto r = run("estimate --pvalues " + pcsv + " --supports " + sjson + " --estimator storey --adjust du");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(fields(lines(r.out)[1])[1], "du");
  // du needs supports
  EXPECT_EQ(run("estimate --pvalues " + pcsv + " --estimator storey --adjust du").code, 1);
}

TEST_F(Cli, InputErrorsExitOne) {
  const auto p = file("p.csv", "p\n0.1\n0.7\n");
  const auto s = file("s.json", R"([{"atoms":[0.1,1.0],"cdf":[0.1,1.0]},{"atoms":[0.7,1.0],"cdf":[0.7,1.0]}])");
  EXPECT_EQ(run("estimate --pvalues " + p + " --supports " + s + " --estimator storey --adjust rand").code, 1);
  EXPECT_EQ(run("estimate --pvalues " + p + " --supports " + s + " --estimator storey --adjust rand --seed 3").code,
            0);
  EXPECT_EQ(run("estimate --pvalues " + file("e.csv", "p\n") + " --estimator storey").code, 1);
  EXPECT_EQ(run("verify orders").code, 1);
  EXPECT_EQ(run("simulate gaussian").code, 1);
}

TEST_F(Cli, VerifyOrdersPasses) {
  const auto r = run("verify orders --seed 1");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(lines(r.out)[0], "check,parameters,value,reference,tolerance,pass");
}

TEST_F(Cli, SimulateIsIdenticalAcrossThreadCounts) {
  const auto cfg = file("cfg.json",
                        R"({"m":60,"pi1":0.2,"replications":12,"rand_reps":20,"seed":77,
                            "estimators":[{"kind":"storey"},{"kind":"pc_new"}]})");
  const auto a = run("simulate fet --config " + cfg);
  ASSERT_EQ(a.code, 0);
  for (const char* n : {"1", "3", "8"}) {
    const auto b = run("simulate fet --config " + cfg + " --threads " + n);
    EXPECT_EQ(a.out, b.out) << n;
    ::setenv("PLUGIN_FDR_THREADS", n, 1);
    const auto c = run("simulate fet --config " + cfg);
    ::unsetenv("PLUGIN_FDR_THREADS");
    EXPECT_EQ(a.out, c.out) << n;
  }
}
