#include <json.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef CALGEO_CLI
#error "CALGEO_CLI must name the calgeo executable"
#endif

using Json = nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args, bool capture_stderr = false) {
  const std::string cmd = std::string(CALGEO_CLI) + " " + args + (capture_stderr ? " 2>&1" : " 2>/dev/null");
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Json run_json(const std::string& args, int expected_code = 0) {
  const CliRun r = run(args);
  EXPECT_EQ(r.code, expected_code) << args;
  return Json::parse(r.out);
}

}  // namespace

TEST(Cli, EnvelopeCarriesConfigAndPayload) {
  const Json j = run_json("comass --calibration builtin:associative --seed 7");
  EXPECT_EQ(j["tool"], "calgeo");
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["config"]["subcommand"], "comass");
  EXPECT_TRUE(j["command"].is_array());
  EXPECT_NEAR(j["payload"]["comass"]["value"].get<double>(), 1.0, 1e-6);
  EXPECT_FALSE(j.contains("error"));
}

TEST(Cli, VerifyIsDeterministic) {
  const Json a = run_json("verify --suite identities --seed 1");
  const Json b = run_json("verify --suite identities --seed 1");
  EXPECT_EQ(a["payload"], b["payload"]);
  EXPECT_EQ(a["payload"]["failed"], 0);
  EXPECT_GT(a["payload"]["passed"].get<int>(), 10);
}

TEST(Cli, TorusScanFindsNonConvexity) {
  const Json j = run_json("torus-scan --R 2 --r 1.01 --resolution 8");
  EXPECT_EQ(j["payload"]["convex"], false);
  EXPECT_LT(j["payload"]["min_margin"].get<double>(), 0.0);
  const CliRun csv = run("torus-scan --R 2 --r 0.9 --resolution 8 --format csv");
  EXPECT_EQ(csv.code, 0);
  EXPECT_EQ(csv.out.substr(0, csv.out.find('\n')), "u,v,x,y,z,vacuous,margin");
}

TEST(Cli, CheckPshWithInlineJet) {
  const Json j = run_json(
      R"(check-psh --calibration builtin:kahler?n=2 --jet '{"value":0,"grad":[0,0,0,0],"hess":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}')");
  EXPECT_EQ(j["payload"]["psh"]["class"], "strictly_psh");
}

TEST(Cli, OutWritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "calgeo_cli_out.json";
  std::filesystem::remove(path);
  const CliRun r = run("comass --calibration builtin:kahler --out " + path.string());
  EXPECT_EQ(r.code, 0);
  std::ifstream in(path);
  ASSERT_TRUE(in.good());
  const Json j = Json::parse(in);
  EXPECT_EQ(j["status"], "ok");
  std::filesystem::remove(path);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("comass --calibration builtin:kahler --bogus-flag").code, 1);
  EXPECT_EQ(run("no-such-command").code, 1);
  const Json err = run_json("comass --calibration builtin:nope", 1);
  EXPECT_EQ(err["status"], "error");
  EXPECT_TRUE(err["payload"].is_null());
  EXPECT_FALSE(err["error"].get<std::string>().empty());
  EXPECT_EQ(run("verify --suite nonsense").code, 1);
  // csv only where a table exists
  EXPECT_EQ(run("comass --calibration builtin:kahler --format csv").code, 1);
  // An unreachable eigenvalue target: no witness, flagged.
  const Json flagged = run_json("witness --calibration builtin:kahler --lambda-target -5", 2);
  EXPECT_EQ(flagged["status"], "flagged");
}

TEST(Cli, HelpListsSubcommands) {
  const CliRun r = run("--help", true);
  EXPECT_EQ(r.code, 0);
  for (const char* cmd : {"comass", "planes", "check-psh", "laplacian", "plh-space", "ellipticity", "witness",
                          "richness", "span", "cone", "normality", "plh-mod-d", "boundary", "torus-scan", "free",
                          "dist-jet", "hull", "verify"})
    EXPECT_NE(r.out.find(cmd), std::string::npos) << cmd;
}
