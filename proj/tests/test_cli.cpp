#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "persuade/pipeline.hpp"
#include "test_support.hpp"

using namespace persuade;
using testing_support::TempDir;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(PERSUADE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// A small market keeps the end-to-end runs quick.
const char* kSmallConfig = R"({
  "schema_version": 1,
  "seed": 77,
  "market": {"population": 200, "auctions": 600},
  "predictor": {"learning_rates": [0.2], "max_depths": [3], "n_trees": [20]},
  "search": {"mode": "partition-enumeration"}
})";

}  // namespace

TEST(Cli, InvalidPriorExitsWithConfigCode) {
  TempDir dir("cli_prior");
  write(dir.path() / "bad.json", R"({"prior": [0.3, 0.3, 0.3]})");
  auto log = dir.path() / "log";
  EXPECT_EQ(run_cli("generate --config " + (dir.path() / "bad.json").string() + " --out " + dir.path().string(), log),
            2);
  EXPECT_NE(read_file(log).find("prior"), std::string::npos);
}

TEST(Cli, UnknownFieldAndBadFlags) {
  TempDir dir("cli_unknown");
  write(dir.path() / "typo.json", R"({"sed": 4})");
  auto log = dir.path() / "log";
  EXPECT_EQ(run_cli("generate --config " + (dir.path() / "typo.json").string(), log), 2);
  EXPECT_NE(read_file(log).find("sed"), std::string::npos);
  EXPECT_EQ(run_cli("frobnicate", log), 2);
  EXPECT_EQ(run_cli("train --grid huge", log), 2);
}

TEST(Cli, MissingInputsExitThree) {
  TempDir dir("cli_missing");
  auto out = " --out " + dir.path().string();
  auto log = dir.path() / "log";
  EXPECT_EQ(run_cli("simulate" + out, log), 3);
  EXPECT_EQ(run_cli("train" + out, log), 3);
  EXPECT_EQ(run_cli("optimize" + out, log), 3);
  EXPECT_EQ(run_cli("verify --ledger " + (dir.path() / "nope.jsonl").string(), log), 3);
  EXPECT_EQ(run_cli("generate --config " + (dir.path() / "absent.json").string(), log), 3);
}

TEST(Cli, FullPipelineVerifyAndTamper) {
  TempDir dir("cli_pipeline");
  auto cfg = dir.path() / "cfg.json";
  write(cfg, kSmallConfig);
  auto out = dir.path() / "run";
  auto common = " --config " + cfg.string() + " --out " + out.string();
  auto log = dir.path() / "log";
  ASSERT_EQ(run_cli("generate" + common, log), 0) << read_file(log);
  ASSERT_EQ(run_cli("simulate" + common, log), 0) << read_file(log);
  EXPECT_NE(read_file(log).find("ledger verified"), std::string::npos);
  ASSERT_EQ(run_cli("train" + common, log), 0) << read_file(log);
  ASSERT_EQ(run_cli("optimize" + common, log), 0) << read_file(log);
  ASSERT_EQ(run_cli("report" + common, log), 0) << read_file(log);
  EXPECT_EQ(run_cli("verify" + common, log), 0) << read_file(log);

  auto metrics = nlohmann::json::parse(read_file(out / "metrics.json"));
  double rmse = metrics["test"]["rmse"], mse = metrics["test"]["mse"];
  EXPECT_NEAR(rmse * rmse, mse, 1e-9);

  auto report = nlohmann::json::parse(read_file(out / "revenue_report.json"));
  auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
  EXPECT_EQ(report["metadata"]["config_digest"], manifest["config_digest"]);
  EXPECT_EQ(report["seed"], derive_seed(77, "search"));
  EXPECT_EQ(report["metadata"]["master_seed"], 77);
  double full = 0, none = 0, opt = 0;
  for (const auto& p : report["policies"]) {
    if (p["name"] == "full") full = p["total_revenue"];
    if (p["name"] == "none") none = p["total_revenue"];
    if (p["name"] == "opt") opt = p["total_revenue"];
  }
  EXPECT_GE(opt, std::max(full, none));

  // The manifest digest matches the stored config copy and lists every artifact.
  EXPECT_EQ(to_hex(sha256(read_file(out / "config.json"))), manifest["config_digest"]);
  for (const auto& entry : fs::directory_iterator(out)) {
    auto name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    ASSERT_TRUE(manifest["artifacts"].contains(name)) << name;
    EXPECT_EQ(manifest["artifacts"][name]["sha256"], to_hex(sha256(read_file(entry.path()))));
  }

  // Flip one byte inside entry 3's record.
  auto ledger_text = read_file(out / "ledger.jsonl");
  std::size_t line_start = 0;
  for (int i = 0; i < 3; ++i) line_start = ledger_text.find('\n', line_start) + 1;
  auto pos = ledger_text.find("\"record\":\"", line_start) + 12;
  ledger_text[pos] = ledger_text[pos] == '1' ? '2' : '1';
  auto tampered = dir.path() / "tampered.jsonl";
  write(tampered, ledger_text);
  EXPECT_EQ(run_cli("verify --ledger " + tampered.string(), log), 4);
  EXPECT_NE(read_file(log).find("entry 3"), std::string::npos) << read_file(log);
}

TEST(Cli, SeedOverrideAndRepeatability) {
  TempDir dir("cli_seed");
  auto cfg = dir.path() / "cfg.json";
  write(cfg, kSmallConfig);
  auto log = dir.path() / "log";
  auto a = dir.path() / "a", b = dir.path() / "b", c = dir.path() / "c";
  ASSERT_EQ(run_cli("generate --config " + cfg.string() + " --out " + a.string(), log), 0);
  ASSERT_EQ(run_cli("generate --config " + cfg.string() + " --out " + b.string(), log), 0);
  ASSERT_EQ(run_cli("generate --config " + cfg.string() + " --seed 78 --out " + c.string(), log), 0);
  EXPECT_EQ(read_file(a / "population.csv"), read_file(b / "population.csv"));
  EXPECT_EQ(read_file(a / "instances.jsonl"), read_file(b / "instances.jsonl"));
  EXPECT_NE(read_file(a / "population.csv"), read_file(c / "population.csv"));
}
