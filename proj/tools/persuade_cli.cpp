// persuade_cli: generate -> simulate -> train -> optimize -> verify/report.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "persuade/config.hpp"
#include "persuade/pipeline.hpp"

namespace {

using namespace persuade;

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  auto text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError:
      return kExitConfig;
    case ErrorCode::MissingInput:
      return kExitMissingInput;
    default:
      return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persuasion-aware ad auction experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t threads = 1;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_option("--out", out, "output directory, overrides the config");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* generate = app.add_subcommand("generate", "write the advertiser population and auction instances");
  auto* simulate = app.add_subcommand("simulate", "simulate bids under a policy and write the dataset and ledger");
  std::string policy = "";
  simulate->add_option("--policy", policy, "exploration | full | none | a configured policy name");
  auto* train = app.add_subcommand("train", "grid-search and fit the bid predictor");
  std::string grid = "config";
  train->add_option("--grid", grid, "hyperparameter grid")->check(CLI::IsMember({"config", "full", "reduced"}));
  auto* optimize = app.add_subcommand("optimize", "search signaling policies and write the revenue report");
  auto* verify = app.add_subcommand("verify", "verify and replay a ledger file");
  std::string ledger_path;
  verify->add_option("--ledger", ledger_path, "ledger file (default: <out>/ledger.jsonl)");
  auto* report = app.add_subcommand("report", "rehash artifacts and rewrite the run manifest");
  auto* run = app.add_subcommand("run", "generate, simulate, train, optimize and report in one go");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    auto config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (out) config.output_dir = *out;
    auto ctx = make_context(config, std::nullopt, threads, &std::cout);

    if (verify->parsed()) {
      return cmd_verify(ledger_path.empty() ? ctx.path("ledger.jsonl") : std::filesystem::path(ledger_path),
                        std::cout);
    }
    std::optional<HyperparamGrid> grid_override;
    if (grid == "full") grid_override = HyperparamGrid{};
    if (grid == "reduced") grid_override = HyperparamGrid::reduced();
    const std::string sim_policy = policy.empty() ? ctx.config.simulate_policy : policy;

    if (generate->parsed() || run->parsed()) cmd_generate(ctx);
    if (simulate->parsed() || run->parsed()) cmd_simulate(ctx, sim_policy);
    if (train->parsed() || run->parsed()) cmd_train(ctx, grid_override);
    if (optimize->parsed() || run->parsed()) cmd_optimize(ctx);
    if (report->parsed() || run->parsed()) cmd_report(ctx);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
