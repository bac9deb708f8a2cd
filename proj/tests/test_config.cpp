#include <gtest/gtest.h>

#include "persuade/config.hpp"
#include "persuade/records_io.hpp"
#include "test_support.hpp"

using namespace persuade;
using nlohmann::json;

namespace {

std::string failing_field(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  ExperimentConfig cfg;
  auto j = config_to_json(cfg);
  auto back = config_from_json(j);
  EXPECT_EQ(canonical_config(back), canonical_config(cfg));
  EXPECT_EQ(config_digest(back), config_digest(cfg));
  EXPECT_EQ(config_digest(cfg).size(), 64u);
  EXPECT_EQ(config_from_json(json::object()).seed, kDefaultMasterSeed);
}

TEST(Config, SeedChangesDigest) {
  ExperimentConfig a, b;
  b.seed = a.seed + 1;
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(Config, UnknownFieldsNamed) {
  EXPECT_EQ(failing_field({{"sedd", 1}}), "sedd");
  EXPECT_EQ(failing_field({{"market", {{"populaton", 10}}}}), "market.populaton");
  EXPECT_EQ(failing_field({{"search", {{"mode", "simplex-grid"}, {"speed", 2}}}}), "search.speed");
}

TEST(Config, InvalidValuesNamed) {
  EXPECT_EQ(failing_field({{"prior", {0.3, 0.3, 0.3}}}), "prior");
  EXPECT_EQ(failing_field({{"prior", {0.5, 0.5}}}), "prior");
  EXPECT_EQ(failing_field({{"schema_version", 2}}), "schema_version");
  EXPECT_EQ(failing_field({{"market", {{"population", "many"}}}}), "market.population");
  EXPECT_EQ(failing_field({{"search", {{"mode", "annealing"}}}}), "search.mode");
  EXPECT_EQ(failing_field({{"simulate_policy", "mystery"}}), "simulate_policy");
  EXPECT_EQ(failing_field({{"policies", {{"bad", {{0.6, 0.3, 0.0}, {0, 1, 0}, {0, 0, 1}}}}}}), "policies.bad");
  EXPECT_EQ(failing_field({{"predictor", {{"split", {0.5, 0.3, 0.3}}}}}), "predictor.split");
  EXPECT_EQ(failing_field({{"evaluator", "oracle"}}), "evaluator");
}

TEST(Config, CustomPoliciesResolve) {
  json j = {{"policies", {{"pooled_top", {{0, 1, 0}, {0, 1, 0}, {0, 0, 1}}}}}, {"simulate_policy", "pooled_top"}};
  auto cfg = config_from_json(j);
  EXPECT_EQ(named_policy(cfg, "pooled_top"), SignalingPolicy({{0, 1, 0}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_EQ(named_policy(cfg, "full"), SignalingPolicy({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_THROW(named_policy(cfg, "other"), ConfigError);
}

TEST(Io, PopulationRoundTrip) {
  MarketConfig c;
  c.population = 50;
  auto pop = generate_advertisers(c, 3);
  auto csv = population_to_csv(pop);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kPopulationHeader);
  EXPECT_EQ(population_from_csv(csv), pop);
  EXPECT_THROW(population_from_csv("id,budget\n1,2\n"), Error);
}

TEST(Io, InstancesAndRecordsRoundTrip) {
  MarketConfig c;
  c.population = 50;
  c.auctions = 40;
  auto vocab = SignalVocabulary::default_three();
  auto pop = generate_advertisers(c, 4);
  auto inst = generate_instances(c, 5);
  EXPECT_EQ(instances_from_jsonl(instances_to_jsonl(inst)), inst);
  auto recs = simulate_on_instances(c, vocab, exploration_policy(StateSpace::default_three(), vocab), pop, inst, 6);
  EXPECT_EQ(records_from_csv(records_to_csv(recs)), recs);
  EXPECT_EQ(records_from_jsonl(records_to_jsonl(recs)), recs);
  auto csv = records_to_csv(recs);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kDatasetHeader);
}

TEST(Io, AtomicWriteAndMissingFile) {
  testing_support::TempDir dir("io");
  auto path = dir.path() / "sub" / "file.txt";
  write_file_atomic(path, "hello\n");
  EXPECT_EQ(read_file(path), "hello\n");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  try {
    read_file(dir.path() / "absent");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingInput);
  }
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 5.526818294053856, 1e-300, 20.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_THROW(parse_double("1.5x"), Error);
}
