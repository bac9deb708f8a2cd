#pragma once

// Experiment configuration: a versioned JSON document. Missing fields take defaults;
// unknown fields are rejected with their dotted path.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "persuade/core.hpp"
#include "persuade/error.hpp"
#include "persuade/hash.hpp"
#include "persuade/market.hpp"
#include "persuade/policy_eval.hpp"
#include "persuade/predictor.hpp"
#include "persuade/signal_design.hpp"

namespace persuade {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultMasterSeed = 20240917;

struct PredictorConfig {
  HyperparamGrid grid;
  SplitRatios split;
  std::size_t cv_folds = 0;  // 0 disables the cross-validation report
};

struct ExperimentConfig {
  std::uint64_t seed = kDefaultMasterSeed;
  std::string output_dir = "out";
  MarketConfig market;
  StateSpace states = StateSpace::default_three();
  SignalVocabulary vocabulary = SignalVocabulary::default_three();
  std::string simulate_policy = "exploration";
  std::map<std::string, SignalingPolicy> policies;  // extra named policies
  PredictorConfig predictor;
  SearchConfig search;
  EvaluationMode evaluator = EvaluationMode::MlCounterfactual;

  ExperimentConfig() {
    search.mode = SearchMode::SimplexGrid;
    search.resolution = 6;
    search.mc_auctions = 10000;
  }

  Prior prior() const { return Prior(market.prior); }
  FeatureLayout layout() const { return {vocabulary.size(), market.sectors}; }
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorCode::ConfigError, field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
  }
}

template <typename T>
void read_field(const json& obj, const char* key, const std::string& path, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path.empty() ? key : path + "." + key, e.what());
  }
}

inline json policy_to_json(const SignalingPolicy& p) { return p.rows(); }

}  // namespace detail

inline std::string policy_error_field(const std::string& name) { return "policies." + name; }

/// Parses and validates; every failure is a ConfigError naming the offending field.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  ExperimentConfig cfg;
  detail::reject_unknown(j, "", {"schema_version", "seed", "output_dir", "market", "states", "prior", "vocabulary",
                                 "simulate_policy", "policies", "predictor", "search", "evaluator"});
  int version = kConfigSchemaVersion;
  read_field(j, "schema_version", "", version);
  if (version != kConfigSchemaVersion) throw ConfigError("schema_version", "unsupported version");
  read_field(j, "seed", "", cfg.seed);
  read_field(j, "output_dir", "", cfg.output_dir);

  if (j.contains("market")) {
    const auto& m = j.at("market");
    detail::reject_unknown(m, "market",
                           {"population", "auctions", "participants", "budget_mean", "budget_std", "sectors",
                            "sector_anchors", "time_buckets", "categories", "context_effect", "noise_scale",
                            "bid_floor", "bid_cap"});
    auto& mc = cfg.market;
    read_field(m, "population", "market", mc.population);
    read_field(m, "auctions", "market", mc.auctions);
    read_field(m, "participants", "market", mc.participants);
    read_field(m, "budget_mean", "market", mc.budget_mean);
    read_field(m, "budget_std", "market", mc.budget_std);
    read_field(m, "sectors", "market", mc.sectors);
    read_field(m, "sector_anchors", "market", mc.sector_anchors);
    read_field(m, "time_buckets", "market", mc.time_buckets);
    read_field(m, "categories", "market", mc.categories);
    read_field(m, "context_effect", "market", mc.context_effect);
    read_field(m, "noise_scale", "market", mc.noise_scale);
    read_field(m, "bid_floor", "market", mc.bid_floor);
    read_field(m, "bid_cap", "market", mc.bid_cap);
  }
  read_field(j, "prior", "", cfg.market.prior);

  if (j.contains("states")) {
    const auto& s = j.at("states");
    detail::reject_unknown(s, "states", {"labels", "multipliers"});
    std::vector<std::string> labels = cfg.states.labels();
    std::vector<double> mult = cfg.states.multipliers();
    read_field(s, "labels", "states", labels);
    read_field(s, "multipliers", "states", mult);
    try {
      cfg.states = StateSpace(labels, mult);
    } catch (const Error& e) {
      throw ConfigError("states", e.message());
    }
  }
  if (j.contains("vocabulary")) {
    const auto& v = j.at("vocabulary");
    detail::reject_unknown(v, "vocabulary", {"labels", "face_values"});
    std::vector<std::string> labels = cfg.vocabulary.labels();
    std::vector<double> faces = cfg.vocabulary.face_values();
    read_field(v, "labels", "vocabulary", labels);
    read_field(v, "face_values", "vocabulary", faces);
    try {
      cfg.vocabulary = SignalVocabulary(labels, faces);
    } catch (const Error& e) {
      throw ConfigError("vocabulary", e.message());
    }
  }

  if (auto field = cfg.market.first_invalid_field(); !field.empty()) {
    throw ConfigError(field, "invalid value");
  }
  if (cfg.market.prior.size() != cfg.states.size()) throw ConfigError("prior", "length must match states");

  read_field(j, "simulate_policy", "", cfg.simulate_policy);
  if (j.contains("policies")) {
    const auto& ps = j.at("policies");
    if (!ps.is_object()) throw ConfigError("policies", "must be an object of named matrices");
    for (const auto& [name, rows] : ps.items()) {
      try {
        SignalingPolicy p(rows.get<std::vector<std::vector<double>>>());
        if (auto v = validate_policy(p, cfg.states.size(), cfg.vocabulary.size())) {
          throw ConfigError(policy_error_field(name), describe(*v));
        }
        cfg.policies.emplace(name, std::move(p));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(policy_error_field(name), e.what());
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(policy_error_field(name), e.message());
      }
    }
  }
  static const std::set<std::string> kBuiltin{"exploration", "full", "none"};
  if (!kBuiltin.count(cfg.simulate_policy) && !cfg.policies.count(cfg.simulate_policy)) {
    throw ConfigError("simulate_policy", "unknown policy '" + cfg.simulate_policy + "'");
  }

  if (j.contains("predictor")) {
    const auto& p = j.at("predictor");
    detail::reject_unknown(p, "predictor",
                           {"learning_rates", "max_depths", "n_trees", "min_samples_leaf", "split", "cv_folds"});
    auto& g = cfg.predictor.grid;
    read_field(p, "learning_rates", "predictor", g.learning_rates);
    read_field(p, "max_depths", "predictor", g.max_depths);
    read_field(p, "n_trees", "predictor", g.n_trees);
    read_field(p, "min_samples_leaf", "predictor", g.min_samples_leaf);
    read_field(p, "cv_folds", "predictor", cfg.predictor.cv_folds);
    if (p.contains("split")) {
      std::vector<double> r;
      read_field(p, "split", "predictor", r);
      if (r.size() != 3) throw ConfigError("predictor.split", "expected [train, validation, test]");
      cfg.predictor.split = {r[0], r[1], r[2]};
    }
  }
  {
    const auto& g = cfg.predictor.grid;
    if (g.learning_rates.empty() || g.max_depths.empty() || g.n_trees.empty()) {
      throw ConfigError("predictor", "grid axes must be non-empty");
    }
    for (double lr : g.learning_rates) {
      if (!(lr > 0.0)) throw ConfigError("predictor.learning_rates", "must be positive");
    }
    for (int d : g.max_depths) {
      if (d <= 0) throw ConfigError("predictor.max_depths", "must be positive");
    }
    for (int t : g.n_trees) {
      if (t <= 0) throw ConfigError("predictor.n_trees", "must be positive");
    }
    if (g.min_samples_leaf <= 0) throw ConfigError("predictor.min_samples_leaf", "must be positive");
    const auto& r = cfg.predictor.split;
    if (!(r.train > 0 && r.validation > 0 && r.test > 0) ||
        std::abs(r.train + r.validation + r.test - 1.0) > kValidateTolerance) {
      throw ConfigError("predictor.split", "ratios must be positive and sum to 1");
    }
    if (cfg.predictor.cv_folds == 1) throw ConfigError("predictor.cv_folds", "must be 0 or >= 2");
  }

  if (j.contains("search")) {
    const auto& s = j.at("search");
    detail::reject_unknown(s, "search", {"mode", "resolution", "mc_auctions", "credibility", "delta", "max_candidates"});
    std::string mode(to_string(cfg.search.mode));
    read_field(s, "mode", "search", mode);
    try {
      cfg.search.mode = search_mode_from_string(mode);
    } catch (const Error& e) {
      throw ConfigError("search.mode", e.message());
    }
    read_field(s, "resolution", "search", cfg.search.resolution);
    read_field(s, "mc_auctions", "search", cfg.search.mc_auctions);
    read_field(s, "credibility", "search", cfg.search.credibility);
    read_field(s, "delta", "search", cfg.search.delta);
    read_field(s, "max_candidates", "search", cfg.search.max_candidates);
  }
  if (cfg.search.resolution < 2) throw ConfigError("search.resolution", "must be >= 2");
  if (!(cfg.search.delta >= 0.0)) throw ConfigError("search.delta", "must be >= 0");
  if (cfg.search.mc_auctions == 0) throw ConfigError("search.mc_auctions", "must be positive");

  if (j.contains("evaluator")) {
    std::string ev;
    read_field(j, "evaluator", "", ev);
    try {
      cfg.evaluator = evaluation_mode_from_string(ev);
    } catch (const Error& e) {
      throw ConfigError("evaluator", e.message());
    }
  }
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  const auto& m = cfg.market;
  nlohmann::json policies = nlohmann::json::object();
  for (const auto& [name, p] : cfg.policies) policies[name] = detail::policy_to_json(p);
  const auto& g = cfg.predictor.grid;
  return {
      {"schema_version", kConfigSchemaVersion},
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"market",
       {{"population", m.population},
        {"auctions", m.auctions},
        {"participants", m.participants},
        {"budget_mean", m.budget_mean},
        {"budget_std", m.budget_std},
        {"sectors", m.sectors},
        {"sector_anchors", m.sector_anchors},
        {"time_buckets", m.time_buckets},
        {"categories", m.categories},
        {"context_effect", m.context_effect},
        {"noise_scale", m.noise_scale},
        {"bid_floor", m.bid_floor},
        {"bid_cap", m.bid_cap}}},
      {"prior", m.prior},
      {"states", {{"labels", cfg.states.labels()}, {"multipliers", cfg.states.multipliers()}}},
      {"vocabulary", {{"labels", cfg.vocabulary.labels()}, {"face_values", cfg.vocabulary.face_values()}}},
      {"simulate_policy", cfg.simulate_policy},
      {"policies", policies},
      {"predictor",
       {{"learning_rates", g.learning_rates},
        {"max_depths", g.max_depths},
        {"n_trees", g.n_trees},
        {"min_samples_leaf", g.min_samples_leaf},
        {"split", {cfg.predictor.split.train, cfg.predictor.split.validation, cfg.predictor.split.test}},
        {"cv_folds", cfg.predictor.cv_folds}}},
      {"search",
       {{"mode", std::string(to_string(cfg.search.mode))},
        {"resolution", cfg.search.resolution},
        {"mc_auctions", cfg.search.mc_auctions},
        {"credibility", cfg.search.credibility},
        {"delta", cfg.search.delta},
        {"max_candidates", cfg.search.max_candidates}}},
      {"evaluator", std::string(to_string(cfg.evaluator))},
  };
}

/// Canonical bytes: nlohmann objects keep keys sorted, so dump() is stable.
inline std::string canonical_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + '\n'; }

inline std::string config_digest(const ExperimentConfig& cfg) { return to_hex(sha256(canonical_config(cfg))); }

/// Resolves a policy name: the built-ins first, then the configured extras.
inline SignalingPolicy named_policy(const ExperimentConfig& cfg, const std::string& name) {
  if (name == "exploration") return exploration_policy(cfg.states, cfg.vocabulary);
  if (name == "full") return full_disclosure(cfg.states, cfg.vocabulary);
  if (name == "none") return no_disclosure(cfg.states, cfg.vocabulary);
  auto it = cfg.policies.find(name);
  if (it == cfg.policies.end()) throw ConfigError("policy", "unknown policy '" + name + "'");
  return it->second;
}

}  // namespace persuade
