#pragma once

// The experiment pipeline behind the CLI verbs. Each command reads its inputs from the
// output directory, writes its artifacts atomically and folds them into manifest.json.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "persuade/config.hpp"
#include "persuade/gbm.hpp"
#include "persuade/ledger.hpp"
#include "persuade/market.hpp"
#include "persuade/policy_eval.hpp"
#include "persuade/predictor.hpp"
#include "persuade/records_io.hpp"
#include "persuade/signal_design.hpp"

namespace persuade {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMissingInput = 3;
inline constexpr int kExitVerification = 4;

struct RunContext {
  ExperimentConfig config;
  fs::path out;
  std::size_t threads = 1;
  std::ostream* log = nullptr;

  std::uint64_t stream(std::string_view name) const { return derive_seed(config.seed, name); }
  fs::path path(std::string_view file) const { return out / file; }
};

inline RunContext make_context(ExperimentConfig config, std::optional<fs::path> out = {}, std::size_t threads = 1,
                               std::ostream* log = nullptr) {
  RunContext ctx;
  ctx.out = out ? *out : fs::path(config.output_dir);
  ctx.config = std::move(config);
  ctx.threads = std::max<std::size_t>(threads, 1);
  ctx.log = log;
  return ctx;
}

namespace detail {

template <typename... Parts>
void log_line(const RunContext& ctx, const Parts&... parts) {
  if (!ctx.log) return;
  ((*ctx.log) << ... << parts) << '\n';
}

/// Writes artifacts and keeps the manifest in step with them.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(const RunContext& ctx) : ctx_(ctx) {
    const std::string digest = config_digest(ctx.config);
    auto manifest_path = ctx.path("manifest.json");
    if (fs::exists(manifest_path)) {
      try {
        manifest_ = nlohmann::json::parse(read_file(manifest_path));
      } catch (const nlohmann::json::exception&) {
        manifest_ = nlohmann::json::object();
      }
    }
    // A different config invalidates whatever the directory held before.
    if (!manifest_.is_object() || manifest_.value("config_digest", std::string()) != digest) {
      manifest_ = {{"config_digest", digest},
                   {"artifacts", nlohmann::json::object()},
                   {"metrics", nlohmann::json::object()}};
    }
    write("config.json", canonical_config(ctx.config));
  }

  void write(const std::string& name, std::string_view contents) {
    write_file_atomic(ctx_.path(name), contents);
    manifest_["artifacts"][name] = {{"sha256", to_hex(sha256(contents))}, {"bytes", contents.size()}};
  }

  void metric(const std::string& key, nlohmann::json value) { manifest_["metrics"][key] = std::move(value); }
  void set(const std::string& key, nlohmann::json value) { manifest_[key] = std::move(value); }

  const nlohmann::json& manifest() const { return manifest_; }

  void commit() { write_file_atomic(ctx_.path("manifest.json"), manifest_.dump(2) + '\n'); }

 private:
  const RunContext& ctx_;
  nlohmann::json manifest_ = nlohmann::json::object();
};

inline std::vector<AdvertiserProfile> load_population(const RunContext& ctx) {
  return population_from_csv(read_file(ctx.path("population.csv")));
}

inline std::vector<AuctionInstance> load_instances(const RunContext& ctx) {
  return instances_from_jsonl(read_file(ctx.path("instances.jsonl")));
}

inline Dataset concat(const Dataset& a, const Dataset& b) {
  Dataset out;
  out.features = FeatureMatrix(a.features.columns());
  out.features.reserve(a.size() + b.size());
  for (const Dataset* d : {&a, &b}) {
    for (std::size_t r = 0; r < d->size(); ++r) out.features.add_row(d->features.row(r));
    out.targets.insert(out.targets.end(), d->targets.begin(), d->targets.end());
    out.groups.insert(out.groups.end(), d->groups.begin(), d->groups.end());
  }
  return out;
}

inline nlohmann::json metrics_json(const RegressionMetrics& m) {
  return {{"mse", m.mse},
          {"rmse", m.rmse},
          {"mae", m.mae},
          {"r_squared", m.r_squared_defined ? nlohmann::json(m.r_squared) : nlohmann::json(nullptr)}};
}

inline nlohmann::json hyperparams_json(const Hyperparams& hp) {
  return {{"learning_rate", hp.learning_rate},
          {"max_depth", hp.max_depth},
          {"n_trees", hp.n_trees},
          {"min_samples_leaf", hp.min_samples_leaf}};
}

}  // namespace detail

// ---- generate -----------------------------------------------------------

struct GenerateSummary {
  std::size_t advertisers = 0;
  std::size_t auctions = 0;
  std::vector<std::size_t> state_counts;
};

inline GenerateSummary cmd_generate(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  auto population = generate_advertisers(cfg.market, ctx.stream("population"));
  auto instances = generate_instances(cfg.market, ctx.stream("instances"));

  detail::ArtifactWriter w(ctx);
  w.write("population.csv", population_to_csv(population));
  w.write("instances.jsonl", instances_to_jsonl(instances));

  GenerateSummary s{population.size(), instances.size(), std::vector<std::size_t>(cfg.states.size(), 0)};
  for (const auto& inst : instances) s.state_counts[inst.true_state] += 1;
  double budget = 0.0;
  for (const auto& p : population) budget += p.budget;
  w.metric("advertisers", s.advertisers);
  w.metric("auctions", s.auctions);
  w.commit();

  detail::log_line(ctx, "generated ", s.advertisers, " advertisers (mean budget ",
                   format_double(budget / static_cast<double>(population.size())), ") and ", s.auctions,
                   " auctions");
  for (std::size_t k = 0; k < s.state_counts.size(); ++k) {
    detail::log_line(ctx, "  state ", cfg.states.labels()[k], ": ", s.state_counts[k]);
  }
  return s;
}

// ---- simulate -----------------------------------------------------------

struct BidStatistics {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

inline BidStatistics bid_statistics(const std::vector<AuctionRecord>& records) {
  BidStatistics s;
  s.min = INFINITY;
  s.max = -INFINITY;
  double sum = 0.0;
  for (const auto& r : records) {
    for (const auto& p : r.participants) {
      sum += p.bid;
      s.min = std::min(s.min, p.bid);
      s.max = std::max(s.max, p.bid);
      ++s.count;
    }
  }
  if (s.count == 0) throw Error(ErrorCode::EmptyInput, "no bids");
  s.mean = sum / static_cast<double>(s.count);
  double var = 0.0;
  for (const auto& r : records) {
    for (const auto& p : r.participants) var += (p.bid - s.mean) * (p.bid - s.mean);
  }
  s.std = std::sqrt(var / static_cast<double>(s.count));
  return s;
}

struct SimulateSummary {
  BidStatistics bids;
  std::vector<double> signal_frequency;
  std::string ledger_head;
};

inline SimulateSummary cmd_simulate(const RunContext& ctx, const std::string& policy_name) {
  const auto& cfg = ctx.config;
  auto policy = named_policy(cfg, policy_name);
  auto population = detail::load_population(ctx);
  auto instances = detail::load_instances(ctx);
  auto records = simulate_on_instances(cfg.market, cfg.vocabulary, policy, population, instances,
                                       ctx.stream("signals"));

  Ledger ledger;
  for (const auto& rec : records) ledger.append(rec);
  auto check = verify_chain(ledger);
  if (!check.ok) throw Error(ErrorCode::OutcomeMismatch, "fresh ledger failed verification");
  replay(ledger);

  SimulateSummary s;
  s.bids = bid_statistics(records);
  s.signal_frequency.assign(cfg.vocabulary.size(), 0.0);
  for (const auto& r : records) s.signal_frequency[r.signal] += 1.0;
  for (double& f : s.signal_frequency) f /= static_cast<double>(records.size());
  s.ledger_head = to_hex(ledger.head());

  detail::ArtifactWriter w(ctx);
  w.write("dataset.csv", records_to_csv(records));
  w.write("dataset.jsonl", records_to_jsonl(records));
  w.write("ledger.jsonl", ledger_to_jsonl(ledger));
  w.set("ledger_head", s.ledger_head);
  w.metric("simulate_policy", policy_name);
  w.metric("bids", {{"count", s.bids.count},
                    {"mean", s.bids.mean},
                    {"std", s.bids.std},
                    {"min", s.bids.min},
                    {"max", s.bids.max}});
  w.metric("signal_frequency", s.signal_frequency);
  w.commit();

  detail::log_line(ctx, "simulated ", records.size(), " auctions under '", policy_name, "': ", s.bids.count,
                   " bids, mean ", format_double(s.bids.mean), ", std ", format_double(s.bids.std), ", range [",
                   format_double(s.bids.min), ", ", format_double(s.bids.max), "]");
  for (std::size_t k = 0; k < s.signal_frequency.size(); ++k) {
    detail::log_line(ctx, "  signal ", cfg.vocabulary.labels()[k], ": ", format_double(s.signal_frequency[k]));
  }
  detail::log_line(ctx, "ledger verified, head ", s.ledger_head);
  return s;
}

// ---- train --------------------------------------------------------------

struct TrainSummary {
  Hyperparams best;
  RegressionMetrics test;
  bool mse_non_increasing = true;
};

inline TrainSummary cmd_train(const RunContext& ctx, const std::optional<HyperparamGrid>& grid_override = {}) {
  const auto& cfg = ctx.config;
  const HyperparamGrid grid = grid_override ? *grid_override : cfg.predictor.grid;
  const auto& m = cfg.market;

  auto records = records_from_csv(read_file(ctx.path("dataset.csv")));
  auto data = build_features(records, cfg.layout());
  auto split = split_dataset(data, cfg.predictor.split, ctx.stream("split"));
  if (split.train.size() == 0 || split.validation.size() == 0 || split.test.size() == 0) {
    throw Error(ErrorCode::TooFewGroups, "dataset too small for a three-way split");
  }
  detail::log_line(ctx, "split rows: train ", split.train.size(), ", validation ", split.validation.size(),
                   ", test ", split.test.size());

  auto tuning = tune_hyperparameters(split.train, split.validation, grid.points(), m.bid_floor, m.bid_cap,
                                     ctx.threads);
  detail::log_line(ctx, "grid search over ", tuning.leaderboard.size(), " points, best validation rmse ",
                   format_double(tuning.leaderboard.front().validation_rmse));

  // Final fit on train + validation with the winning hyperparameters.
  auto fit_data = detail::concat(split.train, split.validation);
  TrainingTrace trace;
  auto model = train_gbm(fit_data.features, fit_data.targets, tuning.best, m.bid_floor, m.bid_cap, &trace);

  TrainSummary s;
  s.best = tuning.best;
  for (std::size_t i = 1; i < trace.stage_mse.size(); ++i) {
    if (trace.stage_mse[i] > trace.stage_mse[i - 1]) s.mse_non_increasing = false;
  }
  auto train_pred = model.predict(fit_data.features);
  auto test_pred = model.predict(split.test.features);
  auto train_metrics = regression_metrics(train_pred, fit_data.targets);
  s.test = regression_metrics(test_pred, split.test.targets);
  auto residuals = residual_analysis(test_pred, split.test.targets);

  nlohmann::json metrics = {
      {"best_hyperparams", detail::hyperparams_json(s.best)},
      {"validation_rmse", tuning.leaderboard.front().validation_rmse},
      {"train", detail::metrics_json(train_metrics)},
      {"test", detail::metrics_json(s.test)},
      {"noise_scale", m.noise_scale},
      {"test_rmse_over_noise", m.noise_scale > 0 ? s.test.rmse / m.noise_scale : 0.0},
      {"rows", {{"train", split.train.size()}, {"validation", split.validation.size()}, {"test", split.test.size()}}},
      {"grid_points", tuning.leaderboard.size()},
      {"stage_mse_non_increasing", s.mse_non_increasing},
      {"final_training_mse", trace.stage_mse.empty() ? 0.0 : trace.stage_mse.back()},
  };
  if (cfg.predictor.cv_folds >= 2) {
    auto cv = k_fold_cv(fit_data, cfg.predictor.cv_folds, s.best, ctx.stream("cv"), m.bid_floor, m.bid_cap);
    metrics["cross_validation"] = {{"folds", cv.fold_rmse.size()},
                                   {"fold_rmse", cv.fold_rmse},
                                   {"mean_rmse", cv.mean_rmse},
                                   {"std_rmse", cv.std_rmse}};
  }

  std::string board = "rank,learning_rate,max_depth,n_trees,min_samples_leaf,validation_rmse\n";
  for (std::size_t i = 0; i < tuning.leaderboard.size(); ++i) {
    const auto& e = tuning.leaderboard[i];
    board += std::to_string(i + 1) + ',' + format_double(e.hp.learning_rate) + ',' + std::to_string(e.hp.max_depth) +
             ',' + std::to_string(e.hp.n_trees) + ',' + std::to_string(e.hp.min_samples_leaf) + ',' +
             format_double(e.validation_rmse) + '\n';
  }

  detail::ArtifactWriter w(ctx);
  w.write("model.json", model.to_json().dump() + '\n');
  w.write("metrics.json", metrics.dump(2) + '\n');
  w.write("leaderboard.csv", board);
  w.write("residuals.json", residuals.to_json().dump(2) + '\n');
  w.write("residuals.csv", residuals.to_csv());
  w.metric("test_rmse", s.test.rmse);
  w.metric("test_r_squared", metrics["test"]["r_squared"]);
  w.metric("best_hyperparams", detail::hyperparams_json(s.best));
  w.commit();

  detail::log_line(ctx, "best lr=", format_double(s.best.learning_rate), " depth=", s.best.max_depth,
                   " trees=", s.best.n_trees, "; test rmse ", format_double(s.test.rmse), ", r2 ",
                   format_double(s.test.r_squared), ", residual mean ", format_double(residuals.mean));
  return s;
}

// ---- optimize -----------------------------------------------------------

struct OptimizeSummary {
  RevenueReport report;
  PolicyCandidate best;
  std::size_t candidates = 0;
  std::size_t feasible = 0;
};

inline OptimizeSummary cmd_optimize(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const Prior prior = cfg.prior();
  auto model_text = read_file(ctx.path("model.json"));
  auto population = detail::load_population(ctx);
  auto instances = detail::load_instances(ctx);
  const std::size_t n = std::min(cfg.search.mc_auctions, instances.size());
  std::span<const AuctionInstance> eval(instances.data(), n);
  const std::uint64_t seed = ctx.stream("search");

  PolicyEvaluator evaluate;
  std::optional<PaymentTable> table;
  switch (cfg.evaluator) {
    case EvaluationMode::MlCounterfactual: {
      GbmModel model;
      try {
        model = GbmModel::from_json(nlohmann::json::parse(model_text));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("model.json: ") + e.what());
      }
      table = ml_payment_table(model, cfg.layout(), population, eval, seed);
      break;
    }
    case EvaluationMode::Behavioral:
      table = behavioral_payment_table(cfg.market, cfg.vocabulary, population, eval, seed);
      break;
    case EvaluationMode::Rational:
      evaluate = [&](const SignalingPolicy& p) {
        return estimate_revenue_rational(p, population, eval, cfg.states, prior);
      };
      break;
  }
  if (table) evaluate = [&](const SignalingPolicy& p) { return table->revenue(p); };

  auto candidates = build_candidates(cfg.search, cfg.states, cfg.vocabulary);
  FeasibilityCheck feasible;
  if (cfg.search.credibility) {
    feasible = [&](const SignalingPolicy& p) {
      return is_credible(p, cfg.states, cfg.vocabulary, prior, cfg.search.delta);
    };
  }
  auto result = optimize_policy(candidates, evaluate, feasible, ctx.threads);

  OptimizeSummary s;
  s.best = result.best;
  s.candidates = candidates.size();
  for (const auto& a : result.audit) s.feasible += a.feasible ? 1 : 0;

  std::vector<NamedPolicy> policies{{"full", full_disclosure(cfg.states, cfg.vocabulary)},
                                    {"none", no_disclosure(cfg.states, cfg.vocabulary)},
                                    {"opt", result.best.policy}};
  for (const auto& [name, p] : cfg.policies) {
    if (name != "full" && name != "none" && name != "opt") policies.push_back({name, p});
  }
  s.report = compare_policies(policies, evaluate, cfg.evaluator, n, seed);
  s.report.metadata = {
      {"config_digest", config_digest(cfg)},
      {"master_seed", cfg.seed},
      {"training_policy", cfg.simulate_policy},
      {"training_note", cfg.simulate_policy == "exploration"
                            ? "predictor trained on auctions whose signals were drawn uniformly and independently "
                              "of the state, so every signal has support for every bidder"
                            : "predictor trained on a state-dependent policy; counterfactual signals may extrapolate"},
      {"search_mode", std::string(to_string(cfg.search.mode))},
      {"candidates", s.candidates},
      {"feasible_candidates", s.feasible},
      {"credibility", cfg.search.credibility},
      {"delta", cfg.search.delta},
      {"best_tag", result.best.tag},
      {"best_params", result.best.params},
      {"best_policy", result.best.policy.rows()},
  };

  nlohmann::json best = {{"tag", result.best.tag},
                         {"params", result.best.params},
                         {"policy", result.best.policy.rows()},
                         {"revenue", result.revenue},
                         {"credible", is_credible(result.best.policy, cfg.states, cfg.vocabulary, prior,
                                                  cfg.search.delta)},
                         {"signals", cfg.vocabulary.labels()},
                         {"states", cfg.states.labels()}};

  detail::ArtifactWriter w(ctx);
  w.write("revenue_report.json", s.report.to_json().dump(2) + '\n');
  w.write("revenue_report.csv", s.report.to_csv());
  w.write("search_audit.csv", audit_to_csv(result.audit));
  w.write("best_policy.json", best.dump(2) + '\n');
  w.metric("revenue", {{"full", s.report.entry("full").total},
                       {"none", s.report.entry("none").total},
                       {"opt", s.report.entry("opt").total}});
  w.metric("increase_opt_over_full_percent", s.report.increase("full", "opt"));
  w.metric("increase_opt_over_none_percent", s.report.increase("none", "opt"));
  w.commit();

  detail::log_line(ctx, "evaluated ", s.candidates, " candidates (", s.feasible, " credible) on ", n,
                   " auctions, mode ", to_string(cfg.evaluator));
  for (const auto& e : s.report.entries) {
    detail::log_line(ctx, "  R[", e.name, "] = ", format_double(e.total));
  }
  detail::log_line(ctx, "  increase over full: ", format_double(s.report.increase("full", "opt")),
                   "%, over none: ", format_double(s.report.increase("none", "opt")), "%");
  return s;
}

// ---- verify -------------------------------------------------------------

/// Returns an exit code: 0 when the chain and every replayed outcome check out.
inline int cmd_verify(const fs::path& ledger_path, std::ostream& log) {
  std::string text;
  try {
    text = read_file(ledger_path);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitMissingInput;
  }
  std::optional<LedgerLoadError> load_error;
  Ledger ledger = ledger_from_jsonl(text, &load_error);
  if (load_error) {
    log << "verification failed: unreadable entry " << load_error->line_index << '\n';
    return kExitVerification;
  }
  auto check = verify_chain(ledger);
  if (!check.ok) {
    log << "verification failed: first bad entry " << *check.first_bad << '\n';
    return kExitVerification;
  }
  try {
    replay(ledger);
  } catch (const Error& e) {
    log << "replay failed: " << e.what() << '\n';
    return kExitVerification;
  }
  log << "ok: " << ledger.size() << " entries, head " << to_hex(ledger.head()) << '\n';
  return kExitOk;
}

// ---- report -------------------------------------------------------------

/// Rehashes every artifact on disk and rewrites the manifest.
inline nlohmann::json cmd_report(const RunContext& ctx) {
  detail::ArtifactWriter w(ctx);
  auto manifest = w.manifest();
  nlohmann::json artifacts = nlohmann::json::object();
  for (const auto& [name, _] : manifest["artifacts"].items()) {
    auto p = ctx.path(name);
    if (!fs::exists(p)) continue;
    auto text = read_file(p);
    artifacts[name] = {{"sha256", to_hex(sha256(text))}, {"bytes", text.size()}};
  }
  w.set("artifacts", artifacts);
  if (fs::exists(ctx.path("ledger.jsonl"))) {
    auto ledger = ledger_from_jsonl(read_file(ctx.path("ledger.jsonl")));
    w.set("ledger_head", to_hex(ledger.head()));
  }
  w.commit();

  detail::log_line(ctx, "config digest ", w.manifest()["config_digest"].get<std::string>());
  for (const auto& [name, a] : w.manifest()["artifacts"].items()) {
    detail::log_line(ctx, "  ", name, "  ", a["sha256"].get<std::string>());
  }
  for (const auto& [key, v] : w.manifest()["metrics"].items()) detail::log_line(ctx, "  ", key, ": ", v.dump());
  return w.manifest();
}

}  // namespace persuade
