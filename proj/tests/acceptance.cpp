// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
// Pass "reduced" as the first argument to train on the 8-point grid instead of 27.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "persuade/pipeline.hpp"
#include "test_support.hpp"

using namespace persuade;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::function<void(Verdict&)>& body) {
  Verdict v;
  auto start = Clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("AC%d %s (%.2fs)%s\n", id, v.pass ? "PASS" : "FAIL", secs, v.detail.str().c_str());
  std::fflush(stdout);
}

double elapsed(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

SignalingPolicy random_policy(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SignalingPolicy p(n, m);
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0.0;
    for (std::size_t s = 0; s < m; ++s) sum += (p(k, s) = u(rng) < 0.25 ? 0.0 : u(rng));
    if (sum == 0.0) sum = p(k, 0) = 1.0;
    for (std::size_t s = 0; s < m; ++s) p(k, s) /= sum;
  }
  return p;
}

// Brute-force revenue for two bidders over two states, written without the library.
double oracle_revenue(const std::vector<std::size_t>& signal_of_state, const double va[2], const double vb[2]) {
  double revenue = 0.0;
  for (std::size_t s = 0; s < 2; ++s) {
    double mass = 0.0, ea = 0.0, eb = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      if (signal_of_state[k] != s) continue;
      mass += 0.5;
      ea += 0.5 * va[k];
      eb += 0.5 * vb[k];
    }
    if (mass == 0.0) continue;
    revenue += mass * std::min(ea / mass, eb / mass);
  }
  return revenue;
}

std::vector<std::string> compared_files() {
  return {"population.csv", "instances.jsonl", "dataset.csv", "dataset.jsonl", "ledger.jsonl",
          "model.json",     "metrics.json",    "leaderboard.csv", "revenue_report.json", "revenue_report.csv",
          "search_audit.csv", "best_policy.json", "residuals.json", "config.json", "manifest.json"};
}

}  // namespace

int main(int argc, char** argv) {
  const bool reduced = argc > 1 && std::string(argv[1]) == "reduced";
  testing_support::TempDir workspace("acceptance");
  const ExperimentConfig defaults;
  auto main_run = make_context(defaults, workspace.path() / "main");

  // 1. Bayes updating on the hand fixture and plausibility over random policies.
  report(1, [&](Verdict& v) {
    auto start = Clock::now();
    SignalingPolicy p({{0.5, 0.5}, {0.25, 0.75}});
    auto post = bayes_update(p, Prior({0.5, 0.5}), 0);
    v.require(std::abs(post.probs[0] - 2.0 / 3.0) <= 1e-12 && std::abs(post.probs[1] - 1.0 / 3.0) <= 1e-12,
              "posterior (2/3, 1/3)");
    std::mt19937_64 rng(1);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      std::size_t n = 2 + t % 4, m = 2 + (t / 4) % 4;
      auto policy = random_policy(rng, n, m);
      std::vector<double> pr(n);
      double sum = 0.0;
      for (auto& x : pr) sum += (x = 0.05 + std::uniform_real_distribution<double>(0, 1)(rng));
      for (auto& x : pr) x /= sum;
      Prior prior(pr);
      auto marginal = signal_marginal(policy, prior);
      std::vector<double> rebuilt(n, 0.0);
      for (std::size_t s = 0; s < m; ++s) {
        if (marginal[s] <= 0.0) continue;
        auto q = bayes_update(policy, prior, s);
        for (std::size_t k = 0; k < n; ++k) rebuilt[k] += marginal[s] * q.probs[k];
      }
      for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(rebuilt[k] - pr[k]));
    }
    v.require(worst <= 1e-9, "prior reconstruction");
    double secs = elapsed(start);
    v.require(secs < 1.0, "runtime < 1 s");
    v.detail << " max prior error " << worst;
  });

  // 2. No profitable deviation from truthful bidding.
  report(2, [&](Verdict& v) {
    auto start = Clock::now();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::size_t instances = 0, violations = 0;
    for (int t = 0; t < 10000; ++t) {
      std::size_t n = 2 + t % 3;
      std::vector<Bid> bids;
      for (AdvertiserId a = 0; a < n; ++a) bids.push_back({a, u(rng)});
      // Exact ties exercise the tie-breaking rule.
      if (t % 10 == 0) bids[1].amount = bids[0].amount;
      const std::size_t me = t % n;
      const double value = bids[me].amount;
      auto utility = [&](double b) {
        auto copy = bids;
        copy[me].amount = b;
        auto out = run_auction(BidSet(copy));
        return out.winner_index == me ? value - out.payment : 0.0;
      };
      const double truthful = utility(value);
      for (int g = 0; g < 50; ++g) {
        if (utility(12.0 * g / 49.0) > truthful) ++violations;
      }
      ++instances;
    }
    v.require(violations == 0, "truthful bidding dominated");
    v.require(elapsed(start) < 30.0, "runtime < 30 s");
    v.detail << " " << instances << " instances x 50 deviations, " << violations << " violations";
  });

  // 3. Pooling oracle against an independent enumeration.
  report(3, [&](Verdict& v) {
    testing_support::PoolingOracle o;
    auto evaluate = [&](const SignalingPolicy& p) { return estimate_revenue_rational(p, o.bidders, o.prior); };
    double full = evaluate(full_disclosure(o.states, o.vocab));
    double none = evaluate(no_disclosure(o.states, o.vocab));
    v.require(full == 1.5, "R_full = 1.5");
    v.require(none == 2.0, "R_none = 2.0");
    SearchConfig cfg;
    cfg.mode = SearchMode::PartitionEnumeration;
    auto result = optimize_policy(build_candidates(cfg, o.states, o.vocab), evaluate);
    const double va[2] = {1, 3}, vb[2] = {2, 2};
    double brute = 0.0;
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t b = 0; b < 2; ++b) brute = std::max(brute, oracle_revenue({a, b}, va, vb));
    }
    v.require(result.revenue >= 2.0, "optimizer >= 2.0");
    v.require(result.revenue == brute, "optimizer equals exhaustive enumeration");
    v.detail << " R_full=" << full << " R_none=" << none << " R_opt=" << result.revenue << " brute=" << brute;
  });

  // 4. Bid statistics of the default-seed dataset.
  std::optional<SimulateSummary> simulated;
  report(4, [&](Verdict& v) {
    auto start = Clock::now();
    cmd_generate(main_run);
    simulated = cmd_simulate(main_run, defaults.simulate_policy);
    const auto& b = simulated->bids;
    v.require(b.count == 80000, "80,000 bids");
    v.require(b.mean >= 4.25 && b.mean <= 5.75, "mean in [4.25, 5.75]");
    v.require(b.std >= 1.5 && b.std <= 3.5, "std in [1.5, 3.5]");
    v.require(b.min >= 0.1 && b.max <= 20.0, "range within [0.1, 20]");
    v.require(elapsed(start) < 10.0, "runtime < 10 s");
    v.detail << " mean " << b.mean << ", std " << b.std << ", min " << b.min << ", max " << b.max;
  });

  // 5. Predictor quality on held-out auctions.
  std::optional<TrainSummary> trained;
  report(5, [&](Verdict& v) {
    if (!simulated) throw std::runtime_error("dataset unavailable");
    auto start = Clock::now();
    auto grid = reduced ? HyperparamGrid::reduced() : HyperparamGrid{};
    trained = cmd_train(main_run, grid);
    double secs = elapsed(start);
    const double sigma = defaults.market.noise_scale;
    v.require(trained->test.r_squared >= 0.80, "R^2 >= 0.80");
    v.require(std::abs(trained->test.rmse - sigma) <= 0.15 * sigma, "test RMSE within 15% of noise scale");
    v.require(secs < 600.0, "runtime < 10 min");
    v.detail << " " << grid.points().size() << "-point grid, R^2 " << trained->test.r_squared << ", RMSE "
             << trained->test.rmse << " vs noise " << sigma;
  });

  // 6. Revenue formula, optimizer dominance, and a non-canonical winner.
  report(6, [&](Verdict& v) {
    double pct = revenue_increase_percent(9190.47, 10274.72);
    v.require(std::abs(pct - 11.80) <= 0.01, "11.80% from published totals");
    if (!trained) throw std::runtime_error("model unavailable");
    auto opt = cmd_optimize(main_run);
    const auto& r = opt.report;
    double full = r.entry("full").total, none = r.entry("none").total, best = r.entry("opt").total;
    v.require(best >= std::max(full, none), "R_opt >= max(R_full, R_none)");
    auto states = defaults.states;
    auto vocab = defaults.vocabulary;
    bool distinct = !(opt.best.policy == full_disclosure(states, vocab)) &&
                    !(opt.best.policy == no_disclosure(states, vocab));
    v.require(defaults.search.credibility, "credibility enabled");
    v.require(distinct, "optimized policy differs from both canonical policies");
    const std::string weaker = full < none ? "full" : "none";
    double inc = r.increase(weaker, "opt");
    v.require(inc > 0.0, "positive increase over weaker canonical policy");
    v.detail << " worked example " << pct << "%; R_full " << full << ", R_none " << none << ", R_opt " << best
             << " (" << opt.best.params << "), +" << inc << "% over " << weaker << ", +" << r.increase("full", "opt")
             << "% over full";
  });

  // 7. GBM internals.
  report(7, [&](Verdict& v) {
    if (!trained) throw std::runtime_error("model unavailable");
    v.require(trained->mse_non_increasing, "training MSE non-increasing on the default run");
    auto text = read_file(main_run.path("model.json"));
    auto model = GbmModel::from_json(nlohmann::json::parse(text));
    auto again = GbmModel::from_json(nlohmann::json::parse(model.to_json().dump()));
    auto records = records_from_csv(read_file(main_run.path("dataset.csv")));
    auto data = build_features(records, defaults.layout());
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < data.size(); i += 7) {
      double a = model.predict(data.features.row(i)), b = again.predict(data.features.row(i));
      if (std::memcmp(&a, &b, sizeof a) != 0) ++mismatches;
    }
    v.require(mismatches == 0 && model.to_json().dump() + '\n' == text, "JSON round trip bit-exact");

    std::vector<std::size_t> rows(1000);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    auto sample = data.subset(rows);
    std::vector<std::size_t> perm = rows;
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(7));
    auto shuffled = sample.subset(perm);
    Hyperparams hp = trained->best;
    hp.min_samples_leaf = std::min(hp.min_samples_leaf, 20);
    auto m1 = train_gbm(sample.features, sample.targets, hp);
    auto m2 = train_gbm(shuffled.features, shuffled.targets, hp);
    std::size_t perm_mismatch = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      double a = m1.predict(sample.features.row(i)), b = m2.predict(sample.features.row(i));
      if (std::memcmp(&a, &b, sizeof a) != 0) ++perm_mismatch;
    }
    v.require(perm_mismatch == 0, "row-permutation invariance");
    v.detail << " " << model.trees.size() << " trees, round-trip mismatches " << mismatches
             << ", permutation mismatches " << perm_mismatch;
  });

  // 8. Ledger tamper evidence on the 10,000-entry ledger.
  report(8, [&](Verdict& v) {
    if (!simulated) throw std::runtime_error("ledger unavailable");
    auto start = Clock::now();
    auto ledger = ledger_from_jsonl(read_file(main_run.path("ledger.jsonl")));
    v.require(ledger.size() == 10000, "10,000 entries");
    v.require(verify_chain(ledger).ok, "untampered ledger verifies");
    replay(ledger);

    std::mt19937_64 rng(8);
    std::size_t detected = 0;
    for (int t = 0; t < 1000; ++t) {
      std::size_t i = rng() % ledger.size();
      auto& e = ledger.mutable_entries()[i];
      // Choose uniformly among the entry's serialized bits.
      const std::size_t bits = 64 + 256 + 8 * e.record.size() + 256;
      std::size_t b = rng() % bits;
      auto flip = [&] {
        if (b < 64) {
          e.sequence ^= std::uint64_t{1} << b;
        } else if (b < 320) {
          e.previous[(b - 64) / 8] ^= static_cast<std::uint8_t>(1u << ((b - 64) % 8));
        } else if (b < 320 + 8 * e.record.size()) {
          e.record[(b - 320) / 8] ^= static_cast<char>(1u << ((b - 320) % 8));
        } else {
          std::size_t h = b - 320 - 8 * e.record.size();
          e.hash[h / 8] ^= static_cast<std::uint8_t>(1u << (h % 8));
        }
      };
      flip();
      auto check = verify_chain(ledger);
      if (!check.ok && check.first_bad == i) ++detected;
      flip();
    }
    v.require(detected == 1000, "every corruption detected at its entry");
    v.require(verify_chain(ledger).ok, "ledger restored");

    auto second = make_context(defaults, workspace.path() / "ledger_repeat");
    cmd_generate(second);
    auto again = cmd_simulate(second, defaults.simulate_policy);
    v.require(again.ledger_head == simulated->ledger_head, "head hash reproducible");
    v.require(elapsed(start) < 30.0, "runtime < 30 s");
    v.detail << " " << detected << "/1000 detected, head " << simulated->ledger_head.substr(0, 16) << "...";
  });

  // 9. Two complete runs with the same master seed.
  report(9, [&](Verdict& v) {
    auto a = make_context(defaults, workspace.path() / "repeat_a", 1);
    auto b = make_context(defaults, workspace.path() / "repeat_b", 2);
    for (auto* ctx : {&a, &b}) {
      cmd_generate(*ctx);
      cmd_simulate(*ctx, defaults.simulate_policy);
      cmd_train(*ctx, HyperparamGrid::reduced());
      cmd_optimize(*ctx);
      cmd_report(*ctx);
    }
    std::size_t differing = 0;
    for (const auto& name : compared_files()) {
      if (read_file(a.path(name)) != read_file(b.path(name))) {
        ++differing;
        v.detail << " differs: " << name;
      }
    }
    v.require(differing == 0, "byte-identical artifacts");
    v.detail << " " << compared_files().size() << " files compared (1 vs 2 threads)";
  });

  return failures == 0 ? 0 : 1;
}
