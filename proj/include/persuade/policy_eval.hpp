#pragma once

// Platform revenue under a signaling policy: exact rational evaluation, and Monte Carlo
// evaluation over fixed auction instances with common random numbers.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "persuade/auction.hpp"
#include "persuade/core.hpp"
#include "persuade/error.hpp"
#include "persuade/format.hpp"
#include "persuade/gbm.hpp"
#include "persuade/market.hpp"
#include "persuade/predictor.hpp"
#include "persuade/rng.hpp"

namespace persuade {

enum class EvaluationMode { Rational, Behavioral, MlCounterfactual };

inline std::string_view to_string(EvaluationMode mode) {
  switch (mode) {
    case EvaluationMode::Rational: return "rational";
    case EvaluationMode::Behavioral: return "behavioral";
    case EvaluationMode::MlCounterfactual: return "ml-counterfactual";
  }
  return "?";
}

inline EvaluationMode evaluation_mode_from_string(std::string_view s) {
  if (s == "rational") return EvaluationMode::Rational;
  if (s == "behavioral") return EvaluationMode::Behavioral;
  if (s == "ml-counterfactual" || s == "ml") return EvaluationMode::MlCounterfactual;
  throw Error(ErrorCode::ConfigError, "unknown evaluation mode '" + std::string(s) + "'");
}

// ---- rational bidders ---------------------------------------------------

/// Expected second-price revenue when every participant bids its posterior expected
/// valuation: sum over signals of marginal(s) * second-highest v_hat(s). No sampling.
inline double estimate_revenue_rational(const SignalingPolicy& policy, std::span<const ValuationProfile> participants,
                                        const Prior& prior) {
  auto marginal = signal_marginal(policy, prior);
  if (participants.size() < 2) return 0.0;
  double revenue = 0.0;
  std::vector<Bid> bids(participants.size());
  for (std::size_t s = 0; s < policy.signals(); ++s) {
    if (!(marginal[s] > 0.0)) continue;
    Posterior post = bayes_update(policy, prior, s);
    for (std::size_t i = 0; i < participants.size(); ++i) {
      bids[i] = {static_cast<AdvertiserId>(i), optimal_bid(expected_valuation(post, participants[i]))};
    }
    revenue += marginal[s] * run_auction(BidSet(bids)).payment;
  }
  return revenue;
}

/// Rational bidders over concrete auction instances: each auction contributes
/// sum_s sigma(s | theta_j) * second-highest v_hat(s) among its participants.
inline double estimate_revenue_rational(const SignalingPolicy& policy, const std::vector<AdvertiserProfile>& population,
                                        std::span<const AuctionInstance> instances, const StateSpace& states,
                                        const Prior& prior) {
  auto marginal = signal_marginal(policy, prior);
  std::vector<Posterior> posteriors(policy.signals());
  for (std::size_t s = 0; s < policy.signals(); ++s) {
    if (marginal[s] > 0.0) posteriors[s] = bayes_update(policy, prior, s);
  }
  double revenue = 0.0;
  for (const auto& inst : instances) {
    if (inst.participants.size() < 2) continue;
    for (std::size_t s = 0; s < policy.signals(); ++s) {
      double w = policy(inst.true_state, s);
      if (!(w > 0.0)) continue;
      std::vector<Bid> bids;
      for (AdvertiserId id : inst.participants) {
        auto v = valuation_profile(population.at(id), states);
        bids.push_back({id, optimal_bid(expected_valuation(posteriors[s], v))});
      }
      revenue += w * run_auction(BidSet(std::move(bids))).payment;
    }
  }
  return revenue;
}

// ---- Monte Carlo with common random numbers -----------------------------

/// The uniform that selects auction j's signal; shared by every policy evaluated with `seed`.
inline double signal_uniform(std::uint64_t seed, std::uint64_t auction_id) {
  Rng rng(derive_seed(seed, auction_id));
  return uniform01(rng);
}

struct SimulatedAuctions {
  std::vector<std::size_t> signals;
  std::vector<BidSet> bids;
};

inline void require_feature_match(const GbmModel& model, const FeatureLayout& layout) {
  if (model.columns != layout.columns()) {
    throw Error(ErrorCode::FeatureMismatch, "model feature manifest does not match the instance encoding");
  }
}

inline BidSet predicted_bids(const GbmModel& model, const FeatureLayout& layout,
                             const std::vector<AdvertiserProfile>& population, const AuctionInstance& inst,
                             std::size_t signal) {
  std::vector<double> row(layout.width());
  std::vector<Bid> bids;
  bids.reserve(inst.participants.size());
  for (AdvertiserId id : inst.participants) {
    const auto& p = population.at(id);
    layout.encode(signal, p.budget, p.industry, p.aggressiveness, inst.context, row);
    bids.push_back({id, model.predict(row)});
  }
  return BidSet(std::move(bids));
}

/// Draws each auction's signal from sigma(. | theta_j) and predicts every participant's bid.
inline SimulatedAuctions simulate_bids_under_policy(const GbmModel& model, const FeatureLayout& layout,
                                                    const std::vector<AdvertiserProfile>& population,
                                                    std::span<const AuctionInstance> instances,
                                                    const SignalingPolicy& policy, std::uint64_t seed) {
  require_feature_match(model, layout);
  require_valid(policy);
  if (policy.signals() != layout.signals) throw Error(ErrorCode::FeatureMismatch, "policy/vocabulary size differs");
  SimulatedAuctions out;
  out.signals.reserve(instances.size());
  out.bids.reserve(instances.size());
  for (const auto& inst : instances) {
    std::size_t s = draw_index(policy.row(inst.true_state), signal_uniform(seed, inst.auction_id));
    out.signals.push_back(s);
    out.bids.push_back(predicted_bids(model, layout, population, inst, s));
  }
  return out;
}

/// R = sum over auctions of the second-price payment.
inline double estimate_revenue_mc(std::span<const BidSet> bid_sets) {
  double total = 0.0;
  for (std::size_t j = 0; j < bid_sets.size(); ++j) {
    if (bid_sets[j].size() < 2) {
      throw Error(ErrorCode::DegenerateAuction, "auction " + std::to_string(j) + " has < 2 bids");
    }
    total += run_auction(bid_sets[j]).payment;
  }
  return total;
}

/// Per-auction, per-signal payments precomputed once; evaluating a policy then only
/// selects each auction's signal with its common uniform. Sums run in auction order,
/// so totals equal estimate_revenue_mc over simulate_bids_under_policy exactly.
class PaymentTable {
 public:
  PaymentTable(std::size_t signals, std::vector<std::size_t> states, std::vector<double> uniforms,
               std::vector<double> payments)
      : signals_(signals), states_(std::move(states)), uniforms_(std::move(uniforms)), payments_(std::move(payments)) {
    if (uniforms_.size() != states_.size() || payments_.size() != states_.size() * signals_) {
      throw Error(ErrorCode::DimensionMismatch, "payment table shape");
    }
  }

  std::size_t auctions() const noexcept { return states_.size(); }
  std::size_t signals() const noexcept { return signals_; }
  double payment(std::size_t auction, std::size_t signal) const { return payments_[auction * signals_ + signal]; }

  std::size_t signal_for(const SignalingPolicy& policy, std::size_t auction) const {
    return draw_index(policy.row(states_[auction]), uniforms_[auction]);
  }

  double revenue(const SignalingPolicy& policy) const {
    double total = 0.0;
    for (std::size_t j = 0; j < states_.size(); ++j) total += payments_[j * signals_ + signal_for(policy, j)];
    return total;
  }

 private:
  std::size_t signals_;
  std::vector<std::size_t> states_;
  std::vector<double> uniforms_;
  std::vector<double> payments_;
};

inline PaymentTable ml_payment_table(const GbmModel& model, const FeatureLayout& layout,
                                     const std::vector<AdvertiserProfile>& population,
                                     std::span<const AuctionInstance> instances, std::uint64_t seed) {
  require_feature_match(model, layout);
  std::vector<std::size_t> states;
  std::vector<double> uniforms, payments;
  for (const auto& inst : instances) {
    if (inst.participants.size() < 2) {
      throw Error(ErrorCode::DegenerateAuction, "auction " + std::to_string(inst.auction_id) + " has < 2 bidders");
    }
    states.push_back(inst.true_state);
    uniforms.push_back(signal_uniform(seed, inst.auction_id));
    for (std::size_t s = 0; s < layout.signals; ++s) {
      payments.push_back(run_auction(predicted_bids(model, layout, population, inst, s)).payment);
    }
  }
  return PaymentTable(layout.signals, std::move(states), std::move(uniforms), std::move(payments));
}

/// Behavioral responders with noise fixed per (auction, participant) across policies.
inline PaymentTable behavioral_payment_table(const MarketConfig& config, const SignalVocabulary& vocab,
                                             const std::vector<AdvertiserProfile>& population,
                                             std::span<const AuctionInstance> instances, std::uint64_t seed) {
  std::vector<std::size_t> states;
  std::vector<double> uniforms, payments;
  for (const auto& inst : instances) {
    if (inst.participants.size() < 2) {
      throw Error(ErrorCode::DegenerateAuction, "auction " + std::to_string(inst.auction_id) + " has < 2 bidders");
    }
    states.push_back(inst.true_state);
    uniforms.push_back(signal_uniform(seed, inst.auction_id));
    Rng rng(derive_seed(derive_seed(seed, "noise"), inst.auction_id));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> eps;
    for (std::size_t i = 0; i < inst.participants.size(); ++i) eps.push_back(config.noise_scale * noise(rng));
    for (std::size_t s = 0; s < vocab.size(); ++s) {
      std::vector<Bid> bids;
      for (std::size_t i = 0; i < inst.participants.size(); ++i) {
        const auto& p = population.at(inst.participants[i]);
        bids.push_back({p.id, true_bid(vocab.face_value(s), p, inst.context, eps[i], config)});
      }
      payments.push_back(run_auction(BidSet(std::move(bids))).payment);
    }
  }
  return PaymentTable(vocab.size(), std::move(states), std::move(uniforms), std::move(payments));
}

// ---- reports ------------------------------------------------------------

inline double revenue_increase_percent(double baseline, double improved) {
  if (baseline == 0.0) throw Error(ErrorCode::InvalidArgument, "baseline revenue is zero");
  return (improved - baseline) / baseline * 100.0;
}

struct NamedPolicy {
  std::string name;
  SignalingPolicy policy;
};

struct RevenueEntry {
  std::string name;
  double total = 0.0;
  double mean_payment = 0.0;
};

struct RevenueIncrease {
  std::string baseline;
  std::string target;
  double percent = 0.0;
};

struct RevenueReport {
  EvaluationMode mode = EvaluationMode::MlCounterfactual;
  std::size_t auctions = 0;
  std::uint64_t seed = 0;
  std::vector<RevenueEntry> entries;
  std::vector<RevenueIncrease> increases;
  nlohmann::json metadata = nlohmann::json::object();

  const RevenueEntry& entry(std::string_view name) const {
    for (const auto& e : entries) {
      if (e.name == name) return e;
    }
    throw Error(ErrorCode::InvalidArgument, "no revenue entry named " + std::string(name));
  }

  double increase(std::string_view baseline, std::string_view target) const {
    for (const auto& i : increases) {
      if (i.baseline == baseline && i.target == target) return i.percent;
    }
    throw Error(ErrorCode::InvalidArgument, "no increase " + std::string(baseline) + "->" + std::string(target));
  }

  nlohmann::json to_json() const {
    nlohmann::json je = nlohmann::json::array();
    for (const auto& e : entries) {
      je.push_back({{"name", e.name}, {"total_revenue", e.total}, {"mean_payment", e.mean_payment}});
    }
    nlohmann::json ji = nlohmann::json::array();
    for (const auto& i : increases) {
      ji.push_back({{"baseline", i.baseline}, {"target", i.target}, {"increase_percent", i.percent}});
    }
    return {{"mode", std::string(to_string(mode))},
            {"auctions", auctions},
            {"seed", seed},
            {"policies", std::move(je)},
            {"increases", std::move(ji)},
            {"metadata", metadata}};
  }

  std::string to_csv() const {
    std::string out = "kind,name,baseline,value\n";
    for (const auto& e : entries) {
      out += "total_revenue," + e.name + ",," + format_double(e.total) + '\n';
      out += "mean_payment," + e.name + ",," + format_double(e.mean_payment) + '\n';
    }
    for (const auto& i : increases) {
      out += "increase_percent," + i.target + ',' + i.baseline + ',' + format_double(i.percent) + '\n';
    }
    return out;
  }
};

/// Evaluates every policy with the same evaluator (and therefore the same random
/// numbers) and reports each ordered pair's percentage increase.
template <typename Evaluator>
RevenueReport compare_policies(const std::vector<NamedPolicy>& policies, Evaluator&& evaluate, EvaluationMode mode,
                               std::size_t auctions, std::uint64_t seed) {
  if (policies.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two policies to compare");
  RevenueReport report;
  report.mode = mode;
  report.auctions = auctions;
  report.seed = seed;
  for (const auto& np : policies) {
    double total = evaluate(np.policy);
    report.entries.push_back({np.name, total, auctions ? total / static_cast<double>(auctions) : 0.0});
  }
  for (const auto& base : report.entries) {
    for (const auto& target : report.entries) {
      if (base.name == target.name || base.total == 0.0) continue;
      report.increases.push_back({base.name, target.name, revenue_increase_percent(base.total, target.total)});
    }
  }
  return report;
}

// ---- residuals ----------------------------------------------------------

struct ResidualSummary {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> decile_mean_residual;
  std::vector<double> decile_mean_predicted;
  std::vector<double> histogram_edges;  // bins + 1 edges
  std::vector<std::size_t> histogram_counts;
  double outlier_share = 0.0;  // share of |residual - mean| > 3 std
  std::size_t count = 0;

  nlohmann::json to_json() const {
    return {{"count", count},
            {"mean", mean},
            {"std", std},
            {"decile_mean_residual", decile_mean_residual},
            {"decile_mean_predicted", decile_mean_predicted},
            {"histogram_edges", histogram_edges},
            {"histogram_counts", histogram_counts},
            {"outlier_share", outlier_share}};
  }

  std::string to_csv() const {
    std::string out = "section,index,low,high,value\n";
    for (std::size_t b = 0; b < histogram_counts.size(); ++b) {
      out += "histogram," + std::to_string(b) + ',' + format_double(histogram_edges[b]) + ',' +
             format_double(histogram_edges[b + 1]) + ',' + std::to_string(histogram_counts[b]) + '\n';
    }
    for (std::size_t d = 0; d < decile_mean_residual.size(); ++d) {
      out += "decile," + std::to_string(d) + ',' + format_double(decile_mean_predicted[d]) + ",," +
             format_double(decile_mean_residual[d]) + '\n';
    }
    return out;
  }
};

/// residual = actual - predicted; deciles are taken over the predicted-bid ordering.
inline ResidualSummary residual_analysis(std::span<const double> predicted, std::span<const double> actual,
                                         std::size_t bins = 20) {
  if (predicted.size() != actual.size()) throw Error(ErrorCode::LengthMismatch, "prediction/actual lengths differ");
  if (actual.empty()) throw Error(ErrorCode::EmptyInput, "no residuals to analyse");
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "need at least one histogram bin");
  const std::size_t n = actual.size();
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) res[i] = actual[i] - predicted[i];

  ResidualSummary out;
  out.count = n;
  for (double r : res) out.mean += r;
  out.mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : res) var += (r - out.mean) * (r - out.mean);
  out.std = std::sqrt(var / static_cast<double>(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return predicted[a] < predicted[b]; });
  const std::size_t deciles = std::min<std::size_t>(10, n);
  for (std::size_t d = 0; d < deciles; ++d) {
    std::size_t lo = d * n / deciles, hi = (d + 1) * n / deciles;
    double sr = 0.0, sp = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      sr += res[order[k]];
      sp += predicted[order[k]];
    }
    auto cnt = static_cast<double>(hi - lo);
    out.decile_mean_residual.push_back(sr / cnt);
    out.decile_mean_predicted.push_back(sp / cnt);
  }

  auto [mn, mx] = std::minmax_element(res.begin(), res.end());
  double lo = *mn, hi = *mx;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) out.histogram_edges.push_back(b == bins ? hi : lo + width * static_cast<double>(b));
  out.histogram_counts.assign(bins, 0);
  std::size_t outliers = 0;
  for (double r : res) {
    auto b = static_cast<std::size_t>((r - lo) / width);
    out.histogram_counts[std::min(b, bins - 1)] += 1;
    if (out.std > 0.0 && std::abs(r - out.mean) > 3.0 * out.std) ++outliers;
  }
  out.outlier_share = static_cast<double>(outliers) / static_cast<double>(n);
  return out;
}

}  // namespace persuade
