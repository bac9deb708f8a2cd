#pragma once

// Synthetic advertiser population, auction instances, and the behavioral
// bidding function used to generate the training data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "persuade/auction.hpp"
#include "persuade/core.hpp"
#include "persuade/error.hpp"
#include "persuade/rng.hpp"

namespace persuade {

struct MarketConfig {
  std::size_t population = 1000;
  std::size_t auctions = 10000;
  std::size_t participants = 8;
  std::vector<double> prior{0.3, 0.5, 0.2};
  double budget_mean = 10000.0;
  double budget_std = 2000.0;
  std::size_t sectors = 5;
  std::vector<double> sector_anchors{3.0, 4.0, 5.0, 6.0, 7.0};
  std::size_t time_buckets = 24;
  std::size_t categories = 10;
  double context_effect = 0.0;
  double noise_scale = 1.0;
  double bid_floor = 0.1;
  double bid_cap = 20.0;

  /// Returns the dotted path of the first invalid field, or an empty string.
  std::string first_invalid_field() const {
    if (population == 0) return "market.population";
    if (auctions == 0) return "market.auctions";
    if (participants < 2 || participants > population) return "market.participants";
    try {
      Prior p(prior);
    } catch (const Error&) {
      return "prior";
    }
    if (!(budget_std >= 0.0) || !std::isfinite(budget_mean)) return "market.budget_std";
    if (sectors == 0) return "market.sectors";
    if (sector_anchors.size() != sectors) return "market.sector_anchors";
    for (double a : sector_anchors) {
      if (!(a > 0.0)) return "market.sector_anchors";
    }
    if (time_buckets == 0) return "market.time_buckets";
    if (categories == 0) return "market.categories";
    if (!(noise_scale >= 0.0)) return "market.noise_scale";
    if (!(bid_floor >= 0.0) || !(bid_floor < bid_cap)) return "market.bid_floor";
    return {};
  }

  void validate() const {
    auto field = first_invalid_field();
    if (!field.empty()) throw Error(ErrorCode::ConfigError, field + " is invalid");
  }
};

struct AdvertiserProfile {
  AdvertiserId id = 0;
  double budget = 0.0;
  std::size_t industry = 0;
  double aggressiveness = 0.0;
  double base_value = 0.0;

  bool operator==(const AdvertiserProfile&) const = default;
};

struct AuctionContext {
  std::uint32_t time_bucket = 0;
  std::uint32_t category = 0;

  bool operator==(const AuctionContext&) const = default;
};

struct AuctionInstance {
  std::uint64_t auction_id = 0;
  std::vector<AdvertiserId> participants;  // ascending ids
  std::size_t true_state = 0;
  AuctionContext context;

  bool operator==(const AuctionInstance&) const = default;
};

struct ParticipantRecord {
  AdvertiserId advertiser = 0;
  double budget = 0.0;
  std::size_t industry = 0;
  double aggressiveness = 0.0;
  double bid = 0.0;
  bool won = false;

  bool operator==(const ParticipantRecord&) const = default;
};

/// One settled auction: who took part, what they saw, what they bid, who won.
struct AuctionRecord {
  std::uint64_t auction_id = 0;
  std::size_t signal = 0;
  std::size_t true_state = 0;
  AuctionContext context;
  std::vector<ParticipantRecord> participants;
  AdvertiserId winner = 0;
  double payment = 0.0;

  BidSet bid_set() const {
    std::vector<Bid> bids;
    bids.reserve(participants.size());
    for (const auto& p : participants) bids.push_back({p.advertiser, p.bid});
    return BidSet(std::move(bids));
  }

  bool operator==(const AuctionRecord&) const = default;
};

inline double aggressiveness_factor(double aggressiveness) { return 0.8 + 0.4 * aggressiveness; }

/// v_i(theta) = base_value * multiplier(theta) * (0.8 + 0.4 A_i)
inline double valuation(const AdvertiserProfile& profile, std::size_t state, const StateSpace& states) {
  return profile.base_value * states.multiplier(state) * aggressiveness_factor(profile.aggressiveness);
}

inline ValuationProfile valuation_profile(const AdvertiserProfile& profile, const StateSpace& states) {
  std::vector<double> v(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) v[k] = valuation(profile, k, states);
  return ValuationProfile(std::move(v));
}

inline double context_term(const AuctionContext& context, const MarketConfig& config) {
  if (config.context_effect == 0.0 || config.categories < 2) return 0.0;
  double centred = static_cast<double>(context.category) / static_cast<double>(config.categories - 1) - 0.5;
  return config.context_effect * centred;
}

/// Behavioral bid: the advertiser scales its anchor by the signal's face value.
inline double true_bid(double face_value, const AdvertiserProfile& profile, const AuctionContext& context,
                       double noise, const MarketConfig& config) {
  double raw = profile.base_value * face_value * aggressiveness_factor(profile.aggressiveness) +
               context_term(context, config) + noise;
  return std::clamp(raw, config.bid_floor, config.bid_cap);
}

inline std::vector<AdvertiserProfile> generate_advertisers(const MarketConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  std::normal_distribution<double> budget_dist(config.budget_mean, config.budget_std);
  std::uniform_int_distribution<std::size_t> sector_dist(0, config.sectors - 1);

  std::vector<AdvertiserProfile> out;
  out.reserve(config.population);
  for (std::size_t i = 0; i < config.population; ++i) {
    AdvertiserProfile p;
    p.id = static_cast<AdvertiserId>(i);
    do {
      p.budget = budget_dist(rng);
    } while (p.budget < 100.0);
    p.industry = sector_dist(rng);
    p.aggressiveness = uniform01(rng);
    p.base_value = config.sector_anchors[p.industry];
    out.push_back(p);
  }
  return out;
}

/// Each auction draws from its own substream so instances can be produced in any order.
inline AuctionInstance generate_instance(const MarketConfig& config, std::uint64_t auction_id,
                                         std::uint64_t seed) {
  Rng rng(derive_seed(seed, auction_id));
  AuctionInstance inst;
  inst.auction_id = auction_id;
  inst.true_state = draw_index(config.prior, uniform01(rng));

  // Floyd's sampling without replacement.
  std::unordered_set<AdvertiserId> chosen;
  const std::size_t n = config.population;
  for (std::size_t j = n - config.participants; j < n; ++j) {
    auto t = static_cast<AdvertiserId>(std::uniform_int_distribution<std::size_t>(0, j)(rng));
    if (!chosen.insert(t).second) chosen.insert(static_cast<AdvertiserId>(j));
  }
  inst.participants.assign(chosen.begin(), chosen.end());
  std::sort(inst.participants.begin(), inst.participants.end());

  inst.context.time_bucket =
      static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, config.time_buckets - 1)(rng));
  inst.context.category =
      static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, config.categories - 1)(rng));
  return inst;
}

inline std::vector<AuctionInstance> generate_instances(const MarketConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<AuctionInstance> out;
  out.reserve(config.auctions);
  for (std::size_t j = 0; j < config.auctions; ++j) out.push_back(generate_instance(config, j, seed));
  return out;
}

/// Draws the signal and noisy bids for one instance and settles it.
inline AuctionRecord simulate_auction(const MarketConfig& config, const SignalVocabulary& vocab,
                                      const SignalingPolicy& policy,
                                      const std::vector<AdvertiserProfile>& population,
                                      const AuctionInstance& inst, std::uint64_t seed) {
  Rng rng(derive_seed(seed, inst.auction_id));
  std::normal_distribution<double> noise(0.0, 1.0);

  AuctionRecord rec;
  rec.auction_id = inst.auction_id;
  rec.true_state = inst.true_state;
  rec.context = inst.context;
  rec.signal = draw_index(policy.row(inst.true_state), uniform01(rng));
  const double face = vocab.face_value(rec.signal);

  rec.participants.reserve(inst.participants.size());
  for (AdvertiserId id : inst.participants) {
    const AdvertiserProfile& p = population.at(id);
    double eps = config.noise_scale * noise(rng);
    rec.participants.push_back({p.id, p.budget, p.industry, p.aggressiveness,
                                true_bid(face, p, inst.context, eps, config), false});
  }
  AuctionOutcome outcome = run_auction(rec.bid_set());
  rec.participants[outcome.winner_index].won = true;
  rec.winner = outcome.winner;
  rec.payment = outcome.payment;
  return rec;
}

inline std::vector<AuctionRecord> simulate_on_instances(const MarketConfig& config,
                                                        const SignalVocabulary& vocab,
                                                        const SignalingPolicy& policy,
                                                        const std::vector<AdvertiserProfile>& population,
                                                        const std::vector<AuctionInstance>& instances,
                                                        std::uint64_t seed) {
  config.validate();
  if (auto v = validate_policy(policy, config.prior.size(), vocab.size())) {
    throw Error(v->kind, describe(*v));
  }
  std::vector<AuctionRecord> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    out.push_back(simulate_auction(config, vocab, policy, population, inst, seed));
  }
  return out;
}

/// Full generator: states, participants and context from the "instances" substream,
/// signals and noise from the "signals" substream.
inline std::vector<AuctionRecord> simulate_dataset(const MarketConfig& config, const SignalVocabulary& vocab,
                                                   const SignalingPolicy& policy,
                                                   const std::vector<AdvertiserProfile>& population,
                                                   std::uint64_t seed) {
  auto instances = generate_instances(config, derive_seed(seed, "instances"));
  return simulate_on_instances(config, vocab, policy, population, instances, derive_seed(seed, "signals"));
}

}  // namespace persuade
