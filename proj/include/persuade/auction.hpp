#pragma once

// Sealed-bid second-price auction and the order-statistic estimators built on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "persuade/error.hpp"

namespace persuade {

using AdvertiserId = std::uint32_t;

struct Bid {
  AdvertiserId advertiser = 0;
  double amount = 0.0;
};

class BidSet {
 public:
  BidSet() = default;
  explicit BidSet(std::vector<Bid> entries) : entries_(std::move(entries)) {
    std::unordered_set<AdvertiserId> seen;
    for (const auto& b : entries_) {
      if (!(b.amount >= 0.0) || !std::isfinite(b.amount)) {
        throw Error(ErrorCode::InvalidArgument, "bids must be finite and >= 0");
      }
      if (!seen.insert(b.advertiser).second) {
        throw Error(ErrorCode::DuplicateBidder,
                    "advertiser " + std::to_string(b.advertiser) + " bids twice");
      }
    }
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Bid>& entries() const noexcept { return entries_; }
  const Bid& operator[](std::size_t i) const { return entries_[i]; }

 private:
  std::vector<Bid> entries_;
};

struct AuctionOutcome {
  AdvertiserId winner = 0;
  std::size_t winner_index = 0;  // position of the winner inside the BidSet
  double payment = 0.0;
  double second_highest = 0.0;
  std::vector<bool> win_flags;  // aligned with BidSet order

  bool operator==(const AuctionOutcome&) const = default;
};

/// Highest bid wins (ties to the lowest advertiser id) and pays the best competing
/// bid; a lone bidder pays nothing.
inline AuctionOutcome run_auction(const BidSet& bids) {
  if (bids.empty()) throw Error(ErrorCode::EmptyBidSet, "auction has no bids");

  std::size_t best = 0;
  for (std::size_t i = 1; i < bids.size(); ++i) {
    const Bid& b = bids[i];
    const Bid& w = bids[best];
    if (b.amount > w.amount || (b.amount == w.amount && b.advertiser < w.advertiser)) best = i;
  }

  double second = 0.0;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (i != best) second = std::max(second, bids[i].amount);
  }

  AuctionOutcome out;
  out.winner = bids[best].advertiser;
  out.winner_index = best;
  out.payment = second;
  out.second_highest = second;
  out.win_flags.assign(bids.size(), false);
  out.win_flags[best] = true;
  return out;
}

/// Monte Carlo estimate of E[b_(2)]: the mean second-price payment over the samples.
inline double expected_second_highest(std::span<const BidSet> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no bid samples");
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() < 2) {
      throw Error(ErrorCode::DegenerateAuction, "sample " + std::to_string(i) + " has < 2 bids");
    }
    total += run_auction(samples[i]).payment;
  }
  return total / static_cast<double>(samples.size());
}

/// Right-continuous empirical CDF F(b) = #{samples <= b} / n.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) throw Error(ErrorCode::EmptyInput, "empirical CDF needs samples");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double b) const {
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), b);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  const std::vector<double>& sorted() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

inline EmpiricalCdf empirical_bid_cdf(std::vector<double> bids) { return EmpiricalCdf(std::move(bids)); }

}  // namespace persuade
