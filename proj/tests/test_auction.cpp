#include <gtest/gtest.h>

#include <random>

#include "persuade/auction.hpp"

using namespace persuade;

TEST(Auction, TextbookSecondPrice) {
  auto out = run_auction(BidSet({{0, 5.0}, {1, 3.0}, {2, 2.0}}));
  EXPECT_EQ(out.winner, 0u);
  EXPECT_EQ(out.payment, 3.0);
  EXPECT_EQ(out.win_flags, (std::vector<bool>{true, false, false}));
}

TEST(Auction, TieGoesToLowestId) {
  auto out = run_auction(BidSet({{7, 4.0}, {3, 4.0}}));
  EXPECT_EQ(out.winner, 3u);
  EXPECT_EQ(out.winner_index, 1u);
  EXPECT_EQ(out.payment, 4.0);
}

TEST(Auction, LoneBidderPaysNothing) {
  auto out = run_auction(BidSet({{0, 7.0}}));
  EXPECT_EQ(out.winner, 0u);
  EXPECT_EQ(out.payment, 0.0);
}

TEST(Auction, Errors) {
  try {
    run_auction(BidSet{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBidSet);
  }
  EXPECT_THROW(BidSet({{1, 2.0}, {1, 3.0}}), Error);
  EXPECT_THROW(BidSet({{1, -2.0}}), Error);
}

TEST(Auction, ExpectedSecondHighest) {
  std::vector<BidSet> one{BidSet({{0, 5}, {1, 3}})};
  EXPECT_EQ(expected_second_highest(one), 3.0);
  std::vector<BidSet> two{BidSet({{0, 5}, {1, 3}}), BidSet({{0, 1}, {1, 4}})};
  EXPECT_EQ(expected_second_highest(two), 2.0);
  std::vector<BidSet> same{BidSet({{0, 2.5}, {1, 2.5}, {2, 2.5}})};
  EXPECT_EQ(expected_second_highest(same), 2.5);
  std::vector<BidSet> none;
  EXPECT_THROW(expected_second_highest(none), Error);
  std::vector<BidSet> lone{BidSet({{0, 1}})};
  EXPECT_THROW(expected_second_highest(lone), Error);
}

TEST(Auction, ExpectedSecondHighestMatchesBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<BidSet> samples;
  double brute = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<Bid> bids;
    for (AdvertiserId a = 0; a < 2 + static_cast<AdvertiserId>(i % 4); ++a) bids.push_back({a, u(rng)});
    samples.emplace_back(bids);
    brute += run_auction(samples.back()).payment;
  }
  EXPECT_EQ(expected_second_highest(samples), brute / 200.0);
}

TEST(Auction, PaymentNeverExceedsWinningBid) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 10);
  for (int i = 0; i < 1000; ++i) {
    std::vector<Bid> bids;
    for (AdvertiserId a = 0; a < 1 + static_cast<AdvertiserId>(i % 6); ++a) bids.push_back({a, std::round(u(rng))});
    BidSet set(bids);
    auto out = run_auction(set);
    EXPECT_LE(out.payment, set[out.winner_index].amount);
  }
}

// Truthful bidding is never strictly beaten by any deviation on a grid.
TEST(Auction, TruthfulBiddingIsDominant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 2000; ++trial) {
    std::size_t n = 2 + trial % 3;
    std::vector<Bid> bids;
    for (AdvertiserId a = 0; a < n; ++a) bids.push_back({a, u(rng)});
    const std::size_t me = trial % n;
    const double v = bids[me].amount;
    auto utility = [&](double b) {
      auto copy = bids;
      copy[me].amount = b;
      auto out = run_auction(BidSet(copy));
      return out.winner_index == me ? v - out.payment : 0.0;
    };
    const double truthful = utility(v);
    for (int g = 0; g < 50; ++g) EXPECT_LE(utility(12.0 * g / 49.0), truthful + 1e-12);
  }
}

TEST(Cdf, Examples) {
  auto cdf = empirical_bid_cdf({1, 2, 3});
  EXPECT_DOUBLE_EQ(cdf(2), 2.0 / 3.0);
  EXPECT_EQ(cdf(0.5), 0.0);
  EXPECT_EQ(cdf(3), 1.0);
  EXPECT_EQ(cdf(100), 1.0);
  double prev = 0.0;
  for (double q = 0; q < 4; q += 0.1) {
    EXPECT_GE(cdf(q), prev);
    prev = cdf(q);
  }
}
