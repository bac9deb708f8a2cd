#include <gtest/gtest.h>

#include <random>

#include "persuade/core.hpp"
#include "persuade/rng.hpp"

using namespace persuade;

namespace {

SignalingPolicy random_policy(std::mt19937_64& rng, std::size_t states, std::size_t signals) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SignalingPolicy p(states, signals);
  for (std::size_t k = 0; k < states; ++k) {
    double sum = 0.0;
    for (std::size_t s = 0; s < signals; ++s) {
      // Occasionally zero out a cell so some signals become unreachable.
      p(k, s) = u(rng) < 0.2 ? 0.0 : u(rng);
      sum += p(k, s);
    }
    if (sum == 0.0) {
      p(k, 0) = 1.0;
      sum = 1.0;
    }
    for (std::size_t s = 0; s < signals; ++s) p(k, s) /= sum;
  }
  return p;
}

Prior random_prior(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (auto& x : v) sum += (x = u(rng));
  for (auto& x : v) x /= sum;
  return Prior(v);
}

}  // namespace

TEST(Validate, IdentityIsValid) {
  SignalingPolicy p({{1, 0}, {0, 1}});
  EXPECT_FALSE(validate_policy(p).has_value());
}

TEST(Validate, ShortRowReportsRowSum) {
  SignalingPolicy p({{0.6, 0.3}, {0, 1}});
  auto v = validate_policy(p);
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->kind, ErrorCode::RowSumViolation);
  EXPECT_EQ(v->row, 0u);
  EXPECT_NEAR(v->sum, 0.9, 1e-12);
}

TEST(Validate, NegativeEntryWinsOverRowSum) {
  SignalingPolicy p({{1.2, -0.2}, {0, 1}});
  auto v = validate_policy(p);
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->kind, ErrorCode::NegativeEntry);
  EXPECT_EQ(v->row, 0u);
  EXPECT_EQ(v->col, 1u);
}

TEST(Validate, ShapeAgainstSpaces) {
  SignalingPolicy p({{1, 0}, {0, 1}});
  auto v = validate_policy(p, 3, 2);
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->kind, ErrorCode::DimensionMismatch);
  EXPECT_THROW(SignalingPolicy({{1, 0}, {1}}), Error);
}

TEST(Bayes, FullDisclosureIsPointMass) {
  SignalingPolicy full({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  Prior prior({0.3, 0.5, 0.2});
  for (std::size_t s = 0; s < 3; ++s) {
    auto post = bayes_update(full, prior, s);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(post.probs[k], k == s ? 1.0 : 0.0);
  }
}

TEST(Bayes, ConstantPolicyReturnsPrior) {
  SignalingPolicy constant({{0, 1}, {0, 1}});
  Prior prior({0.3, 0.7});
  auto post = bayes_update(constant, prior, 1);
  EXPECT_NEAR(post.probs[0], 0.3, 1e-12);
  EXPECT_NEAR(post.probs[1], 0.7, 1e-12);
  EXPECT_THROW(bayes_update(constant, prior, 0), Error);
}

TEST(Bayes, HandComputedPartialPolicy) {
  SignalingPolicy p({{0.5, 0.5}, {0.25, 0.75}});
  Prior prior({0.5, 0.5});
  auto post = bayes_update(p, prior, 0);
  EXPECT_NEAR(post.probs[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(post.probs[1], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(signal_marginal(p, prior)[0], 0.375, 1e-12);
}

TEST(Bayes, ZeroProbabilitySignalCode) {
  SignalingPolicy p({{1, 0}, {1, 0}});
  try {
    bayes_update(p, Prior({0.5, 0.5}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroProbabilitySignal);
  }
}

TEST(Bayes, PosteriorsNormalizedAndPlausible) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = 2 + trial % 3, m = 2 + (trial / 3) % 3;
    auto p = random_policy(rng, n, m);
    auto prior = random_prior(rng, n);
    auto marginal = signal_marginal(p, prior);
    std::vector<double> rebuilt(n, 0.0);
    for (std::size_t s = 0; s < m; ++s) {
      if (marginal[s] <= 0.0) continue;
      auto post = bayes_update(p, prior, s);
      double sum = 0.0;
      for (double x : post.probs) {
        EXPECT_GE(x, 0.0);
        sum += x;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
      for (std::size_t k = 0; k < n; ++k) rebuilt[k] += marginal[s] * post.probs[k];
    }
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(rebuilt[k], prior.probs()[k], 1e-9);
  }
}

TEST(Valuation, ExpectedValuationExamples) {
  EXPECT_DOUBLE_EQ(expected_valuation(Posterior{{0, 1}}, ValuationProfile({1, 2})), 2.0);
  EXPECT_NEAR(expected_valuation(Posterior{{0.3, 0.7}}, ValuationProfile({1, 2})), 1.7, 1e-12);
  EXPECT_NEAR(expected_valuation(Posterior{{1.0 / 3, 1.0 / 3, 1.0 / 3}}, ValuationProfile({4, 4, 4})), 4.0, 1e-12);
}

TEST(Valuation, MonotoneInSupportedStates) {
  Posterior post{{0.2, 0.0, 0.8}};
  ValuationProfile base({1, 2, 3});
  double v0 = expected_valuation(post, base);
  EXPECT_GT(expected_valuation(post, ValuationProfile({1.5, 2, 3})), v0);
  EXPECT_GT(expected_valuation(post, ValuationProfile({1, 2, 3.1})), v0);
  EXPECT_EQ(expected_valuation(post, ValuationProfile({1, 9, 3})), v0);
}

TEST(Valuation, NegativeRejected) {
  EXPECT_THROW(ValuationProfile({1, -1}), Error);
  EXPECT_THROW(optimal_bid(-0.5), Error);
}

TEST(Bid, OptimalBidIsIdentity) {
  EXPECT_EQ(optimal_bid(1.7), 1.7);
  EXPECT_EQ(optimal_bid(0.0), 0.0);
  EXPECT_EQ(optimal_bid(2.0), 2.0);
}

TEST(Spaces, Validation) {
  EXPECT_THROW(StateSpace({"a", "a"}, {1, 2}), Error);
  EXPECT_THROW(StateSpace({"a", "b"}, {2, 1}), Error);
  EXPECT_THROW(Prior({0.5, 0.4}), Error);
  EXPECT_THROW(Prior({1.2, -0.2}), Error);
  EXPECT_NO_THROW(Prior({0.1, 0.2, 0.7}));
  EXPECT_EQ(StateSpace::default_three().size(), 3u);
}

TEST(Rng, DerivedStreamsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(1, "population"), derive_seed(1, "population"));
  EXPECT_NE(derive_seed(1, "population"), derive_seed(1, "instances"));
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
  std::vector<double> probs{0.0, 0.5, 0.0, 0.5};
  for (double u : {0.0, 0.25, 0.5, 0.75, 0.999999}) {
    auto i = draw_index(probs, u);
    EXPECT_TRUE(i == 1 || i == 3);
  }
}
