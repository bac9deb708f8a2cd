#pragma once

// States, priors, signaling policies and the Bayesian receiver model.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "persuade/error.hpp"

namespace persuade {

inline constexpr double kComputeTolerance = 1e-12;
inline constexpr double kValidateTolerance = 1e-9;

namespace detail {

inline void require_unique(const std::vector<std::string>& labels, const char* what) {
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " labels must be unique");
  }
}

inline double kahan_sum(std::span<const double> values) {
  double sum = 0.0, carry = 0.0;
  for (double v : values) {
    double y = v - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace detail

/// Ordered engagement states with strictly increasing positive multipliers.
class StateSpace {
 public:
  StateSpace(std::vector<std::string> labels, std::vector<double> multipliers)
      : labels_(std::move(labels)), multipliers_(std::move(multipliers)) {
    if (labels_.empty()) throw Error(ErrorCode::InvalidArgument, "state space is empty");
    if (labels_.size() != multipliers_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "one multiplier per state is required");
    }
    detail::require_unique(labels_, "state");
    for (std::size_t k = 0; k < multipliers_.size(); ++k) {
      if (!(multipliers_[k] > 0.0) || !std::isfinite(multipliers_[k])) {
        throw Error(ErrorCode::InvalidArgument, "state multipliers must be positive");
      }
      if (k > 0 && !(multipliers_[k] > multipliers_[k - 1])) {
        throw Error(ErrorCode::InvalidArgument, "state multipliers must be strictly increasing");
      }
    }
  }

  static StateSpace default_three() { return {{"low", "medium", "high"}, {0.5, 1.0, 1.8}}; }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<double>& multipliers() const noexcept { return multipliers_; }
  double multiplier(std::size_t state) const { return multipliers_.at(state); }

  bool operator==(const StateSpace&) const = default;

 private:
  std::vector<std::string> labels_;
  std::vector<double> multipliers_;
};

class Prior {
 public:
  explicit Prior(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw Error(ErrorCode::InvalidArgument, "prior is empty");
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw Error(ErrorCode::InvalidArgument, "prior probabilities must be non-negative");
      }
    }
    double sum = detail::kahan_sum(probs_);
    if (std::abs(sum - 1.0) > kComputeTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  "prior probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }
  std::span<const double> probs() const noexcept { return probs_; }

  bool operator==(const Prior&) const = default;

 private:
  std::vector<double> probs_;
};

/// Signal labels plus the engagement multiplier each signal nominally announces.
class SignalVocabulary {
 public:
  SignalVocabulary(std::vector<std::string> labels, std::vector<double> face_values)
      : labels_(std::move(labels)), face_values_(std::move(face_values)) {
    if (labels_.empty()) throw Error(ErrorCode::InvalidArgument, "signal vocabulary is empty");
    if (labels_.size() != face_values_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "one face value per signal is required");
    }
    detail::require_unique(labels_, "signal");
  }

  static SignalVocabulary default_three() { return {{"low", "medium", "high"}, {0.5, 1.0, 1.8}}; }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<double>& face_values() const noexcept { return face_values_; }
  double face_value(std::size_t signal) const { return face_values_.at(signal); }

  bool operator==(const SignalVocabulary&) const = default;

 private:
  std::vector<std::string> labels_;
  std::vector<double> face_values_;
};

/// Row-stochastic matrix sigma(s | theta): one row per state, one column per signal.
/// Construction only fixes the shape; validate_policy checks the probability constraints.
class SignalingPolicy {
 public:
  SignalingPolicy() = default;
  SignalingPolicy(std::size_t states, std::size_t signals)
      : states_(states), signals_(signals), cells_(states * signals, 0.0) {}

  SignalingPolicy(std::vector<std::vector<double>> rows) {
    if (rows.empty() || rows.front().empty()) {
      throw Error(ErrorCode::DimensionMismatch, "policy matrix must be non-empty");
    }
    states_ = rows.size();
    signals_ = rows.front().size();
    cells_.reserve(states_ * signals_);
    for (const auto& row : rows) {
      if (row.size() != signals_) throw Error(ErrorCode::DimensionMismatch, "ragged policy matrix");
      cells_.insert(cells_.end(), row.begin(), row.end());
    }
  }

  std::size_t states() const noexcept { return states_; }
  std::size_t signals() const noexcept { return signals_; }

  double operator()(std::size_t state, std::size_t signal) const {
    return cells_[state * signals_ + signal];
  }
  double& operator()(std::size_t state, std::size_t signal) {
    return cells_[state * signals_ + signal];
  }

  std::span<const double> row(std::size_t state) const {
    return std::span<const double>(cells_).subspan(state * signals_, signals_);
  }
  std::span<const double> cells() const noexcept { return cells_; }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out;
    for (std::size_t k = 0; k < states_; ++k) out.emplace_back(row(k).begin(), row(k).end());
    return out;
  }

  bool operator==(const SignalingPolicy&) const = default;

 private:
  std::size_t states_ = 0;
  std::size_t signals_ = 0;
  std::vector<double> cells_;
};

struct Posterior {
  std::vector<double> probs;
};

struct ValuationProfile {
  std::vector<double> values;  // v(theta) per state, currency units

  explicit ValuationProfile(std::vector<double> v) : values(std::move(v)) {
    for (double x : values) {
      if (!(x >= 0.0)) throw Error(ErrorCode::NegativeValuation, "valuations must be >= 0");
    }
  }
};

struct PolicyViolation {
  ErrorCode kind;  // NegativeEntry, RowSumViolation or DimensionMismatch
  std::size_t row = 0;
  std::size_t col = 0;
  double sum = 0.0;
};

/// Checks the simplex constraints row by row; the first violation found is reported.
inline std::optional<PolicyViolation> validate_policy(const SignalingPolicy& policy) {
  for (std::size_t r = 0; r < policy.states(); ++r) {
    for (std::size_t c = 0; c < policy.signals(); ++c) {
      double v = policy(r, c);
      if (!(v >= 0.0) || !std::isfinite(v)) return PolicyViolation{ErrorCode::NegativeEntry, r, c, 0.0};
    }
    double sum = detail::kahan_sum(policy.row(r));
    if (std::abs(sum - 1.0) > kValidateTolerance) {
      return PolicyViolation{ErrorCode::RowSumViolation, r, 0, sum};
    }
  }
  return std::nullopt;
}

inline std::optional<PolicyViolation> validate_policy(const SignalingPolicy& policy,
                                                      std::size_t states, std::size_t signals) {
  if (policy.states() != states || policy.signals() != signals) {
    return PolicyViolation{ErrorCode::DimensionMismatch, policy.states(), policy.signals(), 0.0};
  }
  return validate_policy(policy);
}

inline std::string describe(const PolicyViolation& v) {
  switch (v.kind) {
    case ErrorCode::NegativeEntry:
      return "NegativeEntry(" + std::to_string(v.row) + ", " + std::to_string(v.col) + ")";
    case ErrorCode::RowSumViolation:
      return "RowSumViolation(" + std::to_string(v.row) + ", " + std::to_string(v.sum) + ")";
    default:
      return "DimensionMismatch(" + std::to_string(v.row) + "x" + std::to_string(v.col) + ")";
  }
}

inline void require_valid(const SignalingPolicy& policy) {
  if (auto violation = validate_policy(policy)) throw Error(violation->kind, describe(*violation));
}

/// Marginal probability of each signal, sum_theta sigma(s|theta) pi(theta).
inline std::vector<double> signal_marginal(const SignalingPolicy& policy, const Prior& prior) {
  require_valid(policy);
  if (policy.states() != prior.size()) {
    throw Error(ErrorCode::DimensionMismatch, "policy rows must match prior length");
  }
  std::vector<double> marginal(policy.signals(), 0.0);
  for (std::size_t s = 0; s < policy.signals(); ++s) {
    for (std::size_t k = 0; k < policy.states(); ++k) marginal[s] += policy(k, s) * prior[k];
  }
  return marginal;
}

/// Posterior belief over states after observing `signal`.
inline Posterior bayes_update(const SignalingPolicy& policy, const Prior& prior,
                              std::size_t signal) {
  require_valid(policy);
  if (policy.states() != prior.size()) {
    throw Error(ErrorCode::DimensionMismatch, "policy rows must match prior length");
  }
  if (signal >= policy.signals()) throw Error(ErrorCode::InvalidArgument, "signal index out of range");

  Posterior post;
  post.probs.resize(policy.states());
  double denom = 0.0;
  for (std::size_t k = 0; k < policy.states(); ++k) {
    post.probs[k] = policy(k, signal) * prior[k];
    denom += post.probs[k];
  }
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::ZeroProbabilitySignal,
                "signal " + std::to_string(signal) + " has zero marginal probability");
  }
  for (double& p : post.probs) p /= denom;
  return post;
}

inline double expected_valuation(const Posterior& posterior, const ValuationProfile& valuations) {
  if (posterior.probs.size() != valuations.values.size()) {
    throw Error(ErrorCode::DimensionMismatch, "posterior and valuation lengths differ");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < posterior.probs.size(); ++k) {
    sum += posterior.probs[k] * valuations.values[k];
  }
  return sum;
}

/// Truthful bidding is dominant in a second-price auction: the bid is the expected valuation.
inline double optimal_bid(double expected_valuation) {
  if (!(expected_valuation >= 0.0)) {
    throw Error(ErrorCode::NegativeValuation, "expected valuation must be >= 0");
  }
  return expected_valuation;
}

}  // namespace persuade
