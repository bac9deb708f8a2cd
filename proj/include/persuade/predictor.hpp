#pragma once

// Feature encoding, grouped splits, grid search and cross-validation around the GBM.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "persuade/error.hpp"
#include "persuade/gbm.hpp"
#include "persuade/market.hpp"
#include "persuade/parallel.hpp"
#include "persuade/rng.hpp"

namespace persuade {

/// Column layout: sig_<k> one-hot, budget, ind_<k> one-hot, aggressiveness, time_bucket, category.
struct FeatureLayout {
  std::size_t signals = 3;
  std::size_t sectors = 5;

  std::vector<std::string> columns() const {
    std::vector<std::string> out;
    for (std::size_t s = 0; s < signals; ++s) out.push_back("sig_" + std::to_string(s));
    out.push_back("budget");
    for (std::size_t k = 0; k < sectors; ++k) out.push_back("ind_" + std::to_string(k));
    out.push_back("aggressiveness");
    out.push_back("time_bucket");
    out.push_back("category");
    return out;
  }

  std::size_t width() const { return signals + sectors + 4; }

  void encode(std::size_t signal, double budget, std::size_t industry, double aggressiveness,
              const AuctionContext& context, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    out[signal] = 1.0;
    out[signals] = budget;
    out[signals + 1 + industry] = 1.0;
    out[signals + 1 + sectors] = aggressiveness;
    out[signals + 2 + sectors] = static_cast<double>(context.time_bucket);
    out[signals + 3 + sectors] = static_cast<double>(context.category);
  }
};

/// Rows of advertiser-auction pairs with their bid targets and auction group ids.
struct Dataset {
  FeatureMatrix features;
  std::vector<double> targets;
  std::vector<std::uint64_t> groups;

  std::size_t size() const noexcept { return targets.size(); }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features = features.select(rows);
    out.targets.reserve(rows.size());
    out.groups.reserve(rows.size());
    for (std::size_t r : rows) {
      out.targets.push_back(targets[r]);
      out.groups.push_back(groups[r]);
    }
    return out;
  }
};

inline Dataset build_features(const std::vector<AuctionRecord>& records, const FeatureLayout& layout) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to encode");
  Dataset data;
  data.features = FeatureMatrix(layout.columns());
  std::vector<double> row(layout.width());
  std::size_t row_index = 0;
  for (const auto& rec : records) {
    if (rec.signal >= layout.signals || rec.participants.empty()) {
      throw Error(ErrorCode::SchemaViolation, "row " + std::to_string(row_index));
    }
    for (const auto& p : rec.participants) {
      if (p.industry >= layout.sectors || !std::isfinite(p.bid)) {
        throw Error(ErrorCode::SchemaViolation, "row " + std::to_string(row_index));
      }
      layout.encode(rec.signal, p.budget, p.industry, p.aggressiveness, rec.context, row);
      data.features.add_row(row);
      data.targets.push_back(p.bid);
      data.groups.push_back(rec.auction_id);
      ++row_index;
    }
  }
  return data;
}

// ---- splitting ----------------------------------------------------------

struct SplitRatios {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
};

struct DataSplit {
  Dataset train, validation, test;
};

namespace detail {

/// Distinct group ids, sorted and then shuffled by `seed`.
inline std::vector<std::uint64_t> shuffled_groups(const Dataset& data, std::uint64_t seed) {
  std::vector<std::uint64_t> groups;
  std::map<std::uint64_t, bool> seen;
  for (auto g : data.groups) {
    if (seen.emplace(g, true).second) groups.push_back(g);
  }
  std::sort(groups.begin(), groups.end());
  Rng rng(seed);
  for (std::size_t i = groups.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng() % i);
    std::swap(groups[i - 1], groups[j]);
  }
  return groups;
}

inline std::vector<std::vector<std::size_t>> rows_by_bucket(const Dataset& data,
                                                            const std::map<std::uint64_t, std::size_t>& bucket_of,
                                                            std::size_t buckets) {
  std::vector<std::vector<std::size_t>> out(buckets);
  for (std::size_t r = 0; r < data.size(); ++r) out[bucket_of.at(data.groups[r])].push_back(r);
  return out;
}

}  // namespace detail

/// Splits whole auctions, never individual rows, so no auction straddles two sets.
inline DataSplit split_dataset(const Dataset& data, const SplitRatios& ratios, std::uint64_t seed) {
  if (!(ratios.train >= 0 && ratios.validation >= 0 && ratios.test >= 0) ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > kValidateTolerance) {
    throw Error(ErrorCode::BadRatios, "split ratios must be non-negative and sum to 1");
  }
  auto groups = detail::shuffled_groups(data, seed);
  const double g = static_cast<double>(groups.size());
  auto n_train = static_cast<std::size_t>(std::llround(ratios.train * g));
  auto n_val = static_cast<std::size_t>(std::llround(ratios.validation * g));
  n_train = std::min(n_train, groups.size());
  n_val = std::min(n_val, groups.size() - n_train);

  std::map<std::uint64_t, std::size_t> bucket_of;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    bucket_of[groups[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
  }
  auto rows = detail::rows_by_bucket(data, bucket_of, 3);
  return {data.subset(rows[0]), data.subset(rows[1]), data.subset(rows[2])};
}

// ---- metrics ------------------------------------------------------------

struct RegressionMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double r_squared = 0.0;
  bool r_squared_defined = true;  // false when the actuals are constant
};

inline RegressionMetrics regression_metrics(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw Error(ErrorCode::LengthMismatch, "prediction/actual lengths differ");
  if (actual.empty()) throw Error(ErrorCode::EmptyInput, "no samples to score");
  const auto n = static_cast<double>(actual.size());
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= n;

  double sse = 0.0, sae = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    double e = actual[i] - predicted[i];
    sse += e * e;
    sae += std::abs(e);
    double d = actual[i] - mean;
    sst += d * d;
  }
  RegressionMetrics m;
  m.mse = sse / n;
  m.rmse = std::sqrt(m.mse);
  m.mae = sae / n;
  if (sst > 0.0) {
    m.r_squared = 1.0 - sse / sst;
  } else {
    m.r_squared = std::nan("");
    m.r_squared_defined = false;
  }
  return m;
}

// ---- hyperparameter search ----------------------------------------------

struct HyperparamGrid {
  std::vector<double> learning_rates{0.01, 0.1, 0.2};
  std::vector<int> max_depths{3, 5, 7};
  std::vector<int> n_trees{100, 200, 500};
  int min_samples_leaf = 20;

  /// Reduced 2x2x2 grid for quick runs.
  static HyperparamGrid reduced() { return {{0.1, 0.2}, {3, 5}, {100, 200}, 20}; }

  std::vector<Hyperparams> points() const {
    std::vector<Hyperparams> out;
    for (double lr : learning_rates) {
      for (int d : max_depths) {
        for (int t : n_trees) out.push_back({lr, d, t, min_samples_leaf});
      }
    }
    return out;
  }
};

struct LeaderboardEntry {
  Hyperparams hp;
  double validation_rmse = 0.0;
};

struct TuningResult {
  Hyperparams best;
  std::vector<LeaderboardEntry> leaderboard;  // ascending validation RMSE
};

namespace detail {

inline bool leaderboard_before(const LeaderboardEntry& a, const LeaderboardEntry& b) {
  if (a.validation_rmse != b.validation_rmse) return a.validation_rmse < b.validation_rmse;
  if (a.hp.n_trees != b.hp.n_trees) return a.hp.n_trees < b.hp.n_trees;
  if (a.hp.max_depth != b.hp.max_depth) return a.hp.max_depth < b.hp.max_depth;
  return a.hp.learning_rate < b.hp.learning_rate;
}

}  // namespace detail

inline TuningResult tune_hyperparameters(const Dataset& train, const Dataset& validation,
                                         const std::vector<Hyperparams>& grid, double clamp_low, double clamp_high,
                                         std::size_t threads = 1) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "hyperparameter grid is empty");
  std::vector<LeaderboardEntry> board(grid.size());
  detail::parallel_for(grid.size(), threads, [&](std::size_t i) {
    auto model = train_gbm(train.features, train.targets, grid[i], clamp_low, clamp_high);
    auto pred = model.predict(validation.features);
    board[i] = {grid[i], regression_metrics(pred, validation.targets).rmse};
  });
  std::stable_sort(board.begin(), board.end(), detail::leaderboard_before);
  return {board.front().hp, std::move(board)};
}

struct CrossValidationResult {
  std::vector<double> fold_rmse;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
};

inline CrossValidationResult k_fold_cv(const Dataset& data, std::size_t k, const Hyperparams& hp,
                                       std::uint64_t seed, double clamp_low, double clamp_high) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be >= 2");
  auto groups = detail::shuffled_groups(data, seed);
  if (groups.size() < k) throw Error(ErrorCode::TooFewGroups, "fewer auction groups than folds");
  std::map<std::uint64_t, std::size_t> fold_of;
  for (std::size_t i = 0; i < groups.size(); ++i) fold_of[groups[i]] = i % k;
  auto folds = detail::rows_by_bucket(data, fold_of, k);

  CrossValidationResult out;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    auto train = data.subset(train_rows);
    auto held = data.subset(folds[f]);
    auto model = train_gbm(train.features, train.targets, hp, clamp_low, clamp_high);
    out.fold_rmse.push_back(regression_metrics(model.predict(held.features), held.targets).rmse);
  }
  double sum = std::accumulate(out.fold_rmse.begin(), out.fold_rmse.end(), 0.0);
  out.mean_rmse = sum / static_cast<double>(k);
  double var = 0.0;
  for (double r : out.fold_rmse) var += (r - out.mean_rmse) * (r - out.mean_rmse);
  out.std_rmse = std::sqrt(var / static_cast<double>(k));
  return out;
}

}  // namespace persuade
