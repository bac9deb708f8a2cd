#pragma once

// Least-squares gradient boosting over depth-limited regression trees with exact
// greedy split search.
//
// Training first sorts rows into a canonical order (lexicographic on the feature
// vector, then the target). Every sum is taken in that order and split ties go to
// the lowest column, then the lowest threshold, so the fitted model does not
// depend on the order in which rows were supplied.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "persuade/error.hpp"

namespace persuade {

struct Hyperparams {
  double learning_rate = 0.1;
  int max_depth = 5;
  int n_trees = 200;
  int min_samples_leaf = 20;

  bool operator==(const Hyperparams&) const = default;
};

/// Dense row-major design matrix with a named column manifest.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  std::size_t rows() const noexcept { return columns_.empty() ? 0 : values_.size() / columns_.size(); }
  std::size_t cols() const noexcept { return columns_.size(); }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * columns_.size() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * columns_.size(), columns_.size());
  }

  void add_row(std::span<const double> row) {
    if (row.size() != columns_.size()) throw Error(ErrorCode::DimensionMismatch, "row width != column count");
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorCode::SchemaViolation, "feature values must be finite");
    }
    values_.insert(values_.end(), row.begin(), row.end());
  }

  void reserve(std::size_t rows) { values_.reserve(rows * columns_.size()); }

  FeatureMatrix select(std::span<const std::size_t> rows) const {
    FeatureMatrix out(columns_);
    out.reserve(rows.size());
    for (std::size_t r : rows) out.values_.insert(out.values_.end(), row(r).begin(), row(r).end());
    return out;
  }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::vector<std::string> columns_;
  std::vector<double> values_;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf contribution, already scaled by the learning rate

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class RegressionTree {
 public:
  RegressionTree() : nodes_{TreeNode{}} {}
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
      const auto& n = nodes_[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].value;
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  std::size_t depth() const { return depth_from(0); }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) {
      return n.is_leaf();
    }));
  }
  bool vacuous() const { return nodes_.size() == 1 && nodes_[0].value == 0.0; }

  bool operator==(const RegressionTree&) const = default;

 private:
  std::size_t depth_from(std::size_t i) const {
    const auto& n = nodes_[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
  }

  std::vector<TreeNode> nodes_;
};

class GbmModel {
 public:
  double initial = 0.0;
  std::vector<RegressionTree> trees;
  Hyperparams hyperparams;
  std::vector<std::string> columns;
  double clamp_low = 0.1;
  double clamp_high = 20.0;

  double predict_raw(std::span<const double> x) const {
    if (x.size() != columns.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(columns.size()) + " features, got " + std::to_string(x.size()));
    }
    double out = initial;
    for (const auto& t : trees) out += t.predict(x);
    return out;
  }

  double predict(std::span<const double> x) const { return std::clamp(predict_raw(x), clamp_low, clamp_high); }

  std::vector<double> predict(const FeatureMatrix& m) const {
    if (m.columns() != columns) throw Error(ErrorCode::FeatureMismatch, "feature manifest differs from model");
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = predict(m.row(r));
    return out;
  }

  nlohmann::json to_json() const;
  static GbmModel from_json(const nlohmann::json& j);

  bool operator==(const GbmModel&) const = default;
};

struct TrainingTrace {
  std::vector<double> stage_mse;  // [0] is the MSE of the initial constant model
};

namespace detail {

inline nlohmann::json tree_node_to_json(const RegressionTree& tree, std::size_t i) {
  const auto& n = tree.nodes()[i];
  if (n.is_leaf()) return {{"leaf", n.value}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"left", tree_node_to_json(tree, static_cast<std::size_t>(n.left))},
          {"right", tree_node_to_json(tree, static_cast<std::size_t>(n.right))}};
}

// Nodes are laid out in pre-order, matching what the trainer stores.
inline std::int32_t tree_node_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes, int depth) {
  if (depth > 64) throw Error(ErrorCode::SerializationFailure, "tree too deep");
  auto index = static_cast<std::int32_t>(nodes.size());
  nodes.emplace_back();
  if (j.contains("leaf")) {
    nodes[static_cast<std::size_t>(index)].value = j.at("leaf").get<double>();
    return index;
  }
  TreeNode n;
  n.feature = j.at("feature").get<std::int32_t>();
  n.threshold = j.at("threshold").get<double>();
  n.left = tree_node_from_json(j.at("left"), nodes, depth + 1);
  n.right = tree_node_from_json(j.at("right"), nodes, depth + 1);
  nodes[static_cast<std::size_t>(index)] = n;
  return index;
}

inline std::vector<TreeNode> preorder(const RegressionTree& tree) {
  std::vector<TreeNode> out;
  auto visit = [&](auto&& self, std::size_t i) -> std::int32_t {
    auto idx = static_cast<std::int32_t>(out.size());
    out.push_back(tree.nodes()[i]);
    if (!tree.nodes()[i].is_leaf()) {
      auto l = self(self, static_cast<std::size_t>(tree.nodes()[i].left));
      auto r = self(self, static_cast<std::size_t>(tree.nodes()[i].right));
      out[static_cast<std::size_t>(idx)].left = l;
      out[static_cast<std::size_t>(idx)].right = r;
    }
    return idx;
  };
  visit(visit, 0);
  return out;
}

}  // namespace detail

inline nlohmann::json GbmModel::to_json() const {
  nlohmann::json jt = nlohmann::json::array();
  for (const auto& t : trees) jt.push_back(detail::tree_node_to_json(t, 0));
  return {{"format", "persuade-gbm"},
          {"version", 1},
          {"initial", initial},
          {"hyperparams",
           {{"learning_rate", hyperparams.learning_rate},
            {"max_depth", hyperparams.max_depth},
            {"n_trees", hyperparams.n_trees},
            {"min_samples_leaf", hyperparams.min_samples_leaf}}},
          {"columns", columns},
          {"clamp", {clamp_low, clamp_high}},
          {"trees", std::move(jt)}};
}

inline GbmModel GbmModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "persuade-gbm" || j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::SerializationFailure, "not a version-1 persuade-gbm model");
    }
    GbmModel m;
    m.initial = j.at("initial").get<double>();
    const auto& hp = j.at("hyperparams");
    m.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
    m.hyperparams.max_depth = hp.at("max_depth").get<int>();
    m.hyperparams.n_trees = hp.at("n_trees").get<int>();
    m.hyperparams.min_samples_leaf = hp.at("min_samples_leaf").get<int>();
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.clamp_low = j.at("clamp").at(0).get<double>();
    m.clamp_high = j.at("clamp").at(1).get<double>();
    for (const auto& jt : j.at("trees")) {
      std::vector<TreeNode> nodes;
      detail::tree_node_from_json(jt, nodes, 0);
      for (const auto& n : nodes) {
        if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= m.columns.size()) {
          throw Error(ErrorCode::SerializationFailure, "tree references unknown feature");
        }
      }
      m.trees.emplace_back(std::move(nodes));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SerializationFailure, std::string("model json: ") + e.what());
  }
}

/// Fits `hp.n_trees` stages exactly (no early stopping). Each stage fits a tree to the
/// current residuals with leaf value = learning_rate * mean residual. A stage that would
/// raise the training MSE through rounding is replaced by a zero tree, so the recorded
/// loss is non-increasing.
inline GbmModel train_gbm(const FeatureMatrix& x, std::span<const double> y, const Hyperparams& hp,
                          double clamp_low = 0.1, double clamp_high = 20.0, TrainingTrace* trace = nullptr) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "training set is empty");
  if (y.size() != n) throw Error(ErrorCode::LengthMismatch, "targets and rows differ in length");
  if (!(hp.learning_rate > 0.0) || hp.max_depth < 0 || hp.n_trees < 0 || hp.min_samples_leaf < 1) {
    throw Error(ErrorCode::InvalidArgument, "invalid hyperparameters");
  }

  // Canonical row order.
  std::vector<std::uint32_t> canon(n);
  std::iota(canon.begin(), canon.end(), 0u);
  std::sort(canon.begin(), canon.end(), [&](std::uint32_t a, std::uint32_t b) {
    auto ra = x.row(a), rb = x.row(b);
    for (std::size_t c = 0; c < p; ++c) {
      if (ra[c] != rb[c]) return ra[c] < rb[c];
    }
    return y[a] < y[b];
  });

  std::vector<double> col(p * n);
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = x.row(canon[i]);
    for (std::size_t c = 0; c < p; ++c) col[c * n + i] = r[c];
    target[i] = y[canon[i]];
  }

  // Per-column ascending order; stable, so equal values stay in canonical order.
  std::vector<std::uint32_t> sorted_rows(p * n);
  std::vector<double> sorted_vals(p * n);
  for (std::size_t c = 0; c < p; ++c) {
    auto rows = std::span<std::uint32_t>(sorted_rows).subspan(c * n, n);
    std::iota(rows.begin(), rows.end(), 0u);
    const double* v = col.data() + c * n;
    std::stable_sort(rows.begin(), rows.end(), [v](std::uint32_t a, std::uint32_t b) { return v[a] < v[b]; });
    for (std::size_t k = 0; k < n; ++k) sorted_vals[c * n + k] = v[rows[k]];
  }

  GbmModel model;
  model.hyperparams = hp;
  model.columns = x.columns();
  model.clamp_low = clamp_low;
  model.clamp_high = clamp_high;
  {
    double sum = 0.0;
    for (double t : target) sum += t;
    model.initial = sum / static_cast<double>(n);
  }

  std::vector<double> fitted(n, model.initial);
  auto sse_of = [&](const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = target[i] - f[i];
      s += d * d;
    }
    return s;
  };
  double sse = sse_of(fitted);
  if (trace) {
    trace->stage_mse.clear();
    trace->stage_mse.push_back(sse / static_cast<double>(n));
  }

  const auto min_leaf = static_cast<std::size_t>(hp.min_samples_leaf);
  std::vector<double> residual(n);
  std::vector<std::int32_t> node_of(n);
  std::vector<double> candidate(n);

  // Per-node bookkeeping, indexed by node id.
  std::vector<TreeNode> nodes;
  std::vector<std::size_t> node_count;
  std::vector<double> node_sum;

  // Per-frontier-slot scan state.
  std::vector<std::int32_t> slot_of;
  std::vector<std::size_t> run_count;
  std::vector<double> run_sum, run_last, best_gain, best_threshold;
  std::vector<std::int32_t> best_feature;

  model.trees.reserve(static_cast<std::size_t>(hp.n_trees));
  for (int t = 0; t < hp.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = target[i] - fitted[i];
    std::fill(node_of.begin(), node_of.end(), 0);

    nodes.assign(1, TreeNode{});
    node_count.assign(1, n);
    node_sum.assign(1, 0.0);
    for (std::size_t i = 0; i < n; ++i) node_sum[0] += residual[i];

    std::vector<std::int32_t> frontier;
    if (hp.max_depth > 0 && n >= 2 * min_leaf) frontier.push_back(0);

    for (int depth = 0; depth < hp.max_depth && !frontier.empty(); ++depth) {
      const std::size_t slots = frontier.size();
      slot_of.assign(nodes.size(), -1);
      for (std::size_t s = 0; s < slots; ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<std::int32_t>(s);
      best_gain.assign(slots, 0.0);
      best_feature.assign(slots, -1);
      best_threshold.assign(slots, 0.0);
      run_count.resize(slots);
      run_sum.resize(slots);
      run_last.resize(slots);

      for (std::size_t c = 0; c < p; ++c) {
        std::fill(run_count.begin(), run_count.end(), 0);
        std::fill(run_sum.begin(), run_sum.end(), 0.0);
        const std::uint32_t* rows = sorted_rows.data() + c * n;
        const double* vals = sorted_vals.data() + c * n;
        for (std::size_t k = 0; k < n; ++k) {
          const std::uint32_t i = rows[k];
          const std::int32_t s = slot_of[static_cast<std::size_t>(node_of[i])];
          if (s < 0) continue;
          const auto su = static_cast<std::size_t>(s);
          const double v = vals[k];
          const std::size_t left_n = run_count[su];
          if (left_n > 0 && v != run_last[su] && left_n >= min_leaf) {
            const auto node = static_cast<std::size_t>(frontier[su]);
            const std::size_t total_n = node_count[node];
            const std::size_t right_n = total_n - left_n;
            if (right_n >= min_leaf) {
              const double sl = run_sum[su];
              const double sr = node_sum[node] - sl;
              const double total = node_sum[node];
              const double gain = sl * sl / static_cast<double>(left_n) + sr * sr / static_cast<double>(right_n) -
                                  total * total / static_cast<double>(total_n);
              if (gain > best_gain[su]) {
                best_gain[su] = gain;
                best_feature[su] = static_cast<std::int32_t>(c);
                best_threshold[su] = run_last[su];
              }
            }
          }
          run_count[su] = left_n + 1;
          run_sum[su] += residual[i];
          run_last[su] = v;
        }
      }

      // Grow children for every slot that found a useful split.
      std::vector<std::int32_t> split_left(nodes.size(), -1);
      for (std::size_t s = 0; s < slots; ++s) {
        if (best_feature[s] < 0) continue;
        const auto node = static_cast<std::size_t>(frontier[s]);
        auto left = static_cast<std::int32_t>(nodes.size());
        nodes.push_back(TreeNode{});
        nodes.push_back(TreeNode{});
        nodes[node].feature = best_feature[s];
        nodes[node].threshold = best_threshold[s];
        nodes[node].left = left;
        nodes[node].right = left + 1;
        node_count.push_back(0);
        node_count.push_back(0);
        node_sum.push_back(0.0);
        node_sum.push_back(0.0);
        split_left[node] = left;
      }
      std::vector<std::int32_t> next;
      bool any_split = false;
      for (std::size_t s = 0; s < slots; ++s) any_split = any_split || best_feature[s] >= 0;
      if (!any_split) break;

      for (std::size_t i = 0; i < n; ++i) {
        const auto node = static_cast<std::size_t>(node_of[i]);
        if (node >= split_left.size() || split_left[node] < 0) continue;
        const auto& nd = nodes[node];
        const double v = col[static_cast<std::size_t>(nd.feature) * n + i];
        node_of[i] = v <= nd.threshold ? nd.left : nd.right;
        const auto child = static_cast<std::size_t>(node_of[i]);
        node_count[child] += 1;
        node_sum[child] += residual[i];
      }
      for (std::size_t s = 0; s < slots; ++s) {
        if (best_feature[s] < 0) continue;
        const auto node = static_cast<std::size_t>(frontier[s]);
        for (std::int32_t child : {nodes[node].left, nodes[node].right}) {
          if (node_count[static_cast<std::size_t>(child)] >= 2 * min_leaf) next.push_back(child);
        }
      }
      frontier = std::move(next);
    }

    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k].is_leaf() && node_count[k] > 0) {
        nodes[k].value = hp.learning_rate * (node_sum[k] / static_cast<double>(node_count[k]));
      }
    }
    for (std::size_t i = 0; i < n; ++i) candidate[i] = fitted[i] + nodes[static_cast<std::size_t>(node_of[i])].value;
    const double next_sse = sse_of(candidate);
    if (next_sse <= sse) {
      fitted.swap(candidate);
      sse = next_sse;
      model.trees.emplace_back(detail::preorder(RegressionTree(std::move(nodes))));
    } else {
      model.trees.emplace_back();
    }
    if (trace) trace->stage_mse.push_back(sse / static_cast<double>(n));
  }
  return model;
}

}  // namespace persuade
