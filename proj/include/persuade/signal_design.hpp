#pragma once

// Canonical signaling policies, candidate generation, and revenue-maximizing search.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "persuade/core.hpp"
#include "persuade/error.hpp"
#include "persuade/format.hpp"
#include "persuade/parallel.hpp"

namespace persuade {

struct PolicyCandidate {
  SignalingPolicy policy;
  std::string tag;     // full | none | partial | partition | grid | custom
  std::string params;  // human-readable parameters, e.g. "alpha=0.5;beta=0.25"
};

enum class SearchMode { TwoStateGrid, PartitionEnumeration, SimplexGrid };

inline std::string_view to_string(SearchMode mode) {
  switch (mode) {
    case SearchMode::TwoStateGrid: return "two-state-grid";
    case SearchMode::PartitionEnumeration: return "partition-enumeration";
    case SearchMode::SimplexGrid: return "simplex-grid";
  }
  return "?";
}

inline SearchMode search_mode_from_string(std::string_view s) {
  if (s == "two-state-grid") return SearchMode::TwoStateGrid;
  if (s == "partition-enumeration") return SearchMode::PartitionEnumeration;
  if (s == "simplex-grid") return SearchMode::SimplexGrid;
  throw Error(ErrorCode::ConfigError, "unknown search mode '" + std::string(s) + "'");
}

struct SearchConfig {
  SearchMode mode = SearchMode::PartitionEnumeration;
  std::size_t resolution = 21;  // grid points per axis
  std::size_t mc_auctions = 2000;
  bool credibility = true;
  double delta = 0.25;
  std::uint64_t seed = 0;
  std::size_t max_candidates = 2'000'000;
};

// ---- canonical policies -------------------------------------------------

inline SignalingPolicy full_disclosure(const StateSpace& states, const SignalVocabulary& vocab) {
  if (vocab.size() < states.size()) {
    throw Error(ErrorCode::VocabularyTooSmall, "full disclosure needs one signal per state");
  }
  SignalingPolicy p(states.size(), vocab.size());
  for (std::size_t k = 0; k < states.size(); ++k) p(k, k) = 1.0;
  return p;
}

inline std::size_t pooling_signal(const SignalVocabulary& vocab) { return vocab.size() / 2; }

inline SignalingPolicy no_disclosure(const StateSpace& states, const SignalVocabulary& vocab) {
  SignalingPolicy p(states.size(), vocab.size());
  const std::size_t s = pooling_signal(vocab);
  for (std::size_t k = 0; k < states.size(); ++k) p(k, s) = 1.0;
  return p;
}

/// sigma(s1|L)=alpha, sigma(s1|H)=beta over a two-signal vocabulary.
inline SignalingPolicy partial_two_state(const StateSpace& states, double alpha, double beta) {
  if (states.size() != 2) throw Error(ErrorCode::WrongStateCount, "partial disclosure needs exactly 2 states");
  if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha and beta must lie in [0, 1]");
  }
  return SignalingPolicy({{alpha, 1.0 - alpha}, {beta, 1.0 - beta}});
}

/// Signals drawn uniformly and independently of the state.
inline SignalingPolicy exploration_policy(const StateSpace& states, const SignalVocabulary& vocab) {
  SignalingPolicy p(states.size(), vocab.size());
  const double w = 1.0 / static_cast<double>(vocab.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    for (std::size_t s = 0; s < vocab.size(); ++s) p(k, s) = w;
  }
  return p;
}

// ---- partitions ---------------------------------------------------------

/// One deterministic policy per set partition of the states. Each block is sent
/// as the signal indexed by its upper-median state, so singleton blocks keep their
/// own signal and the all-in-one block uses the middle signal.
inline std::vector<PolicyCandidate> enumerate_partition_policies(const StateSpace& states,
                                                                 const SignalVocabulary& vocab) {
  const std::size_t n = states.size();
  if (n > 4) throw Error(ErrorCode::StateSpaceTooLarge, "partition enumeration supports at most 4 states");
  if (vocab.size() < n) throw Error(ErrorCode::VocabularyTooSmall, "partitions need one signal per state");

  std::vector<PolicyCandidate> out;
  // Restricted growth strings: block[0] = 0, block[i] <= 1 + max(block[0..i-1]).
  std::vector<std::size_t> block(n, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t max_block) {
    if (i == n) {
      const std::size_t blocks = max_block + 1;
      std::vector<std::vector<std::size_t>> members(blocks);
      for (std::size_t k = 0; k < n; ++k) members[block[k]].push_back(k);
      SignalingPolicy p(n, vocab.size());
      std::string params;
      for (const auto& m : members) {
        const std::size_t signal = m[m.size() / 2];
        for (std::size_t k : m) p(k, signal) = 1.0;
        params += '{';
        for (std::size_t j = 0; j < m.size(); ++j) params += (j ? "," : "") + states.labels()[m[j]];
        params += "}->" + vocab.labels()[signal];
      }
      out.push_back({std::move(p), "partition", std::move(params)});
      return;
    }
    for (std::size_t b = 0; b <= max_block + 1; ++b) {
      block[i] = b;
      rec(i + 1, std::max(max_block, b));
    }
  };
  rec(1, 0);
  return out;
}

// ---- grids --------------------------------------------------------------

inline std::vector<PolicyCandidate> two_state_grid(const StateSpace& states, std::size_t resolution) {
  if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "grid resolution must be >= 2");
  std::vector<PolicyCandidate> out;
  out.reserve(resolution * resolution);
  const double step = 1.0 / static_cast<double>(resolution - 1);
  for (std::size_t a = 0; a < resolution; ++a) {
    for (std::size_t b = 0; b < resolution; ++b) {
      double alpha = static_cast<double>(a) * step;
      double beta = static_cast<double>(b) * step;
      out.push_back({partial_two_state(states, alpha, beta), "partial",
                     "alpha=" + format_double(alpha) + ";beta=" + format_double(beta)});
    }
  }
  return out;
}

namespace detail {

// All compositions of `total` into `parts` non-negative integers, lexicographic.
inline void compositions(std::size_t total, std::size_t parts, std::vector<std::size_t>& cur,
                         std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() + 1 == parts) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t v = total + 1; v-- > 0;) {
    cur.push_back(v);
    compositions(total - v, parts, cur, out);
    cur.pop_back();
  }
}

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace detail

inline std::size_t simplex_grid_size(std::size_t states, std::size_t signals, std::size_t resolution) {
  double per_row = std::round(detail::binomial(resolution - 1 + signals - 1, signals - 1));
  double total = std::pow(per_row, static_cast<double>(states));
  return total > 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(total);
}

/// Every policy whose rows lie on the simplex lattice with step 1/(resolution-1).
inline std::vector<PolicyCandidate> simplex_grid(const StateSpace& states, const SignalVocabulary& vocab,
                                                 std::size_t resolution, std::size_t max_candidates) {
  if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "grid resolution must be >= 2");
  const std::size_t n_states = states.size();
  const std::size_t n_signals = vocab.size();
  const std::size_t count = simplex_grid_size(n_states, n_signals, resolution);
  if (count > max_candidates) {
    throw Error(ErrorCode::SearchTooLarge,
                "simplex grid would produce " + std::to_string(count) + " candidates");
  }
  const std::size_t units = resolution - 1;
  std::vector<std::vector<std::size_t>> rows;
  std::vector<std::size_t> cur;
  detail::compositions(units, n_signals, cur, rows);

  std::vector<PolicyCandidate> out;
  out.reserve(count);
  std::vector<std::size_t> pick(n_states, 0);
  while (true) {
    SignalingPolicy p(n_states, n_signals);
    std::string params;
    for (std::size_t k = 0; k < n_states; ++k) {
      if (k) params += ';';
      for (std::size_t s = 0; s < n_signals; ++s) {
        p(k, s) = static_cast<double>(rows[pick[k]][s]) / static_cast<double>(units);
        params += (s ? "/" : "") + std::to_string(rows[pick[k]][s]);
      }
    }
    out.push_back({std::move(p), "grid", params + " of " + std::to_string(units)});

    std::size_t k = n_states;
    while (k > 0) {
      --k;
      if (++pick[k] < rows.size()) break;
      pick[k] = 0;
      if (k == 0) return out;
    }
  }
}

/// Canonical policies first, then mode-specific candidates; exact duplicates dropped.
inline std::vector<PolicyCandidate> build_candidates(const SearchConfig& config, const StateSpace& states,
                                                     const SignalVocabulary& vocab) {
  std::vector<PolicyCandidate> raw;
  raw.push_back({full_disclosure(states, vocab), "full", ""});
  raw.push_back({no_disclosure(states, vocab), "none", ""});
  switch (config.mode) {
    case SearchMode::TwoStateGrid: {
      if (vocab.size() != 2) throw Error(ErrorCode::WrongStateCount, "two-state grid needs 2 signals");
      auto grid = two_state_grid(states, config.resolution);
      raw.insert(raw.end(), grid.begin(), grid.end());
      return raw;  // the grid is reported in full, duplicates included
    }
    case SearchMode::PartitionEnumeration: {
      auto parts = enumerate_partition_policies(states, vocab);
      raw.insert(raw.end(), parts.begin(), parts.end());
      break;
    }
    case SearchMode::SimplexGrid: {
      if (states.size() <= 4) {
        auto parts = enumerate_partition_policies(states, vocab);
        raw.insert(raw.end(), parts.begin(), parts.end());
      }
      auto grid = simplex_grid(states, vocab, config.resolution, config.max_candidates);
      raw.insert(raw.end(), std::make_move_iterator(grid.begin()), std::make_move_iterator(grid.end()));
      break;
    }
  }
  std::vector<PolicyCandidate> out;
  out.reserve(raw.size());
  std::set<std::vector<double>> seen;
  for (auto& c : raw) {
    auto cells = c.policy.cells();
    if (seen.emplace(cells.begin(), cells.end()).second) out.push_back(std::move(c));
  }
  return out;
}

// ---- credibility --------------------------------------------------------

/// A policy is credible when, for every reachable signal, the posterior-expected
/// engagement multiplier is within delta of the signal's face value.
inline bool is_credible(const SignalingPolicy& policy, const StateSpace& states, const SignalVocabulary& vocab,
                        const Prior& prior, double delta) {
  auto marginal = signal_marginal(policy, prior);
  for (std::size_t s = 0; s < policy.signals(); ++s) {
    if (!(marginal[s] > 0.0)) continue;
    Posterior post = bayes_update(policy, prior, s);
    double mean = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) mean += post.probs[k] * states.multiplier(k);
    if (std::abs(mean - vocab.face_value(s)) > delta + kComputeTolerance) return false;
  }
  return true;
}

// ---- optimization -------------------------------------------------------

struct AuditEntry {
  std::string tag;
  std::string params;
  double revenue = 0.0;
  bool feasible = true;
};

struct SearchResult {
  std::size_t best_index = 0;
  PolicyCandidate best;
  double revenue = 0.0;
  std::vector<AuditEntry> audit;  // candidate order
};

using PolicyEvaluator = std::function<double(const SignalingPolicy&)>;
using FeasibilityCheck = std::function<bool(const SignalingPolicy&)>;

inline std::size_t used_signal_count(const SignalingPolicy& p) {
  std::size_t used = 0;
  for (std::size_t s = 0; s < p.signals(); ++s) {
    for (std::size_t k = 0; k < p.states(); ++k) {
      if (p(k, s) > 0.0) {
        ++used;
        break;
      }
    }
  }
  return used;
}

/// True when `a` should be preferred over `b` at equal revenue.
inline bool tie_break_prefers(const SignalingPolicy& a, const SignalingPolicy& b) {
  auto ua = used_signal_count(a), ub = used_signal_count(b);
  if (ua != ub) return ua < ub;
  auto ca = a.cells(), cb = b.cells();
  return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
}

/// Evaluates every candidate (in parallel when threads > 1) and returns the feasible
/// one with maximal revenue. The evaluator must be safe to call concurrently.
inline SearchResult optimize_policy(const std::vector<PolicyCandidate>& candidates, const PolicyEvaluator& evaluate,
                                    const FeasibilityCheck& feasible = {}, std::size_t threads = 1) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidateSet, "no candidates to evaluate");
  for (const auto& c : candidates) require_valid(c.policy);

  SearchResult result;
  result.audit.resize(candidates.size());
  auto work = [&](std::size_t i) {
    result.audit[i] = {candidates[i].tag, candidates[i].params, evaluate(candidates[i].policy),
                       feasible ? feasible(candidates[i].policy) : true};
  };
  detail::parallel_for(candidates.size(), threads, work);

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& a = result.audit[i];
    if (!a.feasible) continue;
    if (!best || a.revenue > result.audit[*best].revenue ||
        (a.revenue == result.audit[*best].revenue &&
         tie_break_prefers(candidates[i].policy, candidates[*best].policy))) {
      best = i;
    }
  }
  if (!best) throw Error(ErrorCode::EmptyCandidateSet, "no feasible candidate");
  result.best_index = *best;
  result.best = candidates[*best];
  result.revenue = result.audit[*best].revenue;
  return result;
}

inline std::string audit_to_csv(const std::vector<AuditEntry>& audit) {
  std::string out = "index,description,parameters,revenue,feasible\n";
  for (std::size_t i = 0; i < audit.size(); ++i) {
    const auto& a = audit[i];
    out += std::to_string(i) + ',' + a.tag + ",\"" + a.params + "\"," + format_double(a.revenue) + ',' +
           (a.feasible ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace persuade
