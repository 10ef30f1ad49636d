#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "mbic/criteria.hpp"
#include "mbic/linalg.hpp"
#include "mbic/types.hpp"

namespace mbic {

enum class Strategy { exhaustive, forward, forward_backward };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::exhaustive: return "exhaustive";
    case Strategy::forward: return "forward";
    case Strategy::forward_backward: return "forward_backward";
  }
  return "?";
}

inline Strategy strategy_from_string(std::string_view s) {
  if (s == "exhaustive") return Strategy::exhaustive;
  if (s == "forward") return Strategy::forward;
  if (s == "forward_backward") return Strategy::forward_backward;
  throw input_error("unknown strategy '" + std::string(s) +
                    "' (expected exhaustive, forward or forward_backward)");
}

struct SearchBudget {
  int max_size = 0;
  Strategy strategy = Strategy::exhaustive;
  double enumeration_cap = 2e6;  // max models an exhaustive search may score
};

// Size caps mirroring the |s| <= k p0 restriction of the theorems. With a
// known truth the cap tracks p0; on user data it is a conservative default.
inline int default_max_size_known_truth(long p, long p0) {
  const long cap = std::max<long>(10, static_cast<long>(std::ceil(2.0 * static_cast<double>(p0))));
  return static_cast<int>(std::min(p, cap));
}
inline int default_max_size_unknown(long p) { return static_cast<int>(std::min<long>(p, 20)); }

// Sum over j <= max_size of C(p, j); exact as a double until it saturates.
inline double enumeration_count(long p, int max_size) {
  double total = 0.0;
  double binom = 1.0;  // C(p, 0)
  for (int j = 0; j <= max_size; ++j) {
    total += binom;
    if (total > 1e18) return std::numeric_limits<double>::infinity();
    binom *= static_cast<double>(p - j) / static_cast<double>(j + 1);
  }
  return total;
}

struct TraceEntry {
  int size = 0;
  double best_total = 0.0;
};

struct SelectionResult {
  ModelIndexSet model;
  CriterionScore score;  // re-scored from scratch on the returned model
  std::uint64_t visited = 0;
  std::vector<TraceEntry> trace;
  Strategy strategy = Strategy::exhaustive;
};

namespace detail {

inline void check_budget(const DesignMatrix& X, const SearchBudget& budget) {
  if (budget.max_size < 0 || budget.max_size > X.p()) {
    throw input_error("SearchBudget: max_size outside {0..p}");
  }
}

// Candidate ordering: better score, then lexicographically smaller index set.
inline bool improves(const CriterionScore& cand, const std::vector<int>& cand_idx,
                     const CriterionScore& best, const std::vector<int>& best_idx) {
  const auto ord = compare(cand, best);
  if (ord == std::weak_ordering::less) return true;
  if (ord == std::weak_ordering::greater) return false;
  return std::lexicographical_compare(cand_idx.begin(), cand_idx.end(), best_idx.begin(),
                                      best_idx.end());
}

inline SelectionResult rescored(const DesignMatrix& X, const Vector& y, const ScoringContext& ctx,
                                Criterion criterion, ModelIndexSet model, std::uint64_t visited,
                                std::vector<TraceEntry> trace, Strategy strategy) {
  const FitResult fr = fit_model(X, y, model);
  SelectionResult out;
  out.score = score(criterion, ctx, fr.rss, model.size());
  out.model = std::move(model);
  out.visited = visited;
  out.trace = std::move(trace);
  out.strategy = strategy;
  return out;
}

}  // namespace detail

// Scores every model with |s| <= max_size and returns the criterion argmin.
// Refuses when the enumeration exceeds budget.enumeration_cap.
inline SelectionResult exhaustive_search(const DesignMatrix& X, const Vector& y,
                                         const ScoringContext& ctx, Criterion criterion,
                                         const SearchBudget& budget) {
  detail::check_budget(X, budget);
  const double count = enumeration_count(X.p(), budget.max_size);
  if (count > budget.enumeration_cap) {
    throw budget_error("exhaustive search over p = " + std::to_string(X.p()) + ", max_size = " +
                       std::to_string(budget.max_size) + " scores " +
                       std::to_string(static_cast<long long>(std::min(count, 9e18))) +
                       " models; enumeration_cap = " +
                       std::to_string(static_cast<long long>(budget.enumeration_cap)) +
                       " (raise the cap to at least that count)");
  }

  IncrementalFit inc(X, y);
  std::vector<int> path;
  path.reserve(static_cast<std::size_t>(budget.max_size));

  CriterionScore best = score(criterion, ctx, inc.rss(), 0);
  std::vector<int> best_idx;
  std::vector<double> best_by_size(static_cast<std::size_t>(budget.max_size) + 1,
                                   std::numeric_limits<double>::infinity());
  best_by_size[0] = best.total;
  std::uint64_t visited = 1;

  const int p = static_cast<int>(X.p());
  // Depth-first over index sets in increasing order; extend/retract keep the
  // factor state in sync with the path.
  auto dfs = [&](auto&& self, int start) -> void {
    for (int j = start; j <= p; ++j) {
      inc.extend(j);
      path.push_back(j);
      ++visited;
      const CriterionScore sc = score(criterion, ctx, inc.rss(), inc.size());
      if (detail::improves(sc, path, best, best_idx)) {
        best = sc;
        best_idx = path;
      }
      auto& slot = best_by_size[static_cast<std::size_t>(inc.size())];
      slot = std::min(slot, sc.total);
      if (inc.size() < budget.max_size) self(self, j + 1);
      inc.retract();
      path.pop_back();
    }
  };
  if (budget.max_size > 0) dfs(dfs, 1);

  std::vector<TraceEntry> trace;
  for (int sz = 0; sz <= budget.max_size; ++sz) {
    if (std::isfinite(best_by_size[static_cast<std::size_t>(sz)])) {
      trace.push_back({sz, best_by_size[static_cast<std::size_t>(sz)]});
    }
  }
  return detail::rescored(X, y, ctx, criterion, ModelIndexSet(std::move(best_idx)), visited,
                          std::move(trace), Strategy::exhaustive);
}

// Greedy forward path: adds the RSS-minimizing column at each step (penalty
// free, so one path serves every criterion), then returns the criterion
// argmin over the nested path models.
inline SelectionResult forward_stepwise(const DesignMatrix& X, const Vector& y,
                                        const ScoringContext& ctx, Criterion criterion,
                                        const SearchBudget& budget) {
  detail::check_budget(X, budget);
  if (budget.max_size > std::min(X.n(), X.p())) {
    throw input_error("forward search: max_size must be <= min(n, p)");
  }

  IncrementalFit inc(X, y);
  const Eigen::Index p = X.p();
  const Vector colsq = X.values().colwise().squaredNorm();

  std::vector<int> path_idx;
  std::vector<double> path_rss{inc.rss()};
  std::uint64_t visited = 1;

  for (int step = 0; step < budget.max_size; ++step) {
    const Vector r = inc.residual();
    const Vector xr = X.values().transpose() * r;
    const Matrix g = inc.basis().transpose() * X.values();

    int best_j = 0;
    double best_gain = -1.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (inc.has(static_cast<int>(j) + 1)) continue;
      const double denom = colsq(j) - g.col(j).squaredNorm();
      if (!(denom > 1e-12 * colsq(j))) continue;  // numerically in the span
      ++visited;
      const double gain = xr(j) * xr(j) / denom;
      if (gain > best_gain) {
        best_gain = gain;
        best_j = static_cast<int>(j) + 1;
      }
    }
    if (best_j == 0) break;  // nothing independent left
    inc.extend(best_j);
    path_idx.push_back(best_j);
    path_rss.push_back(inc.rss());
  }

  // Criterion argmin over the nested path models.
  std::vector<TraceEntry> trace;
  CriterionScore best = score(criterion, ctx, path_rss[0], 0);
  trace.push_back({0, best.total});
  std::size_t best_len = 0;
  std::vector<int> sorted_prefix;
  std::vector<int> best_idx;
  for (std::size_t len = 1; len < path_rss.size(); ++len) {
    sorted_prefix.insert(std::upper_bound(sorted_prefix.begin(), sorted_prefix.end(),
                                          path_idx[len - 1]),
                         path_idx[len - 1]);
    const CriterionScore sc = score(criterion, ctx, path_rss[len], static_cast<int>(len));
    trace.push_back({static_cast<int>(len), sc.total});
    if (detail::improves(sc, sorted_prefix, best, best_idx)) {
      best = sc;
      best_len = len;
      best_idx = sorted_prefix;
    }
  }
  std::vector<int> chosen(path_idx.begin(), path_idx.begin() + static_cast<long>(best_len));
  return detail::rescored(X, y, ctx, criterion, ModelIndexSet(std::move(chosen)), visited,
                          std::move(trace), Strategy::forward);
}

// Forward path, then backward pruning: repeatedly drop the index whose
// removal most improves the criterion until no removal helps. Never scores
// worse than the forward result.
inline SelectionResult forward_backward(const DesignMatrix& X, const Vector& y,
                                        const ScoringContext& ctx, Criterion criterion,
                                        const SearchBudget& budget) {
  SelectionResult fs = forward_stepwise(X, y, ctx, criterion, budget);

  std::vector<int> cur = fs.model.indices();
  CriterionScore cur_score = fs.score;
  std::uint64_t visited = fs.visited;
  std::vector<TraceEntry> trace = std::move(fs.trace);

  while (!cur.empty()) {
    bool found = false;
    CriterionScore next_score = cur_score;
    std::vector<int> next;
    for (int drop : cur) {
      std::vector<int> cand = cur;
      cand.erase(std::find(cand.begin(), cand.end(), drop));
      const ModelIndexSet cand_set{std::vector<int>(cand)};
      const FitResult fr = fit_model(X, y, cand_set);
      ++visited;
      const CriterionScore sc = score(criterion, ctx, fr.rss, cand_set.size());
      if (!found ? detail::improves(sc, cand, cur_score, cur)
                 : detail::improves(sc, cand, next_score, next)) {
        found = true;
        next_score = sc;
        next = std::move(cand);
      }
    }
    if (!found) break;
    cur = std::move(next);
    cur_score = next_score;
    trace.push_back({static_cast<int>(cur.size()), cur_score.total});
  }

  SelectionResult out = detail::rescored(X, y, ctx, criterion, ModelIndexSet(std::move(cur)),
                                         visited, std::move(trace), Strategy::forward_backward);
  return out;
}

inline SelectionResult run_search(const DesignMatrix& X, const Vector& y,
                                  const ScoringContext& ctx, Criterion criterion,
                                  const SearchBudget& budget) {
  switch (budget.strategy) {
    case Strategy::exhaustive: return exhaustive_search(X, y, ctx, criterion, budget);
    case Strategy::forward: return forward_stepwise(X, y, ctx, criterion, budget);
    case Strategy::forward_backward: return forward_backward(X, y, ctx, criterion, budget);
  }
  throw input_error("run_search: unknown strategy");
}

}  // namespace mbic
