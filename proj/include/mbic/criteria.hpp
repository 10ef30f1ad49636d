#pragma once

#include <cmath>
#include <compare>
#include <string>
#include <string_view>

#include "mbic/types.hpp"

namespace mbic {

enum class Criterion { BIC, mBIC, mBIC2 };

inline std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::BIC: return "BIC";
    case Criterion::mBIC: return "mBIC";
    case Criterion::mBIC2: return "mBIC2";
  }
  return "?";
}

inline Criterion criterion_from_string(std::string_view s) {
  if (s == "BIC" || s == "bic") return Criterion::BIC;
  if (s == "mBIC" || s == "mbic") return Criterion::mBIC;
  if (s == "mBIC2" || s == "mbic2") return Criterion::mBIC2;
  throw input_error("unknown criterion '" + std::string(s) + "' (expected BIC, mBIC or mBIC2)");
}

// Problem dimensions plus the floor that keeps n ln(RSS) finite when a model
// saturates. The floor is relative to y so that rescaling y moves every score
// by the same constant.
struct ScoringContext {
  long n = 0;
  long p = 0;
  double rss_floor = 1e-300;

  void validate() const {
    if (n < 2) throw input_error("ScoringContext: need n >= 2");
    if (p < 1) throw input_error("ScoringContext: need p >= 1");
    if (!(rss_floor > 0.0)) throw input_error("ScoringContext: rss_floor must be positive");
  }
};

inline ScoringContext make_context(long n, long p, double yty) {
  ScoringContext ctx{n, p, std::max(1e-12 * yty, 1e-300)};
  ctx.validate();
  return ctx;
}

struct CriterionScore {
  Criterion criterion = Criterion::BIC;
  double total = 0.0;
  double fit_term = 0.0;  // n ln(RSS)
  double penalty = 0.0;
  int model_size = 0;
};

// ln(k!) by direct summation; exact at the model sizes handled here.
inline double log_factorial(int k) {
  double acc = 0.0;
  for (int i = 2; i <= k; ++i) acc += std::log(static_cast<double>(i));
  return acc;
}

namespace detail {

inline double fit_term(const ScoringContext& ctx, double rss, int size) {
  ctx.validate();
  if (rss < 0.0) throw input_error("score: rss must be nonnegative");
  if (size < 0 || size > ctx.p) throw input_error("score: size outside {0..p}");
  return static_cast<double>(ctx.n) * std::log(std::max(rss, ctx.rss_floor));
}

}  // namespace detail

// BIC(s) = n ln(RSS) + |s| ln n. Baseline for comparison runs.
inline CriterionScore score_bic(const ScoringContext& ctx, double rss, int size) {
  CriterionScore s;
  s.criterion = Criterion::BIC;
  s.model_size = size;
  s.fit_term = detail::fit_term(ctx, rss, size);
  s.penalty = static_cast<double>(size) * std::log(static_cast<double>(ctx.n));
  s.total = s.fit_term + s.penalty;
  return s;
}

// mBIC(s) = n ln(RSS) + |s| ln n + 2 |s| ln p.
inline CriterionScore score_mbic(const ScoringContext& ctx, double rss, int size) {
  CriterionScore s;
  s.criterion = Criterion::mBIC;
  s.model_size = size;
  s.fit_term = detail::fit_term(ctx, rss, size);
  s.penalty = static_cast<double>(size) * std::log(static_cast<double>(ctx.n)) +
              2.0 * static_cast<double>(size) * std::log(static_cast<double>(ctx.p));
  s.total = s.fit_term + s.penalty;
  return s;
}

// mBIC2(s) = mBIC(s) - 2 ln |s|!.
inline CriterionScore score_mbic2(const ScoringContext& ctx, double rss, int size) {
  CriterionScore s;
  s.criterion = Criterion::mBIC2;
  s.model_size = size;
  s.fit_term = detail::fit_term(ctx, rss, size);
  s.penalty = static_cast<double>(size) * std::log(static_cast<double>(ctx.n)) +
              2.0 * static_cast<double>(size) * std::log(static_cast<double>(ctx.p)) -
              2.0 * log_factorial(size);
  s.total = s.fit_term + s.penalty;
  return s;
}

inline CriterionScore score(Criterion c, const ScoringContext& ctx, double rss, int size) {
  switch (c) {
    case Criterion::BIC: return score_bic(ctx, rss, size);
    case Criterion::mBIC: return score_mbic(ctx, rss, size);
    case Criterion::mBIC2: return score_mbic2(ctx, rss, size);
  }
  throw input_error("score: unknown criterion");
}

// Strict-weak ordering: smaller total wins, exact total ties go to the
// smaller model. A remaining tie is broken lexicographically on the index
// sets at the search layer.
inline std::weak_ordering compare(const CriterionScore& a, const CriterionScore& b) {
  if (a.criterion != b.criterion) {
    throw input_error("compare: scores are for different criteria");
  }
  if (a.total < b.total) return std::weak_ordering::less;
  if (a.total > b.total) return std::weak_ordering::greater;
  if (a.model_size < b.model_size) return std::weak_ordering::less;
  if (a.model_size > b.model_size) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

}  // namespace mbic
