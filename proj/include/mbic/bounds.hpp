#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "mbic/csv.hpp"
#include "mbic/datagen.hpp"
#include "mbic/rng.hpp"
#include "mbic/types.hpp"

namespace mbic {

// m_j = 2 j (ln p + sqrt(2 ln p)), the high-probability cap on rank-j
// projector forms maximized over at most C(p, j) matrices.
inline double m_threshold_from_logp(int j, double log_p) {
  if (j < 0) throw input_error("m_threshold: need j >= 0");
  return 2.0 * static_cast<double>(j) * (log_p + std::sqrt(2.0 * log_p));
}

inline double m_threshold(int j, long p) {
  if (p < 2) throw input_error("m_threshold: need p >= 2 (ln p must be positive)");
  return m_threshold_from_logp(j, std::log(static_cast<double>(p)));
}

// Level whose exceedance probability for ||A u||^2 is at most exp(-t):
// Tr(A^T A) + 2 sqrt(Tr((A^T A)^2) t) + 2 ||A^T A|| t. For an idempotent
// rank-j projector this is j + 2 sqrt(j t) + 2 t.
inline double hw_threshold(double trace, double trace_sq, double opnorm, double t) {
  if (trace < 0.0 || trace_sq < 0.0 || opnorm < 0.0) {
    throw input_error("hw_threshold: trace, trace_sq and opnorm must be nonnegative");
  }
  if (!(t > 0.0)) throw input_error("hw_threshold: need t > 0");
  return trace + 2.0 * std::sqrt(trace_sq * t) + 2.0 * opnorm * t;
}

// P(u^T A_j u > m) <= exp(-m/2 + sqrt(2 m j)/2), clamped to 1.
inline double simple_tail_bound(double m, int j) {
  if (!(m > 0.0)) throw input_error("simple_tail_bound: need m > 0");
  if (j < 1) throw input_error("simple_tail_bound: need j >= 1");
  const double v = std::exp(-0.5 * m + 0.5 * std::sqrt(2.0 * m * static_cast<double>(j)));
  return std::min(1.0, v);
}

struct BoundReport {
  int j = 0;
  long p = 0;
  double m_j = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t exceed_count = 0;
  double empirical_rate = 0.0;
  double theoretical_bound = 0.0;  // exp(-(j/3) sqrt(ln p)), the series term
  bool sampled = false;
};

inline std::string bound_reports_to_csv(const std::vector<BoundReport>& reports) {
  std::string out = "j,p,m_j,trials,exceed_count,empirical_rate,theoretical_bound,sampled_flag\n";
  for (const BoundReport& r : reports) {
    out += std::to_string(r.j) + ',' + std::to_string(r.p) + ',' + format_double(r.m_j) + ',' +
           format_u64(r.trials) + ',' + format_u64(r.exceed_count) + ',' +
           format_double(r.empirical_rate) + ',' + format_double(r.theoretical_bound) + ',' +
           (r.sampled ? "1" : "0") + '\n';
  }
  return out;
}

namespace bounds_detail {

inline constexpr std::uint64_t kRoleDesign = 0xB0;
inline constexpr std::uint64_t kRoleModels = 0xB1;
inline constexpr std::uint64_t kRoleTrial = 0xB2;
inline constexpr int kTrialChunk = 256;  // fixed so results are thread-count independent

// One rank's model family, stored for fast repeated quadratic forms:
// u^T H(s) u = w^T G(s)^{-1} w with w = X(s)^T u, so a trial costs O(d^2)
// per model after one shared X^T u product.
struct ModelFamily {
  int rank_j = 0;               // reported rank
  int d = 0;                    // dimension of the stored Gram inverse
  bool sampled = false;
  double threshold = 0.0;       // m_threshold(rank_j, p)
  std::size_t count = 0;
  std::vector<int> indices;     // count * d column indices (0-based)
  std::vector<double> ginv;     // count * d * d, row-major blocks
};

inline void append_model(ModelFamily& fam, const Matrix& X, const std::vector<int>& cols) {
  const int d = static_cast<int>(cols.size());
  Matrix Xs(X.rows(), d);
  for (int i = 0; i < d; ++i) Xs.col(i) = X.col(cols[static_cast<std::size_t>(i)]);
  const Matrix gram = Xs.transpose() * Xs;
  Eigen::LLT<Matrix> llt(gram);
  Matrix ginv;
  if (llt.info() == Eigen::Success) {
    ginv = llt.solve(Matrix::Identity(d, d));
  } else {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gram);
    ginv = cod.pseudoInverse();
  }
  for (int i = 0; i < d; ++i) fam.indices.push_back(cols[static_cast<std::size_t>(i)]);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) fam.ginv.push_back(ginv(r, c));
  ++fam.count;
}

inline std::uint64_t binom_saturating(long a, int b) {
  if (b < 0 || b > a) return 0;
  long double acc = 1.0L;
  for (int i = 0; i < b; ++i) {
    acc *= static_cast<long double>(a - i) / static_cast<long double>(i + 1);
    if (acc > 4.0e18L) return UINT64_MAX;
  }
  return static_cast<std::uint64_t>(acc + 0.5L);
}

// Lexicographic unranking of a j-combination of [0, pool).
inline std::vector<int> unrank_combination(long pool, int j, std::uint64_t rank) {
  std::vector<int> combo(static_cast<std::size_t>(j));
  int c = 0;
  for (int i = 0; i < j; ++i) {
    while (true) {
      const std::uint64_t block = binom_saturating(pool - c - 1, j - i - 1);
      if (block <= rank) {
        rank -= block;
        ++c;
      } else {
        break;
      }
    }
    combo[static_cast<std::size_t>(i)] = c;
    ++c;
  }
  return combo;
}

// All j-combinations of [0, pool) when there are at most `cap`; otherwise a
// uniform sample of `cap` distinct combinations.
inline std::vector<std::vector<int>> enumerate_or_sample(long pool, int j, std::uint64_t cap,
                                                         RngStream stream, bool& sampled) {
  std::vector<std::vector<int>> out;
  const std::uint64_t total = binom_saturating(pool, j);
  if (total <= cap) {
    sampled = false;
    std::vector<int> combo(static_cast<std::size_t>(j));
    for (int i = 0; i < j; ++i) combo[static_cast<std::size_t>(i)] = i;
    while (true) {
      out.push_back(combo);
      int i = j - 1;
      while (i >= 0 && combo[static_cast<std::size_t>(i)] == pool - j + i) --i;
      if (i < 0) break;
      ++combo[static_cast<std::size_t>(i)];
      for (int m = i + 1; m < j; ++m)
        combo[static_cast<std::size_t>(m)] = combo[static_cast<std::size_t>(m - 1)] + 1;
    }
    return out;
  }

  sampled = true;
  auto eng = make_engine(stream);
  if (total != UINT64_MAX) {
    // Floyd's sample of `cap` distinct ranks, then unrank each.
    std::set<std::uint64_t> ranks;
    for (std::uint64_t t = total - cap; t < total; ++t) {
      const std::uint64_t r =
          static_cast<std::uint64_t>(uniform01(eng) * static_cast<double>(t + 1));
      if (!ranks.insert(r).second) ranks.insert(t);
    }
    out.reserve(ranks.size());
    for (std::uint64_t r : ranks) out.push_back(unrank_combination(pool, j, r));
  } else {
    // Combination count does not fit; collisions are vanishingly rare, so
    // draw-and-dedup stays cheap.
    std::set<std::vector<int>> seen;
    std::vector<int> perm(static_cast<std::size_t>(pool));
    for (long i = 0; i < pool; ++i) perm[static_cast<std::size_t>(i)] = static_cast<int>(i);
    while (seen.size() < cap) {
      for (int i = 0; i < j; ++i) {
        const std::size_t pick =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(uniform01(eng) * static_cast<double>(pool - i));
        std::swap(perm[static_cast<std::size_t>(i)], perm[pick]);
      }
      std::vector<int> combo(perm.begin(), perm.begin() + j);
      std::sort(combo.begin(), combo.end());
      seen.insert(std::move(combo));
    }
    out.assign(seen.begin(), seen.end());
  }
  return out;
}

struct BaseModel {
  std::vector<int> indices;
  std::vector<double> ginv;
  int d = 0;
};

inline double quad_form(const double* ginv, const double* w, int d) {
  double val = 0.0;
  for (int a = 0; a < d; ++a) {
    double acc = 0.0;
    const double* row = ginv + a * d;
    for (int b = 0; b < d; ++b) acc += row[b] * w[b];
    val += w[a] * acc;
  }
  return val;
}

// Shared Monte-Carlo driver: counts, per rank family, the trials whose
// maximum quadratic form exceeds the family threshold. Chunked over trials
// with a fixed chunk width; every trial's draw comes from its own substream,
// so counts do not depend on the thread count.
inline std::vector<BoundReport> run_exceedance_mc(const Matrix& X,
                                                  std::vector<ModelFamily> families,
                                                  const std::optional<BaseModel>& base, long p,
                                                  std::uint64_t trials, ErrorFamily family,
                                                  std::uint64_t seed, int threads) {
  const long n = X.rows();
  const std::size_t nfam = families.size();
  if (nfam == 0) return {};
  const std::uint64_t nchunks = (trials + kTrialChunk - 1) / kTrialChunk;
  std::vector<std::vector<std::uint64_t>> chunk_counts(
      static_cast<std::size_t>(nchunks), std::vector<std::uint64_t>(nfam, 0));

  int max_d = base ? base->d : 0;
  for (const ModelFamily& fam : families) max_d = std::max(max_d, fam.d);

  const Matrix Xt = X.transpose();
  std::atomic<std::uint64_t> next_chunk{0};

  auto worker = [&]() {
    Matrix U(n, kTrialChunk);
    Matrix C(X.cols(), kTrialChunk);
    std::vector<double> w(static_cast<std::size_t>(max_d), 0.0);
    std::vector<std::uint8_t> flag(static_cast<std::size_t>(kTrialChunk));
    std::vector<double> base_val(static_cast<std::size_t>(kTrialChunk), 0.0);

    while (true) {
      const std::uint64_t chunk = next_chunk.fetch_add(1);
      if (chunk >= nchunks) break;
      const std::uint64_t t0 = chunk * kTrialChunk;
      const int width = static_cast<int>(std::min<std::uint64_t>(kTrialChunk, trials - t0));

      for (int t = 0; t < width; ++t) {
        U.col(t) = sample_errors(family, n, {seed, derive_stream({kRoleTrial, t0 + t})});
      }
      C.leftCols(width).noalias() = Xt * U.leftCols(width);

      if (base) {
        for (int t = 0; t < width; ++t) {
          const double* col = C.col(t).data();
          for (int i = 0; i < base->d; ++i)
            w[static_cast<std::size_t>(i)] = col[base->indices[static_cast<std::size_t>(i)]];
          base_val[static_cast<std::size_t>(t)] = quad_form(base->ginv.data(), w.data(), base->d);
        }
      }

      for (std::size_t f = 0; f < nfam; ++f) {
        const ModelFamily& fam = families[f];
        std::fill(flag.begin(), flag.begin() + width, 0);
        const int d = fam.d;
        for (std::size_t m = 0; m < fam.count; ++m) {
          const int* idx = fam.indices.data() + m * static_cast<std::size_t>(d);
          const double* ginv = fam.ginv.data() + m * static_cast<std::size_t>(d * d);
          for (int t = 0; t < width; ++t) {
            if (flag[static_cast<std::size_t>(t)]) continue;
            const double* col = C.col(t).data();
            for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] = col[idx[i]];
            double val = quad_form(ginv, w.data(), d);
            if (base) val -= base_val[static_cast<std::size_t>(t)];
            if (val > fam.threshold) flag[static_cast<std::size_t>(t)] = 1;
          }
        }
        std::uint64_t cnt = 0;
        for (int t = 0; t < width; ++t) cnt += flag[static_cast<std::size_t>(t)];
        chunk_counts[static_cast<std::size_t>(chunk)][f] = cnt;
      }
    }
  };

  int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (nthreads < 1) nthreads = 1;
  std::vector<std::thread> pool;
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<BoundReport> reports;
  reports.reserve(nfam);
  for (std::size_t f = 0; f < nfam; ++f) {
    BoundReport r;
    r.j = families[f].rank_j;
    r.p = p;
    r.m_j = families[f].threshold;
    r.trials = trials;
    for (std::uint64_t c = 0; c < nchunks; ++c) r.exceed_count += chunk_counts[c][f];
    r.empirical_rate = static_cast<double>(r.exceed_count) / static_cast<double>(trials);
    r.theoretical_bound =
        std::exp(-(static_cast<double>(r.j) / 3.0) * std::sqrt(std::log(static_cast<double>(p))));
    r.sampled = families[f].sampled;
    reports.push_back(r);
  }
  return reports;
}

}  // namespace bounds_detail

struct ProjectorMcConfig {
  long n = 0;
  long p = 0;
  int max_rank = 0;
  std::uint64_t trials = 0;
  ErrorFamily family = ErrorFamily::standard_normal;
  std::uint64_t models_per_rank = 100000;  // sample this many sets when C(p, j) is larger
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
};

// For each rank j <= max_rank, Monte-Carlo exceedance of m_j by
// max_s u^T H(s) u over column-subset projectors of one fixed random design.
inline std::vector<BoundReport> mc_max_projector_form(const ProjectorMcConfig& cfg) {
  if (cfg.n < 1 || cfg.p < 2) throw input_error("mc_max_projector_form: need n >= 1, p >= 2");
  if (cfg.max_rank < 0 || cfg.max_rank >= std::min(cfg.n, cfg.p)) {
    throw input_error("mc_max_projector_form: need 0 <= max_rank < min(n, p)");
  }
  if (cfg.trials < 1) throw input_error("mc_max_projector_form: need trials >= 1");

  auto eng = make_engine({cfg.seed, derive_stream({bounds_detail::kRoleDesign})});
  const Matrix X = datagen_detail::draw_iid_normal(cfg.n, cfg.p, eng);

  std::vector<bounds_detail::ModelFamily> families;
  for (int j = 1; j <= cfg.max_rank; ++j) {
    bounds_detail::ModelFamily fam;
    fam.rank_j = j;
    fam.d = j;
    fam.threshold = m_threshold(j, cfg.p);
    const auto combos = bounds_detail::enumerate_or_sample(
        cfg.p, j, cfg.models_per_rank,
        {cfg.seed, derive_stream({bounds_detail::kRoleModels, static_cast<std::uint64_t>(j)})},
        fam.sampled);
    for (const auto& c : combos) bounds_detail::append_model(fam, X, c);
    families.push_back(std::move(fam));
  }
  return bounds_detail::run_exceedance_mc(X, std::move(families), std::nullopt, cfg.p, cfg.trials,
                                          cfg.family, cfg.seed, cfg.threads);
}

struct NestedMcConfig {
  long n = 0;
  long p = 0;
  long p0 = 0;
  double k = 0.0;
  std::uint64_t trials = 0;
  ErrorFamily family = ErrorFamily::standard_normal;
  std::uint64_t models_per_rank = 100000;
  std::uint64_t seed = 0;
  int threads = 0;
};

// Difference projectors H(s) - H(s0) for s containing s0, |s| = p0 + j,
// j <= (k - 1) p0; exceedance accounting as in mc_max_projector_form.
inline std::vector<BoundReport> mc_nested_form(const NestedMcConfig& cfg) {
  if (cfg.n < 1 || cfg.p < 2) throw input_error("mc_nested_form: need n >= 1, p >= 2");
  if (cfg.p0 < 1 || cfg.p0 > cfg.p) throw input_error("mc_nested_form: need 1 <= p0 <= p");
  if (!(cfg.k >= 1.0)) throw input_error("mc_nested_form: need k >= 1");
  if (cfg.k * static_cast<double>(cfg.p0) > static_cast<double>(std::min(cfg.n, cfg.p))) {
    throw input_error("mc_nested_form: need k * p0 <= min(n, p)");
  }
  if (cfg.trials < 1) throw input_error("mc_nested_form: need trials >= 1");

  auto eng = make_engine({cfg.seed, derive_stream({bounds_detail::kRoleDesign})});
  const Matrix X = datagen_detail::draw_iid_normal(cfg.n, cfg.p, eng);

  bounds_detail::BaseModel base;
  base.d = static_cast<int>(cfg.p0);
  for (long i = 0; i < cfg.p0; ++i) base.indices.push_back(static_cast<int>(i));
  {
    bounds_detail::ModelFamily tmp;
    tmp.d = base.d;
    bounds_detail::append_model(tmp, X, base.indices);
    base.ginv = std::move(tmp.ginv);
  }

  const int max_j = static_cast<int>(std::floor((cfg.k - 1.0) * static_cast<double>(cfg.p0)));
  std::vector<bounds_detail::ModelFamily> families;
  for (int j = 1; j <= max_j; ++j) {
    bounds_detail::ModelFamily fam;
    fam.rank_j = j;
    fam.d = static_cast<int>(cfg.p0) + j;
    fam.threshold = m_threshold(j, cfg.p);
    const auto combos = bounds_detail::enumerate_or_sample(
        cfg.p - cfg.p0, j, cfg.models_per_rank,
        {cfg.seed, derive_stream({bounds_detail::kRoleModels, static_cast<std::uint64_t>(j)})},
        fam.sampled);
    for (const auto& add : combos) {
      std::vector<int> cols = base.indices;
      for (int a : add) cols.push_back(static_cast<int>(cfg.p0) + a);
      bounds_detail::append_model(fam, X, cols);
    }
    families.push_back(std::move(fam));
  }
  return bounds_detail::run_exceedance_mc(X, std::move(families), base, cfg.p, cfg.trials,
                                          cfg.family, cfg.seed, cfg.threads);
}

}  // namespace mbic
