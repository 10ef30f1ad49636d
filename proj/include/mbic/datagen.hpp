#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mbic/csv.hpp"
#include "mbic/linalg.hpp"
#include "mbic/rng.hpp"
#include "mbic/types.hpp"

namespace mbic {

// All families have mean 0 and variance exactly 1, and satisfy the
// subgaussian MGF bound E exp(t e) <= exp(t^2 / 2).
enum class ErrorFamily { standard_normal, rademacher, uniform_sym };

inline std::string_view to_string(ErrorFamily f) {
  switch (f) {
    case ErrorFamily::standard_normal: return "standard_normal";
    case ErrorFamily::rademacher: return "rademacher";
    case ErrorFamily::uniform_sym: return "uniform_sym";
  }
  return "?";
}

inline ErrorFamily error_family_from_string(std::string_view s) {
  if (s == "standard_normal" || s == "normal") return ErrorFamily::standard_normal;
  if (s == "rademacher") return ErrorFamily::rademacher;
  if (s == "uniform_sym" || s == "uniform") return ErrorFamily::uniform_sym;
  throw input_error("unknown error family '" + std::string(s) +
                    "' (expected standard_normal, rademacher or uniform_sym)");
}

// iid_normal: raw iid N(0,1) entries. orthogonalized: orthonormal columns
// from a QR of an iid draw, scaled so every column has squared norm n
// (requires p <= n). orthogonalized_blocks: the same construction applied to
// consecutive blocks of up to n columns, so p > n keeps exact column norm
// sqrt(n) and exact within-block orthogonality.
enum class DesignKind { iid_normal, orthogonalized, orthogonalized_blocks };

inline std::string_view to_string(DesignKind k) {
  switch (k) {
    case DesignKind::iid_normal: return "iid_normal";
    case DesignKind::orthogonalized: return "orthogonalized";
    case DesignKind::orthogonalized_blocks: return "orthogonalized_blocks";
  }
  return "?";
}

inline DesignKind design_kind_from_string(std::string_view s) {
  if (s == "iid_normal") return DesignKind::iid_normal;
  if (s == "orthogonalized") return DesignKind::orthogonalized;
  if (s == "orthogonalized_blocks") return DesignKind::orthogonalized_blocks;
  throw input_error("unknown design kind '" + std::string(s) +
                    "' (expected iid_normal, orthogonalized or orthogonalized_blocks)");
}

// True support is {1..p0} with every true coefficient equal to
// beta_magnitude.
struct Scenario {
  long n = 0;
  long p = 0;
  long p0 = 0;
  double beta_magnitude = 1.0;
  DesignKind design = DesignKind::iid_normal;
  ErrorFamily family = ErrorFamily::standard_normal;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1 || p < 1) throw input_error("Scenario: need n >= 1 and p >= 1");
    if (p0 < 0 || p0 > p) throw input_error("Scenario: need 0 <= p0 <= p");
    if (!(beta_magnitude >= 0.0) || !std::isfinite(beta_magnitude)) {
      throw input_error("Scenario: beta_magnitude must be finite and >= 0");
    }
    if (design == DesignKind::orthogonalized && p > n) {
      throw input_error("Scenario: orthogonalized design requires p <= n");
    }
  }
};

struct GeneratedInstance {
  DesignMatrix X;
  Vector y;
  SignalVector mu;
  ModelIndexSet s0;
  Vector epsilon;
};

namespace datagen_detail {

inline constexpr std::uint64_t kRoleDesign = 0xD1;
inline constexpr std::uint64_t kRoleErrors = 0xE1;
inline constexpr std::uint64_t kRoleModels = 0x51;

}  // namespace datagen_detail

// n independent draws from the family; deterministic given (seed, stream).
inline Vector sample_errors(ErrorFamily family, long n, RngStream stream) {
  if (n < 1) throw input_error("sample_errors: need n >= 1");
  auto eng = make_engine(stream);
  Vector v(n);
  switch (family) {
    case ErrorFamily::standard_normal: {
      NormalSampler normal(eng);
      for (long i = 0; i < n; ++i) v(i) = normal();
      break;
    }
    case ErrorFamily::rademacher:
      for (long i = 0; i < n; ++i) v(i) = rademacher(eng);
      break;
    case ErrorFamily::uniform_sym: {
      const double half_width = std::sqrt(3.0);
      for (long i = 0; i < n; ++i) v(i) = (2.0 * uniform_open(eng) - 1.0) * half_width;
      break;
    }
  }
  return v;
}

namespace datagen_detail {

inline Matrix draw_iid_normal(long n, long p, std::mt19937_64& eng) {
  Matrix X(n, p);
  NormalSampler normal(eng);
  for (long c = 0; c < p; ++c) {
    for (long r = 0; r < n; ++r) X(r, c) = normal();
  }
  return X;
}

inline Matrix draw_design(const Scenario& sc) {
  auto eng = make_engine({sc.seed, derive_stream({kRoleDesign})});
  if (sc.design == DesignKind::iid_normal) return draw_iid_normal(sc.n, sc.p, eng);

  // Orthonormalize blocks of up to n columns and scale to column norm
  // sqrt(n); a single block when p <= n.
  Matrix X(sc.n, sc.p);
  const double scale = std::sqrt(static_cast<double>(sc.n));
  long done = 0;
  while (done < sc.p) {
    const long width = std::min(sc.n, sc.p - done);
    const Matrix g = draw_iid_normal(sc.n, width, eng);
    Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix thin_q = qr.householderQ() * Matrix::Identity(sc.n, width);
    X.middleCols(done, width) = scale * thin_q;
    done += width;
  }
  return X;
}

}  // namespace datagen_detail

// mu = X(s0) beta(s0); shared between generate() and tests so the
// construction identity can be checked bit-for-bit.
inline Vector signal_from(const Matrix& X, long p0, double beta_magnitude) {
  if (p0 == 0) return Vector::Zero(X.rows());
  return X.leftCols(p0) * Vector::Constant(p0, beta_magnitude);
}

inline GeneratedInstance generate(const Scenario& sc) {
  sc.validate();
  Matrix values = datagen_detail::draw_design(sc);
  Vector mu = signal_from(values, sc.p0, sc.beta_magnitude);
  Vector eps = sample_errors(sc.family, sc.n,
                             {sc.seed, derive_stream({datagen_detail::kRoleErrors})});
  Vector y = mu + eps;

  std::vector<int> s0(static_cast<std::size_t>(sc.p0));
  for (long j = 0; j < sc.p0; ++j) s0[static_cast<std::size_t>(j)] = static_cast<int>(j) + 1;

  return GeneratedInstance{DesignMatrix(std::move(values)), std::move(y),
                           SignalVector{std::move(mu)}, ModelIndexSet(std::move(s0)),
                           std::move(eps)};
}

// min over wrong models of Delta(s) / (p0 ln p), the identifiability
// functional of condition (2). Wrong models: s not containing s0, |s| <=
// floor(k p0). Enumerates exhaustively when the count fits the cap,
// otherwise samples per size; `exhaustive` in the report records which.
struct IdentifiabilityReport {
  double ratio = 0.0;
  bool exhaustive = true;
  std::uint64_t models_evaluated = 0;
};

inline IdentifiabilityReport identifiability_ratio(const GeneratedInstance& inst, double k,
                                                   std::uint64_t cap = 200000) {
  const long p0 = inst.s0.size();
  const long p = inst.X.p();
  if (p0 < 1) throw input_error("identifiability_ratio: undefined for p0 = 0");
  if (!(k > 0.0)) throw input_error("identifiability_ratio: need k > 0");
  if (p < 2) throw input_error("identifiability_ratio: need p >= 2");

  const int m = static_cast<int>(std::min<double>(std::floor(k * static_cast<double>(p0)),
                                                  static_cast<double>(p)));

  // Qualifying models per size: all of size j minus those containing s0.
  auto qualifying = [&](int j) -> double {
    double all = 1.0, with_s0 = 1.0;
    for (int i = 0; i < j; ++i) all *= static_cast<double>(p - i) / (i + 1);
    if (j >= p0) {
      for (int i = 0; i < j - p0; ++i) with_s0 *= static_cast<double>(p - p0 - i) / (i + 1);
    } else {
      with_s0 = 0.0;
    }
    return all - with_s0;
  };
  double total = 0.0;
  for (int j = 0; j <= m; ++j) total += qualifying(j);

  IdentifiabilityReport rep;
  rep.exhaustive = total <= static_cast<double>(cap);
  double min_delta = std::numeric_limits<double>::infinity();

  IncrementalFit inc(inst.X, inst.mu.mu);
  if (rep.exhaustive) {
    // DFS over sets of size <= m; a set containing the whole of {1..p0}
    // passes containment to every descendant, so the subtree is skipped.
    std::uint64_t evaluated = 0;
    auto consider = [&]() {
      min_delta = std::min(min_delta, inc.rss());
      ++evaluated;
    };
    consider();  // the empty model never contains s0 (p0 >= 1)
    int true_count = 0;
    auto dfs = [&](auto&& self, int start) -> void {
      for (int j = start; j <= p; ++j) {
        inc.extend(j);
        if (j <= p0) ++true_count;
        if (true_count < p0) {
          consider();
          if (inc.size() < m) self(self, j + 1);
        }
        if (j <= p0) --true_count;
        inc.retract();
      }
    };
    if (m > 0) dfs(dfs, 1);
    rep.models_evaluated = evaluated;
  } else {
    // Per-size subsampling of models missing at least one true index. The
    // stream is a fixed function of (k, cap), so the report is reproducible.
    auto eng = make_engine({splitmix64(static_cast<std::uint64_t>(m)),
                            derive_stream({datagen_detail::kRoleModels, cap})});
    const std::uint64_t per_size = std::max<std::uint64_t>(1, cap / (static_cast<std::uint64_t>(m) + 1));
    std::uint64_t evaluated = 0;
    min_delta = inst.mu.mu.squaredNorm();  // Delta of the empty model
    ++evaluated;
    std::vector<int> pool(static_cast<std::size_t>(p));
    for (long j = 0; j < p; ++j) pool[static_cast<std::size_t>(j)] = static_cast<int>(j) + 1;
    for (int j = 1; j <= m; ++j) {
      const double qual = qualifying(j);
      const std::uint64_t want =
          qual <= static_cast<double>(per_size) ? static_cast<std::uint64_t>(qual) : per_size;
      std::uint64_t got = 0;
      while (got < want) {
        // Partial Fisher-Yates draw of a j-subset.
        for (int i = 0; i < j; ++i) {
          const std::size_t pick =
              static_cast<std::size_t>(i) +
              static_cast<std::size_t>(uniform01(eng) * static_cast<double>(p - i));
          std::swap(pool[static_cast<std::size_t>(i)], pool[pick]);
        }
        std::vector<int> s(pool.begin(), pool.begin() + j);
        std::sort(s.begin(), s.end());
        int true_count = 0;
        for (int idx : s)
          if (idx <= p0) ++true_count;
        if (true_count == p0) continue;  // contains s0; not a wrong model
        const double d = fit_model(inst.X, inst.mu.mu, ModelIndexSet(std::move(s))).rss;
        min_delta = std::min(min_delta, d);
        ++got;
        ++evaluated;
      }
    }
    rep.models_evaluated = evaluated;
  }

  rep.ratio = min_delta / (static_cast<double>(p0) * std::log(static_cast<double>(p)));
  return rep;
}

// Instance CSV: response first ("y"), predictors "x1".."xp", header row,
// LF newlines, shortest round-trip decimals.
inline std::string instance_to_csv(const GeneratedInstance& inst) {
  std::string out = "y";
  for (long j = 1; j <= inst.X.p(); ++j) out += ",x" + std::to_string(j);
  out += '\n';
  for (long i = 0; i < inst.X.n(); ++i) {
    out += format_double(inst.y(i));
    for (long j = 0; j < inst.X.p(); ++j) {
      out += ',';
      out += format_double(inst.X.values()(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace mbic
