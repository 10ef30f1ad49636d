#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mbic {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Tolerances used throughout; fixed so test expectations are reproducible.
inline constexpr double kIncrementalRelTol = 1e-8;  // incremental vs from-scratch fits
inline constexpr double kAlgebraicRelTol = 1e-9;    // projector identities
inline constexpr double kOracleRelTol = 1e-10;      // against dense oracles
inline constexpr double kPivotRelTol = 1e-10;       // pivot threshold vs largest pivot

// Bad user input (dimensions, indices, malformed files/config). CLI exit 2.
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A search or enumeration exceeded its configured budget. CLI exit 3.
class budget_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// n x p predictor matrix. Columns are addressed 1-based.
class DesignMatrix {
 public:
  explicit DesignMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw input_error("DesignMatrix: need n >= 1 and p >= 1");
    }
    if (!values_.allFinite()) {
      throw input_error("DesignMatrix: all entries must be finite");
    }
  }

  Eigen::Index n() const { return values_.rows(); }
  Eigen::Index p() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

  // 1-based column access.
  Eigen::Ref<const Vector> column(int j) const {
    check_index(j);
    return values_.col(j - 1);
  }

  void check_index(int j) const {
    if (j < 1 || j > values_.cols()) {
      throw input_error("DesignMatrix: column index " + std::to_string(j) +
                        " outside {1.." + std::to_string(values_.cols()) + "}");
    }
  }

 private:
  Matrix values_;
};

// A model: strictly increasing 1-based column indices. Empty set is a valid model.
class ModelIndexSet {
 public:
  ModelIndexSet() = default;

  explicit ModelIndexSet(std::vector<int> indices) : idx_(std::move(indices)) {
    std::sort(idx_.begin(), idx_.end());
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      if (idx_[i] < 1) throw input_error("ModelIndexSet: indices are 1-based");
      if (i > 0 && idx_[i] == idx_[i - 1]) {
        throw input_error("ModelIndexSet: duplicate index " + std::to_string(idx_[i]));
      }
    }
  }

  static ModelIndexSet of(std::initializer_list<int> indices) {
    return ModelIndexSet(std::vector<int>(indices));
  }

  int size() const { return static_cast<int>(idx_.size()); }
  bool empty() const { return idx_.empty(); }
  const std::vector<int>& indices() const { return idx_; }

  bool contains(int j) const {
    return std::binary_search(idx_.begin(), idx_.end(), j);
  }

  bool is_subset_of(const ModelIndexSet& other) const {
    return std::includes(other.idx_.begin(), other.idx_.end(), idx_.begin(), idx_.end());
  }

  ModelIndexSet with(int j) const {
    if (contains(j)) throw input_error("ModelIndexSet: index already present");
    std::vector<int> v = idx_;
    v.insert(std::upper_bound(v.begin(), v.end(), j), j);
    ModelIndexSet out;
    out.idx_ = std::move(v);
    return out;
  }

  ModelIndexSet without(int j) const {
    std::vector<int> v;
    v.reserve(idx_.size());
    for (int i : idx_)
      if (i != j) v.push_back(i);
    ModelIndexSet out;
    out.idx_ = std::move(v);
    return out;
  }

  void check_range(Eigen::Index p) const {
    if (!idx_.empty() && idx_.back() > p) {
      throw input_error("ModelIndexSet: index " + std::to_string(idx_.back()) +
                        " exceeds p = " + std::to_string(p));
    }
  }

  friend bool operator==(const ModelIndexSet& a, const ModelIndexSet& b) {
    return a.idx_ == b.idx_;
  }
  friend bool operator!=(const ModelIndexSet& a, const ModelIndexSet& b) {
    return !(a == b);
  }
  // Lexicographic order; used as the final tie-break in searches.
  friend bool lex_less(const ModelIndexSet& a, const ModelIndexSet& b) {
    return std::lexicographical_compare(a.idx_.begin(), a.idx_.end(),
                                        b.idx_.begin(), b.idx_.end());
  }

  auto begin() const { return idx_.begin(); }
  auto end() const { return idx_.end(); }

 private:
  std::vector<int> idx_;
};

// Least-squares fit of y on X(s).
struct FitResult {
  double rss = 0.0;          // squared norm of residuals
  int rank = 0;              // numerical rank of X(s), <= |s|
  Vector coefficients;       // length |s|, aligned with the sorted index set
  Vector residuals;          // length n
};

// The noiseless signal mu = X(s0) beta(s0).
struct SignalVector {
  Vector mu;
};

inline Matrix gather_columns(const DesignMatrix& X, const ModelIndexSet& s) {
  s.check_range(X.p());
  Matrix out(X.n(), s.size());
  int c = 0;
  for (int j : s) out.col(c++) = X.values().col(j - 1);
  return out;
}

}  // namespace mbic
