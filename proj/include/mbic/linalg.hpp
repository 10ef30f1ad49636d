#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mbic/types.hpp"

namespace mbic {

namespace detail {

inline void check_response(const DesignMatrix& X, const Vector& y) {
  if (y.size() != X.n()) {
    throw input_error("response length " + std::to_string(y.size()) +
                      " does not match n = " + std::to_string(X.n()));
  }
  if (!y.allFinite()) throw input_error("response must be finite");
}

}  // namespace detail

// Least-squares fit of y on the columns X(s). Rank deficiency is handled by a
// rank-revealing orthogonal decomposition with column pivoting (pivot
// threshold kPivotRelTol relative to the largest pivot); the minimum-norm
// solution is returned and rss stays the projection residual.
inline FitResult fit_model(const DesignMatrix& X, const Vector& y, const ModelIndexSet& s) {
  detail::check_response(X, y);
  s.check_range(X.p());

  FitResult out;
  if (s.empty()) {
    out.rss = y.squaredNorm();
    out.rank = 0;
    out.coefficients = Vector(0);
    out.residuals = y;
    return out;
  }

  const Matrix Xs = gather_columns(X, s);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(kPivotRelTol);
  cod.compute(Xs);
  out.coefficients = cod.solve(y);
  out.residuals = y - Xs * out.coefficients;
  out.rss = out.residuals.squaredNorm();
  out.rank = static_cast<int>(cod.rank());
  return out;
}

// Incrementally extendable least-squares state: an orthonormal basis of the
// current column span plus the triangular factor, so adding one column costs
// O(n * |s|) instead of a fresh factorization. Single-owner; movable and
// copyable, but not for concurrent mutation. The DesignMatrix must outlive it.
class IncrementalFit {
 public:
  IncrementalFit(const DesignMatrix& X, Vector y) : X_(&X), y_(std::move(y)) {
    detail::check_response(X, y_);
    yty_ = y_.squaredNorm();
    rss_ = yty_;
    present_.assign(static_cast<std::size_t>(X.p()), 0);
    Q_.resize(X.n(), 0);
  }

  // Adds column `index` (1-based). Returns true when the column is
  // numerically independent of the current span (rank grew).
  bool extend(int index) {
    X_->check_index(index);
    if (present_[static_cast<std::size_t>(index - 1)]) {
      throw input_error("extend: column " + std::to_string(index) + " already in the model");
    }
    const auto v = X_->values().col(index - 1);
    const double col_norm = v.norm();

    Entry e;
    e.index = index;
    e.prev_rss = rss_;
    e.r = Vector(rank_);

    // Two-pass Gram-Schmidt; the second pass restores orthogonality lost to
    // cancellation when the new column is nearly in the span.
    Vector w = v;
    if (rank_ > 0) {
      Vector r1 = Q_.leftCols(rank_).transpose() * w;
      w.noalias() -= Q_.leftCols(rank_) * r1;
      Vector r2 = Q_.leftCols(rank_).transpose() * w;
      w.noalias() -= Q_.leftCols(rank_) * r2;
      e.r = r1 + r2;
    }
    const double w_norm = w.norm();
    e.independent = w_norm > kPivotRelTol * col_norm && col_norm > 0.0;

    if (e.independent) {
      e.diag = w_norm;
      if (Q_.cols() == rank_) {
        Q_.conservativeResize(Eigen::NoChange, std::max<Eigen::Index>(8, 2 * rank_));
      }
      Q_.col(rank_) = w / w_norm;
      const double qy = Q_.col(rank_).dot(y_);
      qty_.push_back(qy);
      ++rank_;
      rss_ = std::max(0.0, rss_ - qy * qy);
    }
    present_[static_cast<std::size_t>(index - 1)] = 1;
    entries_.push_back(std::move(e));
    return entries_.back().independent;
  }

  // Undoes the last extend exactly (the previous rss is restored bitwise).
  void retract() {
    if (entries_.empty()) throw input_error("retract: model is empty");
    const Entry& e = entries_.back();
    if (e.independent) {
      --rank_;
      qty_.pop_back();
    }
    rss_ = e.prev_rss;
    present_[static_cast<std::size_t>(e.index - 1)] = 0;
    entries_.pop_back();
  }

  int size() const { return static_cast<int>(entries_.size()); }
  int rank() const { return rank_; }
  double rss() const { return rss_; }
  double yty() const { return yty_; }
  bool has(int index) const { return present_[static_cast<std::size_t>(index - 1)] != 0; }

  ModelIndexSet model() const {
    std::vector<int> idx;
    idx.reserve(entries_.size());
    for (const Entry& e : entries_) idx.push_back(e.index);
    return ModelIndexSet(std::move(idx));
  }

  // Orthonormal basis of the current span (n x rank view).
  Eigen::Ref<const Matrix> basis() const { return Q_.leftCols(rank_); }
  const Vector& response() const { return y_; }
  const DesignMatrix& design() const { return *X_; }

  // Projection residual y - Q Q^T y, computed fresh.
  Vector residual() const {
    Vector r = y_;
    if (rank_ > 0) {
      Eigen::Map<const Vector> qty(qty_.data(), rank_);
      r.noalias() -= Q_.leftCols(rank_) * qty;
    }
    return r;
  }

  // Full FitResult for the current model; coefficients follow the sorted
  // index order (dependent columns get coefficient 0).
  FitResult fit() const {
    FitResult out;
    out.rank = rank_;
    out.residuals = residual();
    out.rss = out.residuals.squaredNorm();

    // Back-substitute R beta = Q^T y over the independent columns.
    Vector beta_basis(rank_);
    {
      std::vector<const Entry*> indep;
      indep.reserve(static_cast<std::size_t>(rank_));
      for (const Entry& e : entries_)
        if (e.independent) indep.push_back(&e);
      for (int i = rank_ - 1; i >= 0; --i) {
        double acc = qty_[static_cast<std::size_t>(i)];
        for (int m = i + 1; m < rank_; ++m) {
          // r of independent column m holds its coordinates on basis 0..m-1.
          acc -= indep[static_cast<std::size_t>(m)]->r(i) * beta_basis(m);
        }
        beta_basis(i) = acc / indep[static_cast<std::size_t>(i)]->diag;
      }
    }

    std::vector<int> sorted;
    sorted.reserve(entries_.size());
    for (const Entry& e : entries_) sorted.push_back(e.index);
    std::sort(sorted.begin(), sorted.end());

    out.coefficients = Vector::Zero(static_cast<Eigen::Index>(entries_.size()));
    int basis_pos = 0;
    for (const Entry& e : entries_) {
      if (!e.independent) continue;
      const auto it = std::lower_bound(sorted.begin(), sorted.end(), e.index);
      out.coefficients(it - sorted.begin()) = beta_basis(basis_pos);
      ++basis_pos;
    }
    return out;
  }

 private:
  struct Entry {
    int index = 0;
    double prev_rss = 0.0;
    Vector r;      // coordinates of the column on the basis at push time
    double diag = 0.0;
    bool independent = false;
  };

  const DesignMatrix* X_;
  Vector y_;
  double yty_ = 0.0;
  double rss_ = 0.0;
  int rank_ = 0;
  Matrix Q_;
  std::vector<double> qty_;
  std::vector<Entry> entries_;
  std::vector<std::uint8_t> present_;
};

// Functional form: returns the enlarged fit plus the reusable factor state.
inline std::pair<FitResult, IncrementalFit> extend_fit(const IncrementalFit& prior, int new_index) {
  IncrementalFit next = prior;
  next.extend(new_index);
  FitResult fr = next.fit();
  return {std::move(fr), std::move(next)};
}

// Delta(s) = mu^T [I - H(s)] mu, the squared distance from the signal to the
// span of model s; zero exactly when s explains the signal.
inline double delta(const DesignMatrix& X, const SignalVector& signal, const ModelIndexSet& s) {
  return fit_model(X, signal.mu, s).rss;
}

// u^T H(s) u for the orthogonal projector H(s); in [0, u^T u].
inline double quadratic_form(const DesignMatrix& X, const Vector& u, const ModelIndexSet& s) {
  detail::check_response(X, u);
  s.check_range(X.p());
  if (s.empty()) return 0.0;
  const FitResult fr = fit_model(X, u, s);
  const double val = (u - fr.residuals).squaredNorm();
  return std::min(val, u.squaredNorm());
}

// u^T [H(s_big) - H(s_small)] u for nested models; mathematically nonnegative.
inline double nested_form(const DesignMatrix& X, const Vector& u, const ModelIndexSet& s_small,
                          const ModelIndexSet& s_big) {
  if (!s_small.is_subset_of(s_big)) {
    throw input_error("nested_form: s_small must be a subset of s_big");
  }
  return quadratic_form(X, u, s_big) - quadratic_form(X, u, s_small);
}

}  // namespace mbic
