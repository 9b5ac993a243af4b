#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace homog::sparse {

/// Compressed sparse row matrix.
struct Csr {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> idx;
  std::vector<double> val;

  std::size_t nnz() const noexcept { return val.size(); }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) s += val[k] * x[idx[k]];
      y[i] = s;
    }
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k)
        if (idx[k] == i) d[i] += val[k];
    return d;
  }

  Csr transpose() const {
    Csr t;
    t.rows = cols;
    t.cols = rows;
    t.ptr.assign(cols + 1, 0);
    for (std::uint32_t j : idx) ++t.ptr[j + 1];
    for (std::size_t j = 0; j < cols; ++j) t.ptr[j + 1] += t.ptr[j];
    t.idx.resize(nnz());
    t.val.resize(nnz());
    std::vector<std::size_t> next(t.ptr.begin(), t.ptr.end() - 1);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
        const std::size_t slot = next[idx[k]]++;
        t.idx[slot] = static_cast<std::uint32_t>(i);
        t.val[slot] = val[k];
      }
    return t;
  }
};

/// Builds a CSR matrix from (row, col, value) triplets; duplicates are summed.
class TripletBuilder {
 public:
  TripletBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

  void add(std::size_t r, std::size_t c, double v) { entries_.push_back({r, c, v}); }

  Csr build() {
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
      return a.r != b.r ? a.r < b.r : a.c < b.c;
    });
    Csr m;
    m.rows = rows_;
    m.cols = cols_;
    m.ptr.assign(rows_ + 1, 0);
    for (std::size_t k = 0; k < entries_.size();) {
      const std::size_t r = entries_[k].r, c = entries_[k].c;
      double v = 0.0;
      while (k < entries_.size() && entries_[k].r == r && entries_[k].c == c) v += entries_[k++].v;
      m.idx.push_back(static_cast<std::uint32_t>(c));
      m.val.push_back(v);
      ++m.ptr[r + 1];
    }
    for (std::size_t i = 0; i < rows_; ++i) m.ptr[i + 1] += m.ptr[i];
    entries_.clear();
    return m;
  }

 private:
  struct Entry {
    std::size_t r, c;
    double v;
  };
  std::size_t rows_, cols_;
  std::vector<Entry> entries_;
};

/// C = A B.
inline Csr multiply(const Csr& a, const Csr& b) {
  if (a.cols != b.rows) throw std::invalid_argument("sparse multiply: shape mismatch");
  Csr c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.ptr.assign(a.rows + 1, 0);
  std::vector<std::int64_t> slot(b.cols, -1);
  std::vector<std::uint32_t> cols_in_row;
  std::vector<double> acc;
  for (std::size_t i = 0; i < a.rows; ++i) {
    cols_in_row.clear();
    acc.clear();
    for (std::size_t ka = a.ptr[i]; ka < a.ptr[i + 1]; ++ka) {
      const std::size_t j = a.idx[ka];
      const double av = a.val[ka];
      for (std::size_t kb = b.ptr[j]; kb < b.ptr[j + 1]; ++kb) {
        const std::uint32_t col = b.idx[kb];
        if (slot[col] < 0) {
          slot[col] = static_cast<std::int64_t>(acc.size());
          cols_in_row.push_back(col);
          acc.push_back(0.0);
        }
        acc[slot[col]] += av * b.val[kb];
      }
    }
    std::vector<std::size_t> order(cols_in_row.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return cols_in_row[x] < cols_in_row[y]; });
    for (std::size_t k : order) {
      c.idx.push_back(cols_in_row[k]);
      c.val.push_back(acc[k]);
      slot[cols_in_row[k]] = -1;
    }
    c.ptr[i + 1] = c.idx.size();
  }
  return c;
}

/// Dense Cholesky factorization for the coarsest multigrid level.
class DenseCholesky {
 public:
  explicit DenseCholesky(const Csr& a) : n_(a.rows), l_(a.rows * a.rows, 0.0) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = a.ptr[i]; k < a.ptr[i + 1]; ++k) l_[i * n_ + a.idx[k]] = a.val[k];
    for (std::size_t j = 0; j < n_; ++j) {
      double djj = l_[j * n_ + j];
      for (std::size_t k = 0; k < j; ++k) djj -= l_[j * n_ + k] * l_[j * n_ + k];
      if (!(djj > 0.0)) throw std::runtime_error("coarse operator is not positive definite");
      const double ljj = std::sqrt(djj);
      l_[j * n_ + j] = ljj;
      for (std::size_t i = j + 1; i < n_; ++i) {
        double s = l_[i * n_ + j];
        for (std::size_t k = 0; k < j; ++k) s -= l_[i * n_ + k] * l_[j * n_ + k];
        l_[i * n_ + j] = s / ljj;
      }
    }
  }

  void solve(std::span<const double> b, std::span<double> x) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= l_[i * n_ + k] * x[k];
      x[i] = s / l_[i * n_ + i];
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      double s = x[ii];
      for (std::size_t k = ii + 1; k < n_; ++k) s -= l_[k * n_ + ii] * x[k];
      x[ii] = s / l_[ii * n_ + ii];
    }
  }

 private:
  std::size_t n_;
  std::vector<double> l_;
};

inline void gauss_seidel(const Csr& a, std::span<const double> diag, std::span<const double> b,
                         std::span<double> x, bool forward) {
  const std::size_t n = a.rows;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = forward ? t : n - 1 - t;
    double s = b[i];
    for (std::size_t k = a.ptr[i]; k < a.ptr[i + 1]; ++k)
      if (a.idx[k] != i) s -= a.val[k] * x[a.idx[k]];
    x[i] = s / diag[i];
  }
}

/// Symmetric V-cycle with Galerkin coarse operators. Used as an SPD
/// preconditioner for conjugate gradients.
class Multigrid {
 public:
  /// `prolongations[l]` maps level l+1 (coarser) to level l.
  Multigrid(Csr fine, std::vector<Csr> prolongations, int sweeps = 2) : sweeps_(sweeps) {
    levels_.push_back(Level{std::move(fine), {}, {}, {}});
    for (auto& p : prolongations) {
      Level& f = levels_.back();
      Csr r = p.transpose();
      Csr coarse = multiply(r, multiply(f.a, p));
      f.p = std::move(p);
      f.r = std::move(r);
      levels_.push_back(Level{std::move(coarse), {}, {}, {}});
    }
    for (auto& l : levels_) {
      l.diag = l.a.diagonal();
      for (double dv : l.diag)
        if (!(dv > 0.0)) throw std::runtime_error("multigrid: non-positive diagonal");
    }
    if (levels_.back().a.rows <= kDenseLimit) coarse_ = std::make_unique<DenseCholesky>(levels_.back().a);
  }

  std::size_t num_levels() const noexcept { return levels_.size(); }

  void apply(std::span<const double> b, std::span<double> x) const { cycle(0, b, x); }

 private:
  static constexpr std::size_t kDenseLimit = 3000;

  struct Level {
    Csr a;
    Csr p;
    Csr r;
    std::vector<double> diag;
  };

  void cycle(std::size_t l, std::span<const double> b, std::span<double> x) const {
    const Level& lv = levels_[l];
    const std::size_t n = lv.a.rows;
    std::fill(x.begin(), x.end(), 0.0);
    if (l + 1 == levels_.size()) {
      if (coarse_) {
        coarse_->solve(b, x);
      } else {
        for (int s = 0; s < 4 * sweeps_; ++s) {
          gauss_seidel(lv.a, lv.diag, b, x, true);
          gauss_seidel(lv.a, lv.diag, b, x, false);
        }
      }
      return;
    }
    for (int s = 0; s < sweeps_; ++s) gauss_seidel(lv.a, lv.diag, b, x, true);
    std::vector<double> res(n);
    lv.a.multiply(x, res);
    for (std::size_t i = 0; i < n; ++i) res[i] = b[i] - res[i];
    std::vector<double> bc(lv.r.rows), xc(lv.r.rows);
    lv.r.multiply(res, bc);
    cycle(l + 1, bc, xc);
    lv.p.multiply(xc, res);
    for (std::size_t i = 0; i < n; ++i) x[i] += res[i];
    for (int s = 0; s < sweeps_; ++s) gauss_seidel(lv.a, lv.diag, b, x, false);
  }

  int sweeps_;
  std::vector<Level> levels_;
  std::unique_ptr<DenseCholesky> coarse_;
};

}  // namespace homog::sparse
