#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Dense linear algebra for desk-scale verification: a cyclic Jacobi
// eigensolver, the Laplacian pseudo-inverse, and a Jacobi-preconditioned
// conjugate-gradient solver for singular-but-consistent Laplacian systems.
// Everything is deterministic for fixed inputs.

namespace respars {

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative shape");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  std::span<double> row(int i) { return {data_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int i) const { return {data_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("Matrix multiply: shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i) {
      for (int k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        const double* brow = &b.data_[static_cast<std::size_t>(k) * b.cols_];
        double* crow = &c.data_[static_cast<std::size_t>(i) * c.cols_];
        for (int j = 0; j < b.cols_; ++j) crow[j] += aik * brow[j];
      }
    }
    return c;
  }

  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("Matrix subtract: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] -= b.data_[i];
    return c;
  }

  friend Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("Matrix add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] += b.data_[i];
    return c;
  }

  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
  if (m.cols() != static_cast<int>(x.size())) throw std::invalid_argument("matvec: shape mismatch");
  std::vector<double> y(m.rows(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    auto r = m.row(i);
    for (int j = 0; j < m.cols(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

// Square matrix checked (not forced) symmetric on construction.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("SymmetricMatrix: not square");
    const double scale = m_.max_abs();
    double dev = 0.0;
    for (int i = 0; i < m_.rows(); ++i)
      for (int j = i + 1; j < m_.cols(); ++j) dev = std::max(dev, std::abs(m_(i, j) - m_(j, i)));
    if (dev > 1e-12 * scale)
      throw std::invalid_argument("SymmetricMatrix: asymmetry " + std::to_string(dev) + " exceeds tolerance");
  }

  int order() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix m_;
};

struct SymEig {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]
};

// Cyclic Jacobi rotations with the classic small-element deflation trick.
inline SymEig sym_eig(const SymmetricMatrix& sm) {
  const int n = sm.order();
  if (n > 5000) throw std::invalid_argument("sym_eig: order exceeds desk-scale limit");
  Matrix a = sm.mat();
  Matrix v = Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::abs(a(p, q));
    if (off == 0.0) break;
    const double thresh = (sweep < 3) ? 0.2 * off / (static_cast<double>(n) * n) : 0.0;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        if (std::abs(apq) <= thresh) continue;

        const double h = a(q, q) - a(p, p);
        double t;
        if (std::abs(h) + g == std::abs(h)) {
          t = apq / h;
        } else {
          const double theta = 0.5 * h / apq;
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        const double app = a(p, p), aqq = a(q, q);

        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = akp - s * (akq + tau * akp);
          a(p, k) = a(k, p);
          a(k, q) = akq + s * (akp - tau * akq);
          a(q, k) = a(k, q);
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp - s * (vkq + tau * vkp);
          v(k, q) = vkq + s * (vkp - tau * vkq);
        }
      }
    }
  }

  SymEig out;
  out.values.resize(n);
  for (int i = 0; i < n; ++i) out.values[i] = a(i, i);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return out.values[x] < out.values[y]; });
  std::vector<double> sorted(n);
  Matrix vecs(n, n);
  for (int k = 0; k < n; ++k) {
    sorted[k] = out.values[order[k]];
    for (int i = 0; i < n; ++i) vecs(i, k) = v(i, order[k]);
  }
  out.values = std::move(sorted);
  out.vectors = std::move(vecs);
  return out;
}

// Moore-Penrose inverse of a graph Laplacian; eigenvalues below
// 1e-9 * lambda_max count as the null space.
inline SymmetricMatrix pinv_laplacian(const SymmetricMatrix& lap) {
  const SymEig eig = sym_eig(lap);
  const int n = lap.order();
  double lam_max = 0.0;
  for (double l : eig.values) lam_max = std::max(lam_max, std::abs(l));
  const double cutoff = 1e-9 * lam_max;

  Matrix p(n, n);
  for (int k = 0; k < n; ++k) {
    const double lam = eig.values[k];
    if (std::abs(lam) <= cutoff) continue;
    const double inv = 1.0 / lam;
    for (int i = 0; i < n; ++i) {
      const double vik = eig.vectors(i, k) * inv;
      if (vik == 0.0) continue;
      for (int j = 0; j < n; ++j) p(i, j) += vik * eig.vectors(j, k);
    }
  }
  // Symmetrize away rotation roundoff before the checked constructor.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double m = 0.5 * (p(i, j) + p(j, i));
      p(i, j) = m;
      p(j, i) = m;
    }
  return SymmetricMatrix(std::move(p));
}

class CgFailure : public std::runtime_error {
 public:
  CgFailure(const std::string& what, double residual)
      : std::runtime_error(what), final_residual(residual) {}
  double final_residual;
};

namespace detail {

inline void project_per_component(std::vector<double>& x,
                                  const std::vector<std::vector<int>>& comps) {
  for (const auto& c : comps) {
    double mean = 0.0;
    for (int i : c) mean += x[i];
    mean /= static_cast<double>(c.size());
    for (int i : c) x[i] -= mean;
  }
}

inline double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Jacobi-preconditioned CG on a consistent singular SPD system. `apply`
// computes y = L x; `diag` is the Laplacian diagonal; `comps` lists node
// indices per connected component (the null space is one constant per
// component). Solution and iterates are kept orthogonal to the null space.
template <class Apply>
std::vector<double> cg_laplacian_core(int n, const Apply& apply, std::span<const double> diag,
                                      const std::vector<std::vector<int>>& comps,
                                      std::span<const double> b, double tol, int max_iter) {
  const double bnorm = norm2(b);
  std::vector<double> x(n, 0.0);
  if (bnorm == 0.0) return x;

  for (const auto& c : comps) {
    double s = 0.0;
    for (int i : c) s += b[i];
    if (std::abs(s) > 1e-8 * bnorm)
      throw std::runtime_error("cg_solve_laplacian: inconsistent RHS (not orthogonal to null space)");
  }

  auto precondition = [&](const std::vector<double>& r) {
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = r[i] / (diag[i] > 0.0 ? diag[i] : 1.0);
    project_per_component(z, comps);
    return z;
  };

  std::vector<double> r(b.begin(), b.end());
  project_per_component(r, comps);
  std::vector<double> z = precondition(r);
  std::vector<double> p = z;
  std::vector<double> q(n);
  double rz = dot(r, z);
  double final_res = norm2(r);

  for (int it = 0; it < max_iter; ++it) {
    apply(p, q);
    const double pq = dot(p, q);
    if (pq <= 0.0) break;  // numerically lost positive-definiteness on the range
    const double alpha = rz / pq;
    for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * q[i];

    if (norm2(r) <= tol * bnorm) {
      // Recompute the true residual; recursion error can flatter us.
      project_per_component(x, comps);
      apply(x, q);
      for (int i = 0; i < n; ++i) r[i] = b[i] - q[i];
      project_per_component(r, comps);
      final_res = norm2(r);
      if (final_res <= tol * bnorm) return x;
    }

    z = precondition(r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    final_res = norm2(r);
  }

  project_per_component(x, comps);
  apply(x, q);
  for (int i = 0; i < n; ++i) r[i] = b[i] - q[i];
  final_res = norm2(r);
  if (final_res <= tol * bnorm) return x;
  throw CgFailure("cg_solve_laplacian: no convergence, relative residual " +
                      std::to_string(final_res / bnorm),
                  final_res);
}

// Connected components of the off-diagonal sparsity pattern.
inline std::vector<std::vector<int>> pattern_components(const Matrix& m) {
  const int n = m.rows();
  std::vector<int> label(n, -1);
  std::vector<std::vector<int>> comps;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    stack.push_back(s);
    label[s] = id;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      comps[id].push_back(u);
      for (int w = 0; w < n; ++w) {
        if (w != u && m(u, w) != 0.0 && label[w] < 0) {
          label[w] = id;
          stack.push_back(w);
        }
      }
    }
  }
  return comps;
}

}  // namespace detail

// Solve L x = b for a graph Laplacian L. Defaults: tol 1e-8, max_iter 10n.
inline std::vector<double> cg_solve_laplacian(const SymmetricMatrix& lap, std::span<const double> b,
                                              double tol = 1e-8, int max_iter = 0) {
  const int n = lap.order();
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("cg_solve_laplacian: size mismatch");
  if (max_iter <= 0) max_iter = 10 * std::max(n, 1);
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = lap(i, i);
  const auto comps = detail::pattern_components(lap.mat());
  const Matrix& m = lap.mat();
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      auto row = m.row(i);
      for (int j = 0; j < n; ++j) s += row[j] * x[j];
      y[i] = s;
    }
  };
  return detail::cg_laplacian_core(n, apply, diag, comps, b, tol, max_iter);
}

// Largest |eigenvalue|.
inline double spectral_norm(const SymmetricMatrix& m) {
  if (m.order() == 0) return 0.0;
  const SymEig eig = sym_eig(m);
  return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

// Spectral norm of a general rectangular matrix via the Gram matrix.
inline double operator_norm(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  const Matrix g = a.transposed() * a;
  Matrix sym = g;
  for (int i = 0; i < sym.rows(); ++i)
    for (int j = i + 1; j < sym.cols(); ++j) {
      const double v = 0.5 * (sym(i, j) + sym(j, i));
      sym(i, j) = v;
      sym(j, i) = v;
    }
  const SymEig eig = sym_eig(SymmetricMatrix(std::move(sym)));
  const double lam = std::max(0.0, eig.values.back());
  return std::sqrt(lam);
}

}  // namespace respars
