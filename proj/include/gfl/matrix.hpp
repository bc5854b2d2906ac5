// matrix.hpp -- dense row-major matrix of doubles plus a CSR sparse form.
// Desk-scale linear algebra; no BLAS, fixed evaluation order for determinism.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gfl {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }

  size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double v : a)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

inline void check_shape(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

// C = A * B
inline Matrix matmul(const Matrix& A, const Matrix& B) {
  check_shape(A.cols == B.rows, "matmul");
  Matrix C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = A.row(i);
    double* crow = C.row(i);
    for (int k = 0; k < A.cols; ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = B.row(k);
      for (int j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return C;
}

// C = A^T * B
inline Matrix matmul_tn(const Matrix& A, const Matrix& B) {
  check_shape(A.rows == B.rows, "matmul_tn");
  Matrix C(A.cols, B.cols);
  for (int k = 0; k < A.rows; ++k) {
    const double* arow = A.row(k);
    const double* brow = B.row(k);
    for (int i = 0; i < A.cols; ++i) {
      double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = C.row(i);
      for (int j = 0; j < B.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return C;
}

// C = A * B^T
inline Matrix matmul_nt(const Matrix& A, const Matrix& B) {
  check_shape(A.cols == B.cols, "matmul_nt");
  Matrix C(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = A.row(i);
    double* crow = C.row(i);
    for (int j = 0; j < B.rows; ++j) {
      const double* brow = B.row(j);
      double s = 0.0;
      for (int k = 0; k < A.cols; ++k) s += arow[k] * brow[k];
      crow[j] += s;
    }
  }
  return C;
}

inline void add_inplace(Matrix& A, const Matrix& B) {
  check_shape(A.same_shape(B), "add");
  for (size_t i = 0; i < A.a.size(); ++i) A.a[i] += B.a[i];
}

inline void axpy_inplace(Matrix& A, double s, const Matrix& B) {
  check_shape(A.same_shape(B), "axpy");
  for (size_t i = 0; i < A.a.size(); ++i) A.a[i] += s * B.a[i];
}

inline void scale_inplace(Matrix& A, double s) {
  for (double& v : A.a) v *= s;
}

// Compressed sparse row; used for fixed graph propagation operators.
struct Csr {
  int rows = 0;
  int cols = 0;
  std::vector<int> offsets;  // rows+1
  std::vector<int> idx;
  std::vector<double> val;

  int nnz() const { return static_cast<int>(idx.size()); }
};

// Y = S * H
inline Matrix spmm(const Csr& S, const Matrix& H) {
  check_shape(S.cols == H.rows, "spmm");
  Matrix Y(S.rows, H.cols);
  for (int i = 0; i < S.rows; ++i) {
    double* yrow = Y.row(i);
    for (int p = S.offsets[i]; p < S.offsets[i + 1]; ++p) {
      double w = S.val[p];
      const double* hrow = H.row(S.idx[p]);
      for (int j = 0; j < H.cols; ++j) yrow[j] += w * hrow[j];
    }
  }
  return Y;
}

inline Csr csr_transpose(const Csr& S) {
  Csr T;
  T.rows = S.cols;
  T.cols = S.rows;
  T.offsets.assign(T.rows + 1, 0);
  for (int c : S.idx) T.offsets[c + 1]++;
  for (int i = 0; i < T.rows; ++i) T.offsets[i + 1] += T.offsets[i];
  T.idx.resize(S.idx.size());
  T.val.resize(S.val.size());
  std::vector<int> cursor(T.offsets.begin(), T.offsets.end() - 1);
  for (int r = 0; r < S.rows; ++r) {
    for (int p = S.offsets[r]; p < S.offsets[r + 1]; ++p) {
      int pos = cursor[S.idx[p]]++;
      T.idx[pos] = r;
      T.val[pos] = S.val[p];
    }
  }
  return T;
}

inline Matrix csr_to_dense(const Csr& S) {
  Matrix D(S.rows, S.cols);
  for (int i = 0; i < S.rows; ++i)
    for (int p = S.offsets[i]; p < S.offsets[i + 1]; ++p) D(i, S.idx[p]) += S.val[p];
  return D;
}

}  // namespace gfl
