// autodiff.hpp -- minimal reverse-mode tape over dense matrices.
//
// Define-by-run: every op computes its value immediately and records enough
// to pull gradients back. Covers the dense layers, the sparse propagation
// operators used by the GNNs (values of the sparse operators are constants,
// only the dense operand receives a gradient), segment ops for edge-list
// attention, and block ops for per-sample token attention.
//
// Sparse operators referenced by a tape must outlive it.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfl/matrix.hpp"

namespace gfl::nn {

class Tape {
 public:
  int input(Matrix v, bool trainable = true) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(v);
    n.needs_grad = trainable;
    return push(std::move(n));
  }

  int constant(Matrix v) { return input(std::move(v), false); }

  int matmul(int a, int b) {
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.val = gfl::matmul(val(a), val(b));
    return push(std::move(n));
  }

  // y = S * h, S fixed. st must be the transpose of s.
  int spmm(const Csr* s, const Csr* st, int h) {
    Node n;
    n.op = Op::Spmm;
    n.a = h;
    n.sp = s;
    n.spt = st;
    n.val = gfl::spmm(*s, val(h));
    return push(std::move(n));
  }

  // broadcast-add a 1 x k bias row to every row of a
  int add_rowvec(int a, int bias) {
    const Matrix& A = val(a);
    const Matrix& B = val(bias);
    check_shape(B.rows == 1 && B.cols == A.cols, "add_rowvec");
    Node n;
    n.op = Op::AddRowVec;
    n.a = a;
    n.b = bias;
    n.val = A;
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) n.val(i, j) += B(0, j);
    return push(std::move(n));
  }

  int add(int a, int b) {
    check_shape(val(a).same_shape(val(b)), "add");
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.val = val(a);
    add_inplace(n.val, val(b));
    return push(std::move(n));
  }

  int sub(int a, int b) {
    check_shape(val(a).same_shape(val(b)), "sub");
    Node n;
    n.op = Op::Sub;
    n.a = a;
    n.b = b;
    n.val = val(a);
    axpy_inplace(n.val, -1.0, val(b));
    return push(std::move(n));
  }

  int scalar_mul(int a, double s) {
    Node n;
    n.op = Op::ScalarMul;
    n.a = a;
    n.scalar = s;
    n.val = val(a);
    scale_inplace(n.val, s);
    return push(std::move(n));
  }

  int relu(int a) {
    Node n;
    n.op = Op::Relu;
    n.a = a;
    n.val = val(a);
    for (double& v : n.val.a) v = v > 0.0 ? v : 0.0;
    return push(std::move(n));
  }

  int leaky_relu(int a, double slope) {
    Node n;
    n.op = Op::LeakyRelu;
    n.a = a;
    n.scalar = slope;
    n.val = val(a);
    for (double& v : n.val.a) v = v > 0.0 ? v : slope * v;
    return push(std::move(n));
  }

  int sigmoid(int a) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = a;
    n.val = val(a);
    for (double& v : n.val.a) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(n));
  }

  int row_softmax(int a) {
    Node n;
    n.op = Op::RowSoftmax;
    n.a = a;
    const Matrix& A = val(a);
    n.val = Matrix(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
      const double* x = A.row(i);
      double* y = n.val.row(i);
      double m = x[0];
      for (int j = 1; j < A.cols; ++j) m = std::max(m, x[j]);
      double z = 0.0;
      for (int j = 0; j < A.cols; ++j) {
        y[j] = std::exp(x[j] - m);
        z += y[j];
      }
      for (int j = 0; j < A.cols; ++j) y[j] /= z;
    }
    return push(std::move(n));
  }

  int concat_cols(std::vector<int> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    int rows = val(parts[0]).rows;
    int cols = 0;
    for (int p : parts) {
      check_shape(val(p).rows == rows, "concat_cols");
      cols += val(p).cols;
    }
    Node n;
    n.op = Op::ConcatCols;
    n.list = std::move(parts);
    n.val = Matrix(rows, cols);
    int off = 0;
    for (int p : n.list) {
      const Matrix& P = val(p);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < P.cols; ++j) n.val(i, off + j) = P(i, j);
      off += P.cols;
    }
    return push(std::move(n));
  }

  int slice_cols(int a, int c0, int c1) {
    const Matrix& A = val(a);
    check_shape(0 <= c0 && c0 < c1 && c1 <= A.cols, "slice_cols");
    Node n;
    n.op = Op::SliceCols;
    n.a = a;
    n.i0 = c0;
    n.i1 = c1;
    n.val = Matrix(A.rows, c1 - c0);
    for (int i = 0; i < A.rows; ++i)
      for (int j = c0; j < c1; ++j) n.val(i, j - c0) = A(i, j);
    return push(std::move(n));
  }

  // y[e] = a[idx[e]]
  int gather_rows(int a, std::vector<int> idx) {
    const Matrix& A = val(a);
    Node n;
    n.op = Op::GatherRows;
    n.a = a;
    n.val = Matrix(static_cast<int>(idx.size()), A.cols);
    for (int e = 0; e < n.val.rows; ++e)
      for (int j = 0; j < A.cols; ++j) n.val(e, j) = A(idx[e], j);
    n.list = std::move(idx);
    return push(std::move(n));
  }

  // softmax over contiguous row ranges of an E x 1 column
  int segment_softmax(int a, std::vector<int> offsets) {
    const Matrix& A = val(a);
    check_shape(A.cols == 1, "segment_softmax");
    check_shape(offsets.back() == A.rows, "segment_softmax offsets");
    Node n;
    n.op = Op::SegmentSoftmax;
    n.a = a;
    n.val = Matrix(A.rows, 1);
    for (size_t s = 0; s + 1 < offsets.size(); ++s) {
      int lo = offsets[s], hi = offsets[s + 1];
      if (lo == hi) continue;
      double m = A(lo, 0);
      for (int e = lo + 1; e < hi; ++e) m = std::max(m, A(e, 0));
      double z = 0.0;
      for (int e = lo; e < hi; ++e) {
        n.val(e, 0) = std::exp(A(e, 0) - m);
        z += n.val(e, 0);
      }
      for (int e = lo; e < hi; ++e) n.val(e, 0) /= z;
    }
    n.list = std::move(offsets);
    return push(std::move(n));
  }

  // y[e][j] = a[e][j] * s[e]
  int col_scale(int a, int s) {
    const Matrix& A = val(a);
    const Matrix& S = val(s);
    check_shape(S.cols == 1 && S.rows == A.rows, "col_scale");
    Node n;
    n.op = Op::ColScale;
    n.a = a;
    n.b = s;
    n.val = A;
    for (int e = 0; e < A.rows; ++e) {
      double w = S(e, 0);
      for (int j = 0; j < A.cols; ++j) n.val(e, j) *= w;
    }
    return push(std::move(n));
  }

  // out[s] = sum of rows in segment s
  int segment_sum(int a, std::vector<int> offsets) {
    const Matrix& A = val(a);
    check_shape(offsets.back() == A.rows, "segment_sum offsets");
    Node n;
    n.op = Op::SegmentSum;
    n.a = a;
    n.val = Matrix(static_cast<int>(offsets.size()) - 1, A.cols);
    for (size_t s = 0; s + 1 < offsets.size(); ++s)
      for (int e = offsets[s]; e < offsets[s + 1]; ++e)
        for (int j = 0; j < A.cols; ++j) n.val(static_cast<int>(s), j) += A(e, j);
    n.list = std::move(offsets);
    return push(std::move(n));
  }

  // interleave T matrices of shape B x d into (B*T) x d, token t of sample b
  // at row b*T + t
  int stack_tokens(std::vector<int> tokens) {
    if (tokens.empty()) throw std::invalid_argument("stack_tokens: no inputs");
    int B = val(tokens[0]).rows, d = val(tokens[0]).cols;
    for (int t : tokens) check_shape(val(t).rows == B && val(t).cols == d, "stack_tokens");
    int T = static_cast<int>(tokens.size());
    Node n;
    n.op = Op::StackTokens;
    n.val = Matrix(B * T, d);
    for (int t = 0; t < T; ++t) {
      const Matrix& M = val(tokens[t]);
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < d; ++j) n.val(b * T + t, j) = M(b, j);
    }
    n.list = std::move(tokens);
    return push(std::move(n));
  }

  // out[b] = mean over rows b*T .. b*T+T-1
  int mean_pool_blocks(int a, int T) {
    const Matrix& A = val(a);
    check_shape(A.rows % T == 0, "mean_pool_blocks");
    Node n;
    n.op = Op::MeanPoolBlocks;
    n.a = a;
    n.i0 = T;
    int B = A.rows / T;
    n.val = Matrix(B, A.cols);
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < T; ++t)
        for (int j = 0; j < A.cols; ++j) n.val(b, j) += A(b * T + t, j) / T;
    return push(std::move(n));
  }

  // per block of T rows: S_b = Q_b * K_b^T, result (B*T) x T
  int block_matmul_nt(int q, int k, int T) {
    const Matrix& Q = val(q);
    const Matrix& K = val(k);
    check_shape(Q.same_shape(K) && Q.rows % T == 0, "block_matmul_nt");
    Node n;
    n.op = Op::BlockMatmulNT;
    n.a = q;
    n.b = k;
    n.i0 = T;
    int B = Q.rows / T;
    n.val = Matrix(Q.rows, T);
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < T; ++i)
        for (int j = 0; j < T; ++j) {
          double s = 0.0;
          for (int c = 0; c < Q.cols; ++c) s += Q(b * T + i, c) * K(b * T + j, c);
          n.val(b * T + i, j) = s;
        }
    return push(std::move(n));
  }

  // per block of T rows: Y_b = P_b * V_b with P (B*T) x T, V (B*T) x d
  int block_matmul_nn(int p, int v, int T) {
    const Matrix& P = val(p);
    const Matrix& V = val(v);
    check_shape(P.cols == T && P.rows % T == 0 && V.rows == P.rows, "block_matmul_nn");
    Node n;
    n.op = Op::BlockMatmulNN;
    n.a = p;
    n.b = v;
    n.i0 = T;
    int B = P.rows / T;
    n.val = Matrix(P.rows, V.cols);
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < T; ++i)
        for (int j = 0; j < T; ++j) {
          double w = P(b * T + i, j);
          if (w == 0.0) continue;
          for (int c = 0; c < V.cols; ++c) n.val(b * T + i, c) += w * V(b * T + j, c);
        }
    return push(std::move(n));
  }

  // -(1/|mask|) sum_{u in mask} sum_c targets[u,c] * log(post[u,c] + 1e-12)
  int soft_cross_entropy(int post, Matrix targets, std::vector<int> mask) {
    const Matrix& P = val(post);
    check_shape(P.same_shape(targets), "soft_cross_entropy");
    if (mask.empty()) throw std::invalid_argument("soft_cross_entropy: empty mask");
    Node n;
    n.op = Op::SoftCE;
    n.a = post;
    double loss = 0.0;
    for (int u : mask)
      for (int c = 0; c < P.cols; ++c)
        loss -= targets(u, c) * std::log(P(u, c) + kLogFloor);
    n.val = Matrix(1, 1);
    n.val(0, 0) = loss / static_cast<double>(mask.size());
    n.aux = std::move(targets);
    n.list = std::move(mask);
    return push(std::move(n));
  }

  // mean_i softplus(z_i) - y_i * z_i  (binary cross-entropy on logits)
  int bce_with_logits(int logits, Matrix labels) {
    const Matrix& Z = val(logits);
    check_shape(Z.same_shape(labels) && Z.cols == 1, "bce_with_logits");
    Node n;
    n.op = Op::BceLogits;
    n.a = logits;
    double loss = 0.0;
    for (int i = 0; i < Z.rows; ++i) {
      double z = Z(i, 0);
      double sp = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      loss += sp - labels(i, 0) * z;
    }
    n.val = Matrix(1, 1);
    n.val(0, 0) = loss / Z.rows;
    n.aux = std::move(labels);
    return push(std::move(n));
  }

  const Matrix& val(int i) const { return nodes_[i].val; }

  // Gradient accumulated at node i; zero matrix if nothing flowed there.
  Matrix grad(int i) const {
    if (nodes_[i].has_grad) return nodes_[i].grad;
    return Matrix(nodes_[i].val.rows, nodes_[i].val.cols);
  }

  bool consumed() const { return consumed_; }

  // Standard backward from a scalar loss node.
  void backward(int root) {
    check_shape(val(root).rows == 1 && val(root).cols == 1, "backward root must be scalar");
    Matrix seed(1, 1);
    seed(0, 0) = 1.0;
    backward_from(root, std::move(seed));
  }

  // Seeds an arbitrary upstream gradient at `node` (vector-Jacobian product).
  void backward_from(int node, Matrix upstream) {
    if (consumed_) throw std::logic_error("tape already consumed by a backward call");
    consumed_ = true;
    check_shape(val(node).same_shape(upstream), "backward_from upstream");
    accum(node) = std::move(upstream);
    nodes_[node].has_grad = true;
    for (int i = node; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.has_grad || !n.needs_grad) continue;
      propagate(i);
    }
  }

  static constexpr double kLogFloor = 1e-12;

 private:
  enum class Op {
    Leaf,
    MatMul,
    Spmm,
    AddRowVec,
    Add,
    Sub,
    ScalarMul,
    Relu,
    LeakyRelu,
    Sigmoid,
    RowSoftmax,
    ConcatCols,
    SliceCols,
    GatherRows,
    SegmentSoftmax,
    ColScale,
    SegmentSum,
    StackTokens,
    MeanPoolBlocks,
    BlockMatmulNT,
    BlockMatmulNN,
    SoftCE,
    BceLogits,
  };

  struct Node {
    Op op = Op::Leaf;
    int a = -1, b = -1;
    int i0 = 0, i1 = 0;
    double scalar = 0.0;
    const Csr* sp = nullptr;
    const Csr* spt = nullptr;
    std::vector<int> list;  // gather indices / segment offsets / input list
    Matrix aux;             // targets or labels
    Matrix val;
    Matrix grad;
    bool has_grad = false;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;

  int push(Node n) {
    if (n.op != Op::Leaf) {
      bool ng = false;
      if (n.a >= 0) ng = ng || nodes_[n.a].needs_grad;
      if (n.b >= 0) ng = ng || nodes_[n.b].needs_grad;
      for (int p : n.list)
        if (n.op == Op::ConcatCols || n.op == Op::StackTokens) ng = ng || nodes_[p].needs_grad;
      n.needs_grad = ng;
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  Matrix& accum(int i) {
    Node& n = nodes_[i];
    if (!n.has_grad) {
      n.grad = Matrix(n.val.rows, n.val.cols);
      n.has_grad = true;
    }
    return n.grad;
  }

  void add_grad_into(int child, const Matrix& g) {
    if (!nodes_[child].needs_grad) return;
    add_inplace(accum(child), g);
  }

  void propagate(int i) {
    Node& n = nodes_[i];
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (nodes_[n.a].needs_grad) add_inplace(accum(n.a), matmul_nt(g, nodes_[n.b].val));
        if (nodes_[n.b].needs_grad) add_inplace(accum(n.b), matmul_tn(nodes_[n.a].val, g));
        break;
      case Op::Spmm:
        if (nodes_[n.a].needs_grad) add_inplace(accum(n.a), gfl::spmm(*n.spt, g));
        break;
      case Op::AddRowVec: {
        add_grad_into(n.a, g);
        if (nodes_[n.b].needs_grad) {
          Matrix& gb = accum(n.b);
          for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < g.cols; ++c) gb(0, c) += g(r, c);
        }
        break;
      }
      case Op::Add:
        add_grad_into(n.a, g);
        add_grad_into(n.b, g);
        break;
      case Op::Sub:
        add_grad_into(n.a, g);
        if (nodes_[n.b].needs_grad) axpy_inplace(accum(n.b), -1.0, g);
        break;
      case Op::ScalarMul:
        if (nodes_[n.a].needs_grad) axpy_inplace(accum(n.a), n.scalar, g);
        break;
      case Op::Relu:
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          const Matrix& x = nodes_[n.a].val;
          for (size_t p = 0; p < g.a.size(); ++p)
            if (x.a[p] > 0.0) ga.a[p] += g.a[p];
        }
        break;
      case Op::LeakyRelu:
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          const Matrix& x = nodes_[n.a].val;
          for (size_t p = 0; p < g.a.size(); ++p)
            ga.a[p] += (x.a[p] > 0.0 ? 1.0 : n.scalar) * g.a[p];
        }
        break;
      case Op::Sigmoid:
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          for (size_t p = 0; p < g.a.size(); ++p) {
            double y = n.val.a[p];
            ga.a[p] += y * (1.0 - y) * g.a[p];
          }
        }
        break;
      case Op::RowSoftmax:
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          for (int r = 0; r < n.val.rows; ++r) {
            const double* y = n.val.row(r);
            const double* gy = g.row(r);
            double dot = 0.0;
            for (int c = 0; c < n.val.cols; ++c) dot += y[c] * gy[c];
            double* gx = ga.row(r);
            for (int c = 0; c < n.val.cols; ++c) gx[c] += y[c] * (gy[c] - dot);
          }
        }
        break;
      case Op::ConcatCols: {
        int off = 0;
        for (int p : n.list) {
          const Matrix& P = nodes_[p].val;
          if (nodes_[p].needs_grad) {
            Matrix& gp = accum(p);
            for (int r = 0; r < P.rows; ++r)
              for (int c = 0; c < P.cols; ++c) gp(r, c) += g(r, off + c);
          }
          off += P.cols;
        }
        break;
      }
      case Op::SliceCols:
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < g.cols; ++c) ga(r, n.i0 + c) += g(r, c);
        }
        break;
      case Op::GatherRows:
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          for (int e = 0; e < g.rows; ++e)
            for (int c = 0; c < g.cols; ++c) ga(n.list[e], c) += g(e, c);
        }
        break;
      case Op::SegmentSoftmax:
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          for (size_t s = 0; s + 1 < n.list.size(); ++s) {
            int lo = n.list[s], hi = n.list[s + 1];
            double dot = 0.0;
            for (int e = lo; e < hi; ++e) dot += n.val(e, 0) * g(e, 0);
            for (int e = lo; e < hi; ++e) ga(e, 0) += n.val(e, 0) * (g(e, 0) - dot);
          }
        }
        break;
      case Op::ColScale: {
        const Matrix& A = nodes_[n.a].val;
        const Matrix& S = nodes_[n.b].val;
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          for (int e = 0; e < g.rows; ++e)
            for (int c = 0; c < g.cols; ++c) ga(e, c) += g(e, c) * S(e, 0);
        }
        if (nodes_[n.b].needs_grad) {
          Matrix& gs = accum(n.b);
          for (int e = 0; e < g.rows; ++e) {
            double dot = 0.0;
            for (int c = 0; c < g.cols; ++c) dot += g(e, c) * A(e, c);
            gs(e, 0) += dot;
          }
        }
        break;
      }
      case Op::SegmentSum:
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          for (size_t s = 0; s + 1 < n.list.size(); ++s)
            for (int e = n.list[s]; e < n.list[s + 1]; ++e)
              for (int c = 0; c < g.cols; ++c) ga(e, c) += g(static_cast<int>(s), c);
        }
        break;
      case Op::StackTokens: {
        int T = static_cast<int>(n.list.size());
        for (int t = 0; t < T; ++t) {
          int p = n.list[t];
          if (!nodes_[p].needs_grad) continue;
          Matrix& gp = accum(p);
          for (int b = 0; b < gp.rows; ++b)
            for (int c = 0; c < gp.cols; ++c) gp(b, c) += g(b * T + t, c);
        }
        break;
      }
      case Op::MeanPoolBlocks:
        if (nodes_[n.a].needs_grad) {
          Matrix& ga = accum(n.a);
          int T = n.i0;
          for (int b = 0; b < g.rows; ++b)
            for (int t = 0; t < T; ++t)
              for (int c = 0; c < g.cols; ++c) ga(b * T + t, c) += g(b, c) / T;
        }
        break;
      case Op::BlockMatmulNT: {
        const Matrix& Q = nodes_[n.a].val;
        const Matrix& K = nodes_[n.b].val;
        int T = n.i0;
        int B = Q.rows / T;
        if (nodes_[n.a].needs_grad) {
          Matrix& gq = accum(n.a);
          for (int b = 0; b < B; ++b)
            for (int i2 = 0; i2 < T; ++i2)
              for (int j = 0; j < T; ++j) {
                double w = g(b * T + i2, j);
                if (w == 0.0) continue;
                for (int c = 0; c < Q.cols; ++c) gq(b * T + i2, c) += w * K(b * T + j, c);
              }
        }
        if (nodes_[n.b].needs_grad) {
          Matrix& gk = accum(n.b);
          for (int b = 0; b < B; ++b)
            for (int i2 = 0; i2 < T; ++i2)
              for (int j = 0; j < T; ++j) {
                double w = g(b * T + i2, j);
                if (w == 0.0) continue;
                for (int c = 0; c < Q.cols; ++c) gk(b * T + j, c) += w * Q(b * T + i2, c);
              }
        }
        break;
      }
      case Op::BlockMatmulNN: {
        const Matrix& P = nodes_[n.a].val;
        const Matrix& V = nodes_[n.b].val;
        int T = n.i0;
        int B = P.rows / T;
        if (nodes_[n.a].needs_grad) {
          Matrix& gp = accum(n.a);
          for (int b = 0; b < B; ++b)
            for (int i2 = 0; i2 < T; ++i2)
              for (int j = 0; j < T; ++j) {
                double dot = 0.0;
                for (int c = 0; c < V.cols; ++c) dot += g(b * T + i2, c) * V(b * T + j, c);
                gp(b * T + i2, j) += dot;
              }
        }
        if (nodes_[n.b].needs_grad) {
          Matrix& gv = accum(n.b);
          for (int b = 0; b < B; ++b)
            for (int i2 = 0; i2 < T; ++i2)
              for (int j = 0; j < T; ++j) {
                double w = P(b * T + i2, j);
                if (w == 0.0) continue;
                for (int c = 0; c < V.cols; ++c) gv(b * T + j, c) += w * g(b * T + i2, c);
              }
        }
        break;
      }
      case Op::SoftCE:
        if (nodes_[n.a].needs_grad) {
          Matrix& gp = accum(n.a);
          const Matrix& P = nodes_[n.a].val;
          double w = g(0, 0) / static_cast<double>(n.list.size());
          for (int u : n.list)
            for (int c = 0; c < P.cols; ++c)
              gp(u, c) -= w * n.aux(u, c) / (P(u, c) + kLogFloor);
        }
        break;
      case Op::BceLogits:
        if (nodes_[n.a].needs_grad) {
          Matrix& gz = accum(n.a);
          const Matrix& Z = nodes_[n.a].val;
          double w = g(0, 0) / Z.rows;
          for (int r = 0; r < Z.rows; ++r) {
            double s = 1.0 / (1.0 + std::exp(-Z(r, 0)));
            gz(r, 0) += w * (s - n.aux(r, 0));
          }
        }
        break;
    }
  }
};

}  // namespace gfl::nn
