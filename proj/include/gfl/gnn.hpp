// gnn.hpp -- forward passes for GCN / GraphSAGE / GAT with exact reverse-mode
// gradients w.r.t. both parameters and input features.
#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "gfl/autodiff.hpp"
#include "gfl/model.hpp"

namespace gfl {

// One forward pass, consumable by exactly one backward call.
struct ForwardTape {
  std::unique_ptr<nn::Tape> tape;
  const ModelState* model = nullptr;
  int x_var = -1;
  std::vector<int> param_vars;
  int posterior_node = -1;

  const Matrix& posteriors() const { return tape->val(posterior_node); }
};

namespace detail {

// index of a named parameter's tape var by position: params pushed in order
struct ParamCursor {
  const std::vector<int>& vars;
  size_t next = 0;
  int take() { return vars[next++]; }
};

inline int gcn_layer(nn::Tape& t, const GraphCache& gc, int h, ParamCursor& pc, bool last) {
  int w = pc.take();
  int b = pc.take();
  int agg = t.spmm(&gc.norm_adj, &gc.norm_adj_t, h);
  int pre = t.add_rowvec(t.matmul(agg, w), b);
  return last ? t.row_softmax(pre) : t.relu(pre);
}

inline int sage_layer(nn::Tape& t, const GraphCache& gc, int h, ParamCursor& pc, bool last) {
  int w = pc.take();
  int b = pc.take();
  int agg = t.spmm(&gc.mean_agg, &gc.mean_agg_t, h);
  int cat = t.concat_cols({h, agg});
  int pre = t.add_rowvec(t.matmul(cat, w), b);
  return last ? t.row_softmax(pre) : t.relu(pre);
}

inline int gat_layer(nn::Tape& t, const GraphCache& gc, int h, ParamCursor& pc, int heads,
                     bool last) {
  std::vector<int> head_out;
  head_out.reserve(heads);
  for (int k = 0; k < heads; ++k) {
    int w = pc.take();
    int a_src = pc.take();
    int a_dst = pc.take();
    int b = pc.take();
    int wh = t.matmul(h, w);                       // N x d
    int s_src = t.matmul(wh, a_src);               // N x 1
    int s_dst = t.matmul(wh, a_dst);               // N x 1
    int logits = t.leaky_relu(
        t.add(t.gather_rows(s_src, gc.att_targets), t.gather_rows(s_dst, gc.att_neighbors)),
        0.2);
    int alpha = t.segment_softmax(logits, gc.att_offsets);
    int msgs = t.col_scale(t.gather_rows(wh, gc.att_neighbors), alpha);
    int out = t.add_rowvec(t.segment_sum(msgs, gc.att_offsets), b);
    head_out.push_back(out);
  }
  int merged;
  if (last) {
    merged = head_out[0];
    for (int k = 1; k < heads; ++k) merged = t.add(merged, head_out[k]);
    merged = t.scalar_mul(merged, 1.0 / heads);
  } else {
    merged = t.concat_cols(head_out);
  }
  return last ? t.row_softmax(merged) : t.relu(merged);
}

}  // namespace detail

// Posterior matrix (rows sum to 1) and the tape to pull gradients from.
inline ForwardTape forward(const ModelState& model, const GraphCache& gc, const Matrix& X) {
  if (X.rows != gc.num_nodes || X.cols != model.feature_dim)
    throw std::invalid_argument("forward: X shape does not match graph/model");
  if (!X.all_finite()) throw std::invalid_argument("forward: non-finite input features");

  ForwardTape ft;
  ft.tape = std::make_unique<nn::Tape>();
  ft.model = &model;
  nn::Tape& t = *ft.tape;

  ft.x_var = t.input(X, true);
  ft.param_vars.reserve(model.params.size());
  for (const auto& p : model.params) ft.param_vars.push_back(t.input(p.value, true));

  detail::ParamCursor pc{ft.param_vars};
  int h = ft.x_var;
  for (int l = 0; l < model.arch.num_layers; ++l) {
    bool last = l == model.arch.num_layers - 1;
    switch (model.arch.kind) {
      case ArchKind::GCN: h = detail::gcn_layer(t, gc, h, pc, last); break;
      case ArchKind::GraphSAGE: h = detail::sage_layer(t, gc, h, pc, last); break;
      case ArchKind::GAT: h = detail::gat_layer(t, gc, h, pc, model.arch.heads, last); break;
    }
  }
  ft.posterior_node = h;
  return ft;
}

namespace detail {

inline Gradients collect_grads(const ForwardTape& ft) {
  Gradients g;
  g.param_grads.reserve(ft.param_vars.size());
  for (int v : ft.param_vars) g.param_grads.push_back(ft.tape->grad(v));
  g.input_grads = ft.tape->grad(ft.x_var);
  return g;
}

}  // namespace detail

// Soft-target cross-entropy over a node mask, with exact gradients.
// loss = -(1/|mask|) * sum_{u in mask} sum_c targets[u,c] * log(post[u,c] + 1e-12)
inline std::pair<double, Gradients> loss_and_backward(ForwardTape& ft, const Matrix& targets,
                                                      const std::vector<int>& mask) {
  int loss = ft.tape->soft_cross_entropy(ft.posterior_node, targets, mask);
  double value = ft.tape->val(loss)(0, 0);
  ft.tape->backward(loss);
  return {value, detail::collect_grads(ft)};
}

// Pulls an arbitrary upstream gradient at the posterior layer back to the
// parameters and the input features.
inline Gradients backward_external(ForwardTape& ft, const Matrix& dloss_dposteriors) {
  ft.tape->backward_from(ft.posterior_node, dloss_dposteriors);
  return detail::collect_grads(ft);
}

inline Matrix one_hot(const std::vector<int>& labels, int num_classes) {
  Matrix m(static_cast<int>(labels.size()), num_classes);
  for (size_t i = 0; i < labels.size(); ++i) m(static_cast<int>(i), labels[i]) = 1.0;
  return m;
}

}  // namespace gfl
