// train.hpp -- full-batch local training loop.
#pragma once

#include <vector>

#include "gfl/adam.hpp"
#include "gfl/gnn.hpp"

namespace gfl {

// Runs `epochs` full-batch steps of cross-entropy + Adam on the given mask.
// Returns the per-epoch loss trace (empty when epochs == 0).
inline std::vector<double> train_local(ModelState& model, const GraphCache& gc, const Matrix& X,
                                       const Matrix& targets, const std::vector<int>& mask,
                                       int epochs, AdamState& opt) {
  std::vector<double> trace;
  trace.reserve(epochs);
  for (int e = 0; e < epochs; ++e) {
    ForwardTape ft = forward(model, gc, X);
    auto [loss, grads] = loss_and_backward(ft, targets, mask);
    adam_step(opt, model, grads.param_grads);
    trace.push_back(loss);
  }
  return trace;
}

}  // namespace gfl
