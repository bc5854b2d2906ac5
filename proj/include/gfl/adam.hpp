// adam.hpp -- bias-corrected Adam over a model's named parameters.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gfl/model.hpp"

namespace gfl {

struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  static AdamState for_params(const std::vector<NamedParam>& params, double lr = 0.01) {
    AdamState s;
    s.lr = lr;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params) {
      s.m.emplace_back(p.value.rows, p.value.cols);
      s.v.emplace_back(p.value.rows, p.value.cols);
    }
    return s;
  }

  static AdamState for_model(const ModelState& model, double lr = 0.01) {
    return for_params(model.params, lr);
  }
};

inline void adam_step(AdamState& st, std::vector<NamedParam>& params,
                      const std::vector<Matrix>& grads) {
  if (grads.size() != params.size() || st.m.size() != params.size())
    throw std::invalid_argument("adam_step: gradient/parameter count mismatch");
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].same_shape(params[i].value))
      throw std::invalid_argument("adam_step: shape mismatch at " + params[i].name);
    if (!grads[i].all_finite())
      throw std::runtime_error("adam_step: non-finite gradient at " + params[i].name);
  }
  st.step += 1;
  double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (size_t i = 0; i < grads.size(); ++i) {
    auto& theta = params[i].value.a;
    auto& m = st.m[i].a;
    auto& v = st.v[i].a;
    const auto& g = grads[i].a;
    for (size_t p = 0; p < theta.size(); ++p) {
      m[p] = st.beta1 * m[p] + (1.0 - st.beta1) * g[p];
      v[p] = st.beta2 * v[p] + (1.0 - st.beta2) * g[p] * g[p];
      double mhat = m[p] / bc1;
      double vhat = v[p] / bc2;
      theta[p] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

inline void adam_step(AdamState& st, ModelState& model, const std::vector<Matrix>& grads) {
  adam_step(st, model.params, grads);
}

}  // namespace gfl
