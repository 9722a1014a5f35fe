#include "mslab/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mslab {

void adam_step(Tensor& param, AdamState& state) {
  if (!param.has_grad())
    throw std::invalid_argument("adam_step: parameter has no gradient");
  const auto& g = param.grad();
  auto& p = param.values_mut();
  if (state.m.empty()) {
    state.m.assign(p.size(), 0.0);
    state.v.assign(p.size(), 0.0);
  }
  if (state.m.size() != p.size())
    throw std::invalid_argument("adam_step: state size does not match parameter");
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  param.zero_grad();
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr, double beta1,
                             double beta2, double epsilon)
    : params_(std::move(params)) {
  states_.resize(params_.size());
  for (auto& s : states_) {
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
  }
}

void AdamOptimizer::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) adam_step(params_[i], states_[i]);
}

}  // namespace mslab
