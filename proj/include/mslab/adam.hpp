#pragma once

#include <vector>

#include "mslab/tensor.hpp"

namespace mslab {

// Adam moments for one parameter tensor, with the training constants used
// throughout: lr 1e-3, beta1 0.9, beta2 0.999, epsilon 1e-8.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected update. Throws if the parameter has no gradient.
// The gradient is consumed (cleared) by the step.
void adam_step(Tensor& param, AdamState& state);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<Tensor> params, double lr = 1e-3,
                         double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);
  void step();
  const std::vector<AdamState>& states() const { return states_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
};

}  // namespace mslab
