#pragma once

#include <utility>
#include <vector>

#include "mslab/tensor.hpp"

namespace mslab {

// Differentiable primitives. Forward values are computed eagerly; when
// recording is enabled and any input requires grad, a backward rule is
// appended to the active tape. Shape mismatches throw std::invalid_argument
// naming both shapes.

Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n]
Tensor transpose(const Tensor& a);                // 2-D
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor concat(const std::vector<Tensor>& parts, int axis);
// Half-open range per dimension, full rank.
Tensor slice(const Tensor& a, const std::vector<std::pair<int, int>>& ranges);

// Elementwise with numpy-style right-aligned broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

Tensor softmax(const Tensor& a, int axis);
Tensor layer_norm(const Tensor& a, int axis, double eps = 1e-5);
Tensor reduce_mean(const Tensor& a, int axis);

// input [N,C,H,W], kernel [O,C,kh,kw], zero padding.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding);
// window k x k, stride k.
Tensor max_pool2d(const Tensor& input, int k);

Tensor mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace mslab
