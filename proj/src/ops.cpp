#include "mslab/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace mslab {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

}  // namespace

// Grants op implementations access to Tensor internals.
struct OpAccess {
  static const NodePtr& node(const Tensor& t) { return t.node_; }
  static Tensor wrap(NodePtr n) { return Tensor(std::move(n)); }
};

namespace {

bool any_requires_grad(const std::vector<NodePtr>& parents) {
  for (const auto& p : parents)
    if (p->requires_grad) return true;
  return false;
}

// Creates the output node; records it when gradients are being traced.
Tensor make_result(std::vector<int> shape, std::vector<double> value,
                   std::vector<NodePtr> parents,
                   std::function<void(TensorNode&)> backward) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (grad_recording_enabled() && any_requires_grad(parents)) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward);
    Tape::active().record(node);
  }
  return OpAccess::wrap(std::move(node));
}

std::vector<std::size_t> row_major_strides(const std::vector<int>& shape) {
  std::vector<std::size_t> s(shape.size());
  std::size_t acc = 1;
  for (int d = static_cast<int>(shape.size()) - 1; d >= 0; --d) {
    s[d] = acc;
    acc *= static_cast<std::size_t>(shape[d]);
  }
  return s;
}

struct BroadcastPlan {
  std::vector<int> out_shape;
  std::vector<std::size_t> stride_a;  // 0 on broadcast dims
  std::vector<std::size_t> stride_b;
};

BroadcastPlan make_broadcast(const std::vector<int>& a, const std::vector<int>& b,
                             const char* op) {
  const int rank = static_cast<int>(std::max(a.size(), b.size()));
  BroadcastPlan plan;
  plan.out_shape.resize(rank);
  const auto sa = row_major_strides(a);
  const auto sb = row_major_strides(b);
  plan.stride_a.resize(rank);
  plan.stride_b.resize(rank);
  for (int d = 0; d < rank; ++d) {
    const int ad = d - (rank - static_cast<int>(a.size()));
    const int bd = d - (rank - static_cast<int>(b.size()));
    const int da = ad >= 0 ? a[ad] : 1;
    const int db = bd >= 0 ? b[bd] : 1;
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(a) +
                                  " and " + shape_str(b) + " are not broadcastable");
    plan.out_shape[d] = std::max(da, db);
    plan.stride_a[d] = (da == 1 && plan.out_shape[d] != 1) ? 0 : (ad >= 0 ? sa[ad] : 0);
    plan.stride_b[d] = (db == 1 && plan.out_shape[d] != 1) ? 0 : (bd >= 0 ? sb[bd] : 0);
  }
  return plan;
}

// Calls fn(out_flat, a_flat, b_flat) over the whole broadcast output.
template <typename F>
void for_each_broadcast(const BroadcastPlan& plan, F&& fn) {
  const int rank = static_cast<int>(plan.out_shape.size());
  const int total = numel(plan.out_shape);
  std::vector<int> idx(rank, 0);
  std::size_t oa = 0, ob = 0;
  for (int flat = 0; flat < total; ++flat) {
    fn(flat, oa, ob);
    for (int d = rank - 1; d >= 0; --d) {
      ++idx[d];
      oa += plan.stride_a[d];
      ob += plan.stride_b[d];
      if (idx[d] < plan.out_shape[d]) break;
      oa -= plan.stride_a[d] * plan.out_shape[d];
      ob -= plan.stride_b[d] * plan.out_shape[d];
      idx[d] = 0;
    }
  }
}

void require_2d(const Tensor& t, const char* op) {
  if (t.shape().size() != 2)
    throw std::invalid_argument(std::string(op) + ": expected 2-D tensor, got " +
                                shape_str(t.shape()));
}

// outer/axis/inner decomposition for lane-wise ops
struct AxisSplit {
  int outer, axis, inner;
};

AxisSplit split_axis(const std::vector<int>& shape, int axis, const char* op) {
  if (axis < 0 || axis >= static_cast<int>(shape.size()))
    throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str(shape));
  AxisSplit s{1, shape[axis], 1};
  for (int d = 0; d < axis; ++d) s.outer *= shape[d];
  for (int d = axis + 1; d < static_cast<int>(shape.size()); ++d) s.inner *= shape[d];
  return s;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const int m = a.shape()[0], k = a.shape()[1];
  const int k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2)
    throw std::invalid_argument("matmul: inner dims of " + shape_str(a.shape()) +
                                " and " + shape_str(b.shape()) + " differ");
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int i = 0; i < m; ++i) {
    const double* arow = &av[static_cast<std::size_t>(i) * k];
    double* crow = &out[static_cast<std::size_t>(i) * n];
    for (int kk = 0; kk < k; ++kk) {
      const double s = arow[kk];
      const double* brow = &bv[static_cast<std::size_t>(kk) * n];
      for (int j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {OpAccess::node(a), OpAccess::node(b)},
                     [m, k, n](TensorNode& self) {
                       auto& pa = *self.parents[0];
                       auto& pb = *self.parents[1];
                       const auto& g = self.grad;
                       if (pa.requires_grad) {
                         pa.ensure_grad();
                         for (int i = 0; i < m; ++i)
                           for (int kk = 0; kk < k; ++kk) {
                             double s = 0.0;
                             const double* grow = &g[static_cast<std::size_t>(i) * n];
                             const double* brow = &pb.value[static_cast<std::size_t>(kk) * n];
                             for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
                             pa.grad[static_cast<std::size_t>(i) * k + kk] += s;
                           }
                       }
                       if (pb.requires_grad) {
                         pb.ensure_grad();
                         for (int kk = 0; kk < k; ++kk)
                           for (int i = 0; i < m; ++i) {
                             const double s = pa.value[static_cast<std::size_t>(i) * k + kk];
                             const double* grow = &g[static_cast<std::size_t>(i) * n];
                             double* brow = &pb.grad[static_cast<std::size_t>(kk) * n];
                             for (int j = 0; j < n; ++j) brow[j] += s * grow[j];
                           }
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const int m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(a.values().size());
  const auto& av = a.values();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(j) * m + i] = av[static_cast<std::size_t>(i) * n + j];
  return make_result({n, m}, std::move(out), {OpAccess::node(a)},
                     [m, n](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (int j = 0; j < n; ++j)
                         for (int i = 0; i < m; ++i)
                           p.grad[static_cast<std::size_t>(i) * n + j] +=
                               self.grad[static_cast<std::size_t>(j) * m + i];
                     });
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  if (numel(shape) != a.size())
    throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) +
                                " as " + shape_str(shape));
  std::vector<double> out = a.values();
  return make_result(std::move(shape), std::move(out), {OpAccess::node(a)},
                     [](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         p.grad[i] += self.grad[i];
                     });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const auto& first = parts[0].shape();
  auto sp = split_axis(first, axis, "concat");
  int axis_total = 0;
  std::vector<NodePtr> parents;
  for (const auto& t : parts) {
    const auto& s = t.shape();
    if (s.size() != first.size())
      throw std::invalid_argument("concat: rank mismatch between " + shape_str(first) +
                                  " and " + shape_str(s));
    for (int d = 0; d < static_cast<int>(s.size()); ++d)
      if (d != axis && s[d] != first[d])
        throw std::invalid_argument("concat: shapes " + shape_str(first) + " and " +
                                    shape_str(s) + " differ off-axis");
    axis_total += s[axis];
    parents.push_back(OpAccess::node(t));
  }
  std::vector<int> out_shape = first;
  out_shape[axis] = axis_total;
  std::vector<double> out(static_cast<std::size_t>(numel(out_shape)));
  std::vector<int> axis_sizes(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) axis_sizes[p] = parts[p].shape()[axis];

  std::size_t offset_rows = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& v = parts[p].values();
    const int ax = axis_sizes[p];
    for (int o = 0; o < sp.outer; ++o)
      std::copy_n(&v[static_cast<std::size_t>(o) * ax * sp.inner],
                  static_cast<std::size_t>(ax) * sp.inner,
                  &out[(static_cast<std::size_t>(o) * axis_total + offset_rows) * sp.inner]);
    offset_rows += ax;
  }
  const int outer = sp.outer, inner = sp.inner;
  return make_result(std::move(out_shape), std::move(out), std::move(parents),
                     [outer, inner, axis_total, axis_sizes](TensorNode& self) {
                       std::size_t offset = 0;
                       for (std::size_t p = 0; p < self.parents.size(); ++p) {
                         auto& par = *self.parents[p];
                         const int ax = axis_sizes[p];
                         if (par.requires_grad) {
                           par.ensure_grad();
                           for (int o = 0; o < outer; ++o) {
                             const double* src =
                                 &self.grad[(static_cast<std::size_t>(o) * axis_total + offset) * inner];
                             double* dst = &par.grad[static_cast<std::size_t>(o) * ax * inner];
                             for (std::size_t i = 0; i < static_cast<std::size_t>(ax) * inner; ++i)
                               dst[i] += src[i];
                           }
                         }
                         offset += ax;
                       }
                     });
}

Tensor slice(const Tensor& a, const std::vector<std::pair<int, int>>& ranges) {
  const auto& shape = a.shape();
  if (ranges.size() != shape.size())
    throw std::invalid_argument("slice: " + std::to_string(ranges.size()) +
                                " ranges for shape " + shape_str(shape));
  std::vector<int> out_shape(shape.size());
  for (std::size_t d = 0; d < shape.size(); ++d) {
    const auto [lo, hi] = ranges[d];
    if (lo < 0 || hi > shape[d] || lo >= hi)
      throw std::invalid_argument("slice: range [" + std::to_string(lo) + "," +
                                  std::to_string(hi) + ") invalid for dim " +
                                  std::to_string(d) + " of " + shape_str(shape));
    out_shape[d] = hi - lo;
  }
  const auto in_strides = row_major_strides(shape);
  const int total = numel(out_shape);
  std::vector<double> out(static_cast<std::size_t>(total));
  const int rank = static_cast<int>(shape.size());
  std::vector<int> idx(rank, 0);
  std::size_t src = 0;
  for (std::size_t d = 0; d < shape.size(); ++d)
    src += static_cast<std::size_t>(ranges[d].first) * in_strides[d];
  const auto& av = a.values();
  for (int flat = 0; flat < total; ++flat) {
    out[flat] = av[src];
    for (int d = rank - 1; d >= 0; --d) {
      ++idx[d];
      src += in_strides[d];
      if (idx[d] < out_shape[d]) break;
      src -= in_strides[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  auto out_shape_copy = out_shape;
  return make_result(std::move(out_shape), std::move(out), {OpAccess::node(a)},
                     [ranges, in_strides, out_shape_copy, rank](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       std::vector<int> idx(rank, 0);
                       std::size_t dst = 0;
                       for (int d = 0; d < rank; ++d)
                         dst += static_cast<std::size_t>(ranges[d].first) * in_strides[d];
                       const int total = static_cast<int>(self.grad.size());
                       for (int flat = 0; flat < total; ++flat) {
                         p.grad[dst] += self.grad[flat];
                         for (int d = rank - 1; d >= 0; --d) {
                           ++idx[d];
                           dst += in_strides[d];
                           if (idx[d] < out_shape_copy[d]) break;
                           dst -= in_strides[d] * out_shape_copy[d];
                           idx[d] = 0;
                         }
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  auto plan = make_broadcast(a.shape(), b.shape(), "add");
  std::vector<double> out(static_cast<std::size_t>(numel(plan.out_shape)));
  const auto& av = a.values();
  const auto& bv = b.values();
  for_each_broadcast(plan, [&](int o, std::size_t ia, std::size_t ib) {
    out[o] = av[ia] + bv[ib];
  });
  return make_result(plan.out_shape, std::move(out),
                     {OpAccess::node(a), OpAccess::node(b)}, [plan](TensorNode& self) {
                       auto& pa = *self.parents[0];
                       auto& pb = *self.parents[1];
                       if (pa.requires_grad) pa.ensure_grad();
                       if (pb.requires_grad) pb.ensure_grad();
                       for_each_broadcast(plan, [&](int o, std::size_t ia, std::size_t ib) {
                         if (pa.requires_grad) pa.grad[ia] += self.grad[o];
                         if (pb.requires_grad) pb.grad[ib] += self.grad[o];
                       });
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  auto plan = make_broadcast(a.shape(), b.shape(), "mul");
  std::vector<double> out(static_cast<std::size_t>(numel(plan.out_shape)));
  const auto& av = a.values();
  const auto& bv = b.values();
  for_each_broadcast(plan, [&](int o, std::size_t ia, std::size_t ib) {
    out[o] = av[ia] * bv[ib];
  });
  return make_result(plan.out_shape, std::move(out),
                     {OpAccess::node(a), OpAccess::node(b)}, [plan](TensorNode& self) {
                       auto& pa = *self.parents[0];
                       auto& pb = *self.parents[1];
                       if (pa.requires_grad) pa.ensure_grad();
                       if (pb.requires_grad) pb.ensure_grad();
                       for_each_broadcast(plan, [&](int o, std::size_t ia, std::size_t ib) {
                         if (pa.requires_grad) pa.grad[ia] += self.grad[o] * pb.value[ib];
                         if (pb.requires_grad) pb.grad[ib] += self.grad[o] * pa.value[ia];
                       });
                     });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * c;
  return make_result(a.shape(), std::move(out), {OpAccess::node(a)},
                     [c](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         p.grad[i] += c * self.grad[i];
                     });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, a.values()[i]);
  return make_result(a.shape(), std::move(out), {OpAccess::node(a)},
                     [](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
                     });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-a.values()[i]));
  return make_result(a.shape(), std::move(out), {OpAccess::node(a)},
                     [](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                         const double y = self.value[i];
                         p.grad[i] += self.grad[i] * y * (1.0 - y);
                       }
                     });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.values()[i]);
  return make_result(a.shape(), std::move(out), {OpAccess::node(a)},
                     [](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                         const double y = self.value[i];
                         p.grad[i] += self.grad[i] * (1.0 - y * y);
                       }
                     });
}

Tensor softmax(const Tensor& a, int axis) {
  const auto sp = split_axis(a.shape(), axis, "softmax");
  std::vector<double> out(a.values().size());
  const auto& av = a.values();
  for (int o = 0; o < sp.outer; ++o)
    for (int i = 0; i < sp.inner; ++i) {
      const std::size_t base = (static_cast<std::size_t>(o) * sp.axis) * sp.inner + i;
      double mx = -1e308;
      for (int s = 0; s < sp.axis; ++s)
        mx = std::max(mx, av[base + static_cast<std::size_t>(s) * sp.inner]);
      double denom = 0.0;
      for (int s = 0; s < sp.axis; ++s) {
        const std::size_t at = base + static_cast<std::size_t>(s) * sp.inner;
        out[at] = std::exp(av[at] - mx);
        denom += out[at];
      }
      for (int s = 0; s < sp.axis; ++s)
        out[base + static_cast<std::size_t>(s) * sp.inner] /= denom;
    }
  return make_result(a.shape(), std::move(out), {OpAccess::node(a)},
                     [sp](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (int o = 0; o < sp.outer; ++o)
                         for (int i = 0; i < sp.inner; ++i) {
                           const std::size_t base =
                               (static_cast<std::size_t>(o) * sp.axis) * sp.inner + i;
                           double dot = 0.0;
                           for (int s = 0; s < sp.axis; ++s) {
                             const std::size_t at = base + static_cast<std::size_t>(s) * sp.inner;
                             dot += self.grad[at] * self.value[at];
                           }
                           for (int s = 0; s < sp.axis; ++s) {
                             const std::size_t at = base + static_cast<std::size_t>(s) * sp.inner;
                             p.grad[at] += self.value[at] * (self.grad[at] - dot);
                           }
                         }
                     });
}

Tensor layer_norm(const Tensor& a, int axis, double eps) {
  const auto sp = split_axis(a.shape(), axis, "layer_norm");
  std::vector<double> out(a.values().size());
  std::vector<double> inv_sigma(static_cast<std::size_t>(sp.outer) * sp.inner);
  const auto& av = a.values();
  for (int o = 0; o < sp.outer; ++o)
    for (int i = 0; i < sp.inner; ++i) {
      const std::size_t base = (static_cast<std::size_t>(o) * sp.axis) * sp.inner + i;
      double mean = 0.0;
      for (int s = 0; s < sp.axis; ++s)
        mean += av[base + static_cast<std::size_t>(s) * sp.inner];
      mean /= sp.axis;
      double var = 0.0;
      for (int s = 0; s < sp.axis; ++s) {
        const double d = av[base + static_cast<std::size_t>(s) * sp.inner] - mean;
        var += d * d;
      }
      var /= sp.axis;
      const double is = 1.0 / std::sqrt(var + eps);
      inv_sigma[static_cast<std::size_t>(o) * sp.inner + i] = is;
      for (int s = 0; s < sp.axis; ++s) {
        const std::size_t at = base + static_cast<std::size_t>(s) * sp.inner;
        out[at] = (av[at] - mean) * is;
      }
    }
  return make_result(a.shape(), std::move(out), {OpAccess::node(a)},
                     [sp, inv_sigma](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (int o = 0; o < sp.outer; ++o)
                         for (int i = 0; i < sp.inner; ++i) {
                           const std::size_t base =
                               (static_cast<std::size_t>(o) * sp.axis) * sp.inner + i;
                           const double is =
                               inv_sigma[static_cast<std::size_t>(o) * sp.inner + i];
                           double g_mean = 0.0, gy_mean = 0.0;
                           for (int s = 0; s < sp.axis; ++s) {
                             const std::size_t at = base + static_cast<std::size_t>(s) * sp.inner;
                             g_mean += self.grad[at];
                             gy_mean += self.grad[at] * self.value[at];
                           }
                           g_mean /= sp.axis;
                           gy_mean /= sp.axis;
                           for (int s = 0; s < sp.axis; ++s) {
                             const std::size_t at = base + static_cast<std::size_t>(s) * sp.inner;
                             p.grad[at] +=
                                 is * (self.grad[at] - g_mean - self.value[at] * gy_mean);
                           }
                         }
                     });
}

Tensor reduce_mean(const Tensor& a, int axis) {
  const auto sp = split_axis(a.shape(), axis, "reduce_mean");
  std::vector<int> out_shape;
  for (int d = 0; d < static_cast<int>(a.shape().size()); ++d)
    if (d != axis) out_shape.push_back(a.shape()[d]);
  if (out_shape.empty()) out_shape.push_back(1);
  std::vector<double> out(static_cast<std::size_t>(sp.outer) * sp.inner, 0.0);
  const auto& av = a.values();
  for (int o = 0; o < sp.outer; ++o)
    for (int s = 0; s < sp.axis; ++s)
      for (int i = 0; i < sp.inner; ++i)
        out[static_cast<std::size_t>(o) * sp.inner + i] +=
            av[(static_cast<std::size_t>(o) * sp.axis + s) * sp.inner + i];
  for (auto& v : out) v /= sp.axis;
  return make_result(std::move(out_shape), std::move(out), {OpAccess::node(a)},
                     [sp](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       const double inv = 1.0 / sp.axis;
                       for (int o = 0; o < sp.outer; ++o)
                         for (int s = 0; s < sp.axis; ++s)
                           for (int i = 0; i < sp.inner; ++i)
                             p.grad[(static_cast<std::size_t>(o) * sp.axis + s) * sp.inner + i] +=
                                 inv * self.grad[static_cast<std::size_t>(o) * sp.inner + i];
                     });
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  if (input.shape().size() != 4 || kernel.shape().size() != 4)
    throw std::invalid_argument("conv2d: expected input [N,C,H,W] and kernel [O,C,kh,kw], got " +
                                shape_str(input.shape()) + " and " + shape_str(kernel.shape()));
  if (stride < 1 || padding < 0)
    throw std::invalid_argument("conv2d: stride must be >= 1 and padding >= 0");
  const int N = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
            W = input.shape()[3];
  const int O = kernel.shape()[0], KC = kernel.shape()[1], kh = kernel.shape()[2],
            kw = kernel.shape()[3];
  if (C != KC)
    throw std::invalid_argument("conv2d: input channels of " + shape_str(input.shape()) +
                                " do not match kernel " + shape_str(kernel.shape()));
  const int OH = (H + 2 * padding - kh) / stride + 1;
  const int OW = (W + 2 * padding - kw) / stride + 1;
  if (OH <= 0 || OW <= 0)
    throw std::invalid_argument("conv2d: kernel " + shape_str(kernel.shape()) +
                                " too large for input " + shape_str(input.shape()));
  std::vector<double> out(static_cast<std::size_t>(N) * O * OH * OW, 0.0);
  const auto& iv = input.values();
  const auto& kv = kernel.values();
  auto in_at = [&](int n, int c, int y, int x) {
    return ((static_cast<std::size_t>(n) * C + c) * H + y) * W + x;
  };
  auto k_at = [&](int o, int c, int y, int x) {
    return ((static_cast<std::size_t>(o) * C + c) * kh + y) * kw + x;
  };
  auto out_at = [&](int n, int o, int y, int x) {
    return ((static_cast<std::size_t>(n) * O + o) * OH + y) * OW + x;
  };
  for (int n = 0; n < N; ++n)
    for (int o = 0; o < O; ++o)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          double acc = 0.0;
          for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < kh; ++ky) {
              const int y = oy * stride - padding + ky;
              if (y < 0 || y >= H) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int x = ox * stride - padding + kx;
                if (x < 0 || x >= W) continue;
                acc += iv[in_at(n, c, y, x)] * kv[k_at(o, c, ky, kx)];
              }
            }
          out[out_at(n, o, oy, ox)] = acc;
        }
  return make_result(
      {N, O, OH, OW}, std::move(out), {OpAccess::node(input), OpAccess::node(kernel)},
      [=](TensorNode& self) {
        auto& pi = *self.parents[0];
        auto& pk = *self.parents[1];
        if (pi.requires_grad) pi.ensure_grad();
        if (pk.requires_grad) pk.ensure_grad();
        for (int n = 0; n < N; ++n)
          for (int o = 0; o < O; ++o)
            for (int oy = 0; oy < OH; ++oy)
              for (int ox = 0; ox < OW; ++ox) {
                const double g = self.grad[out_at(n, o, oy, ox)];
                if (g == 0.0) continue;
                for (int c = 0; c < C; ++c)
                  for (int ky = 0; ky < kh; ++ky) {
                    const int y = oy * stride - padding + ky;
                    if (y < 0 || y >= H) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                      const int x = ox * stride - padding + kx;
                      if (x < 0 || x >= W) continue;
                      if (pi.requires_grad)
                        pi.grad[in_at(n, c, y, x)] += g * pk.value[k_at(o, c, ky, kx)];
                      if (pk.requires_grad)
                        pk.grad[k_at(o, c, ky, kx)] += g * pi.value[in_at(n, c, y, x)];
                    }
                  }
              }
      });
}

Tensor max_pool2d(const Tensor& input, int k) {
  if (input.shape().size() != 4)
    throw std::invalid_argument("max_pool2d: expected [N,C,H,W], got " +
                                shape_str(input.shape()));
  if (k < 1) throw std::invalid_argument("max_pool2d: window must be >= 1");
  const int N = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
            W = input.shape()[3];
  const int OH = H / k, OW = W / k;
  if (OH == 0 || OW == 0)
    throw std::invalid_argument("max_pool2d: window " + std::to_string(k) +
                                " too large for input " + shape_str(input.shape()));
  std::vector<double> out(static_cast<std::size_t>(N) * C * OH * OW);
  std::vector<std::size_t> argmax(out.size());
  const auto& iv = input.values();
  std::size_t oi = 0;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox, ++oi) {
          double best = -1e308;
          std::size_t best_at = 0;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const std::size_t at =
                  ((static_cast<std::size_t>(n) * C + c) * H + oy * k + ky) * W + ox * k + kx;
              if (iv[at] > best) {
                best = iv[at];
                best_at = at;
              }
            }
          out[oi] = best;
          argmax[oi] = best_at;
        }
  return make_result({N, C, OH, OW}, std::move(out), {OpAccess::node(input)},
                     [argmax](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         p.grad[argmax[i]] += self.grad[i];
                     });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw std::invalid_argument("mse_loss: shapes " + shape_str(pred.shape()) +
                                " and " + shape_str(target.shape()) + " differ");
  const auto& pv = pred.values();
  const auto& tv = target.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - tv[i];
    acc += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(pv.size());
  return make_result({1}, {acc * inv_n}, {OpAccess::node(pred), OpAccess::node(target)},
                     [inv_n](TensorNode& self) {
                       auto& pp = *self.parents[0];
                       auto& pt = *self.parents[1];
                       const double g = self.grad[0];
                       if (pp.requires_grad) pp.ensure_grad();
                       if (pt.requires_grad) pt.ensure_grad();
                       for (std::size_t i = 0; i < pp.value.size(); ++i) {
                         const double d = 2.0 * inv_n * (pp.value[i] - pt.value[i]) * g;
                         if (pp.requires_grad) pp.grad[i] += d;
                         if (pt.requires_grad) pt.grad[i] -= d;
                       }
                     });
}

}  // namespace mslab
