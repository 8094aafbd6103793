#include "bibleqa/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "bibleqa/errors.hpp"

namespace bqa {

const Tensor& Var::value() const {
  if (!graph_) throw GraphError("use of an unbound Var");
  return graph_->value_of(id_);
}

// ---- Graph ------------------------------------------------------------------

Var Graph::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

void Graph::check_owned(Var v, const char* what) const {
  if (v.graph() != this || v.id() >= nodes_.size()) {
    throw GraphError(std::string(what) + ": tensor belongs to a different graph");
  }
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node{std::move(value), {}, {}, std::move(backward), false};
  node.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    check_owned(in, "record");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (!node.requires_grad) node.backward = nullptr;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(Var loss) {
  check_owned(loss, "backward");
  Node& root = nodes_[loss.id()];
  if (!root.value.is_scalar()) {
    throw GraphError("backward requires a scalar loss, got shape " + shape_str(root.value.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  has_backward_ = true;
  if (!root.requires_grad) return;
  root.grad = Tensor::filled(root.value.shape(), 1.0);

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.empty()) continue;
    in_values.clear();
    in_grads.clear();
    for (auto in : node.inputs) {
      Node& src = nodes_[in];
      in_values.push_back(&src.value);
      if (src.requires_grad) {
        if (src.grad.empty()) src.grad = Tensor::zeros(src.value.shape());
        in_grads.push_back(&src.grad);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    node.backward(BackwardContext{node.value, node.grad, in_values, in_grads});
  }
}

Tensor Graph::grad(Var v) const {
  check_owned(v, "grad");
  if (!has_backward_) throw GraphError("grad requested before backward");
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

bool Graph::requires_grad(Var v) const {
  check_owned(v, "requires_grad");
  return nodes_[v.id()].requires_grad;
}

// ---- helpers ----------------------------------------------------------------

namespace {

Graph& graph_of(Var v) {
  if (!v.valid()) throw GraphError("use of an unbound Var");
  return *v.graph();
}

Graph& common_graph(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.graph() != b.graph()) {
    throw GraphError("operands belong to different graphs");
  }
  return *a.graph();
}

void require_nonempty(const Tensor& t, const char* op) {
  if (t.empty()) throw ShapeError(std::string(op) + ": invalid shape " + shape_str(t.shape()));
}

// Splits a shape around one axis: outer * extent * inner == numel.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

void check_axis(const Tensor& t, std::size_t axis, const char* op) {
  if (axis >= t.rank()) {
    throw AxisError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                    shape_str(t.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

enum class BinaryKind { Add, Sub, Mul };

Var binary(BinaryKind kind, Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_nonempty(av, "binary op");
  require_nonempty(bv, "binary op");
  // A single-element operand broadcasts; between two, the lower rank does.
  const bool a_scalar = av.numel() == 1 && (bv.numel() != 1 || av.rank() < bv.rank());
  const bool b_scalar = !a_scalar && bv.numel() == 1 && av.shape() != bv.shape();
  if (!a_scalar && !b_scalar && av.shape() != bv.shape()) {
    throw ShapeError("elementwise op on shapes " + shape_str(av.shape()) + " and " +
                     shape_str(bv.shape()));
  }
  Tensor out(a_scalar ? bv.shape() : av.shape());
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[a_scalar ? 0 : i];
    const double y = bv[b_scalar ? 0 : i];
    switch (kind) {
      case BinaryKind::Add: out[i] = x + y; break;
      case BinaryKind::Sub: out[i] = x - y; break;
      case BinaryKind::Mul: out[i] = x * y; break;
    }
  }
  return g.record(std::move(out), {a, b}, [kind, a_scalar, b_scalar](const BackwardContext& c) {
    const Tensor& x = *c.in_values[0];
    const Tensor& y = *c.in_values[1];
    const std::size_t n = c.out_grad.numel();
    for (std::size_t i = 0; i < n; ++i) {
      const double go = c.out_grad[i];
      const std::size_t ia = a_scalar ? 0 : i;
      const std::size_t ib = b_scalar ? 0 : i;
      double da = go, db = go;
      if (kind == BinaryKind::Sub) db = -go;
      if (kind == BinaryKind::Mul) {
        da = go * y[ib];
        db = go * x[ia];
      }
      if (c.in_grads[0]) (*c.in_grads[0])[ia] += da;
      if (c.in_grads[1]) (*c.in_grads[1])[ib] += db;
    }
  });
}

}  // namespace

// ---- unary ------------------------------------------------------------------

Var apply_unary(UnaryKind kind, Var t) {
  Graph& g = graph_of(t);
  const Tensor& x = t.value();
  require_nonempty(x, "unary op");
  Tensor out(x.shape());
  const std::size_t n = x.numel();

  if (kind == UnaryKind::Softmax) {
    const std::size_t cols = x.rank() == 0 ? 1 : x.shape().back();
    const std::size_t rows = n / cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* in = x.values().data() + r * cols;
      double* o = out.values().data() + r * cols;
      double mx = in[0];
      for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
      double total = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        o[j] = std::exp(in[j] - mx);
        total += o[j];
      }
      for (std::size_t j = 0; j < cols; ++j) o[j] /= total;
    }
    return g.record(std::move(out), {t}, [cols, rows](const BackwardContext& c) {
      Tensor& gi = *c.in_grads[0];
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * cols;
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dot += c.out_grad[base + j] * c.out_value[base + j];
        for (std::size_t j = 0; j < cols; ++j) {
          gi[base + j] += c.out_value[base + j] * (c.out_grad[base + j] - dot);
        }
      }
    });
  }

  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case UnaryKind::Sigmoid: out[i] = stable_sigmoid(x[i]); break;
      case UnaryKind::Relu: out[i] = x[i] > 0 ? x[i] : 0.0; break;
      case UnaryKind::Tanh: out[i] = std::tanh(x[i]); break;
      case UnaryKind::Log: out[i] = std::log(x[i]); break;
      case UnaryKind::Exp: out[i] = std::exp(x[i]); break;
      case UnaryKind::Softmax: break;
    }
  }
  return g.record(std::move(out), {t}, [kind](const BackwardContext& c) {
    Tensor& gi = *c.in_grads[0];
    const Tensor& xin = *c.in_values[0];
    const Tensor& y = c.out_value;
    for (std::size_t i = 0; i < y.numel(); ++i) {
      double d = 0.0;
      switch (kind) {
        case UnaryKind::Sigmoid: d = y[i] * (1.0 - y[i]); break;
        case UnaryKind::Relu: d = xin[i] > 0 ? 1.0 : 0.0; break;
        case UnaryKind::Tanh: d = 1.0 - y[i] * y[i]; break;
        case UnaryKind::Log: d = 1.0 / xin[i]; break;
        case UnaryKind::Exp: d = y[i]; break;
        case UnaryKind::Softmax: break;
      }
      gi[i] += c.out_grad[i] * d;
    }
  });
}

Var add(Var a, Var b) { return binary(BinaryKind::Add, a, b); }
Var sub(Var a, Var b) { return binary(BinaryKind::Sub, a, b); }
Var mul(Var a, Var b) { return binary(BinaryKind::Mul, a, b); }

Var affine(Var t, double scale, double shift) {
  Graph& g = graph_of(t);
  const Tensor& x = t.value();
  require_nonempty(x, "affine");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = scale * x[i] + shift;
  return g.record(std::move(out), {t}, [scale](const BackwardContext& c) {
    Tensor& gi = *c.in_grads[0];
    for (std::size_t i = 0; i < gi.numel(); ++i) gi[i] += scale * c.out_grad[i];
  });
}

Var clamp(Var t, double lo, double hi) {
  Graph& g = graph_of(t);
  const Tensor& x = t.value();
  require_nonempty(x, "clamp");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = std::clamp(x[i], lo, hi);
  return g.record(std::move(out), {t}, [lo, hi](const BackwardContext& c) {
    Tensor& gi = *c.in_grads[0];
    const Tensor& xin = *c.in_values[0];
    for (std::size_t i = 0; i < gi.numel(); ++i) {
      if (xin[i] >= lo && xin[i] <= hi) gi[i] += c.out_grad[i];
    }
  });
}

// ---- linear algebra -----------------------------------------------------------

namespace {

// out[m,n] += a[m,k] * b[k,n]; each output sums over k in increasing order.
void gemm_acc(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
              std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.extent(1) != bv.extent(0)) {
    throw ShapeError("matmul shape mismatch: " + shape_str(av.shape()) + " x " +
                     shape_str(bv.shape()));
  }
  require_nonempty(av, "matmul");
  require_nonempty(bv, "matmul");
  const std::size_t m = av.extent(0), k = av.extent(1), n = bv.extent(1);
  Tensor out(Shape{m, n});
  gemm_acc(av.values().data(), bv.values().data(), out.values().data(), m, k, n);
  return g.record(std::move(out), {a, b}, [m, k, n](const BackwardContext& c) {
    const double* go = c.out_grad.values().data();
    const double* x = c.in_values[0]->values().data();
    const double* y = c.in_values[1]->values().data();
    if (c.in_grads[0]) {
      // dA[i,p] = sum_j dC[i,j] * B[p,j]
      double* ga = c.in_grads[0]->values().data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += go[i * n + j] * y[p * n + j];
          ga[i * k + p] += s;
        }
    }
    if (c.in_grads[1]) {
      // dB[p,j] = sum_i A[i,p] * dC[i,j]
      double* gb = c.in_grads[1]->values().data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = x[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * go[i * n + j];
        }
    }
  });
}

Var transpose(Var t) {
  Graph& g = graph_of(t);
  const Tensor& x = t.value();
  if (x.rank() != 2) throw ShapeError("transpose needs rank 2, got " + shape_str(x.shape()));
  const std::size_t r = x.extent(0), cdim = x.extent(1);
  Tensor out(Shape{cdim, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < cdim; ++j) out[j * r + i] = x[i * cdim + j];
  return g.record(std::move(out), {t}, [r, cdim](const BackwardContext& c) {
    Tensor& gi = *c.in_grads[0];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < cdim; ++j) gi[i * cdim + j] += c.out_grad[j * r + i];
  });
}

// ---- reductions -------------------------------------------------------------

Var reduce(ReduceKind kind, Var t, std::size_t axis) {
  Graph& g = graph_of(t);
  const Tensor& x = t.value();
  check_axis(x, axis, "reduce");
  require_nonempty(x, "reduce");
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(out_shape);
  std::vector<std::size_t> argmax;
  if (kind == ReduceKind::Max) argmax.resize(out.numel());

  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t dst = o * s.inner + in;
      const std::size_t base = o * s.extent * s.inner + in;
      if (kind == ReduceKind::Max) {
        std::size_t best = 0;
        double bv = x[base];
        for (std::size_t e = 1; e < s.extent; ++e) {
          const double v = x[base + e * s.inner];
          if (v > bv) {
            bv = v;
            best = e;
          }
        }
        out[dst] = bv;
        argmax[dst] = best;
      } else {
        double acc = 0.0;
        for (std::size_t e = 0; e < s.extent; ++e) acc += x[base + e * s.inner];
        out[dst] = kind == ReduceKind::Mean ? acc / static_cast<double>(s.extent) : acc;
      }
    }

  return g.record(std::move(out), {t}, [kind, s, argmax = std::move(argmax)](const BackwardContext& c) {
    Tensor& gi = *c.in_grads[0];
    const double scale = kind == ReduceKind::Mean ? 1.0 / static_cast<double>(s.extent) : 1.0;
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t dst = o * s.inner + in;
        const std::size_t base = o * s.extent * s.inner + in;
        const double go = c.out_grad[dst];
        if (kind == ReduceKind::Max) {
          gi[base + argmax[dst] * s.inner] += go;
        } else {
          for (std::size_t e = 0; e < s.extent; ++e) gi[base + e * s.inner] += go * scale;
        }
      }
  });
}

Var sum_all(Var t) {
  const Tensor& x = t.value();
  return reduce(ReduceKind::Sum, reshape(t, Shape{x.numel()}), 0);
}

Var mean_all(Var t) {
  const Tensor& x = t.value();
  return reduce(ReduceKind::Mean, reshape(t, Shape{x.numel()}), 0);
}

// ---- structural -------------------------------------------------------------

Var concat(Var a, Var b, std::size_t axis) {
  const Var parts[] = {a, b};
  return concat(parts, axis);
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  Graph& g = graph_of(parts[0]);
  const Tensor& first = parts[0].value();
  check_axis(first, axis, "concat");
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.graph() != &g) throw GraphError("concat operands belong to different graphs");
    const Tensor& v = p.value();
    bool ok = v.rank() == first.rank();
    for (std::size_t i = 0; ok && i < v.rank(); ++i) {
      if (i != axis && v.extent(i) != first.extent(i)) ok = false;
    }
    if (!ok) {
      throw ShapeError("concat along axis " + std::to_string(axis) + " of " +
                       shape_str(first.shape()) + " and " + shape_str(v.shape()));
    }
    extents.push_back(v.extent(axis));
    total += v.extent(axis);
  }
  Shape out_shape = first.shape();
  out_shape[axis] = total;
  const AxisSplit s = split_at(out_shape, axis);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = parts[p].value();
    const std::size_t chunk = extents[p] * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(v.values().data() + o * chunk, chunk,
                  out.values().data() + o * total * s.inner + offset * s.inner);
    }
    offset += extents[p];
  }
  return g.record(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                  [s, total, extents](const BackwardContext& c) {
                    std::size_t offset = 0;
                    for (std::size_t p = 0; p < extents.size(); ++p) {
                      const std::size_t chunk = extents[p] * s.inner;
                      if (Tensor* gi = c.in_grads[p]) {
                        for (std::size_t o = 0; o < s.outer; ++o) {
                          const double* src = c.out_grad.values().data() + o * total * s.inner +
                                              offset * s.inner;
                          double* dst = gi->values().data() + o * chunk;
                          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
                        }
                      }
                      offset += extents[p];
                    }
                  });
}

Var slice(Var t, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(t);
  const Tensor& x = t.value();
  check_axis(x, axis, "slice");
  if (begin >= end || end > x.extent(axis)) {
    throw ShapeError("slice [" + std::to_string(begin) + "," + std::to_string(end) + ") of axis " +
                     std::to_string(axis) + " in " + shape_str(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  Tensor out(out_shape);
  const std::size_t chunk = (end - begin) * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(x.values().data() + o * s.extent * s.inner + begin * s.inner, chunk,
                out.values().data() + o * chunk);
  }
  return g.record(std::move(out), {t}, [s, begin, chunk](const BackwardContext& c) {
    Tensor& gi = *c.in_grads[0];
    for (std::size_t o = 0; o < s.outer; ++o) {
      double* dst = gi.values().data() + o * s.extent * s.inner + begin * s.inner;
      const double* src = c.out_grad.values().data() + o * chunk;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
    }
  });
}

Var reshape(Var t, Shape shape) {
  Graph& g = graph_of(t);
  Tensor out = t.value().reshaped(std::move(shape));
  return g.record(std::move(out), {t}, [](const BackwardContext& c) {
    Tensor& gi = *c.in_grads[0];
    for (std::size_t i = 0; i < gi.numel(); ++i) gi[i] += c.out_grad[i];
  });
}

Var tile(Var t, std::size_t axis, std::size_t count) {
  Graph& g = graph_of(t);
  const Tensor& x = t.value();
  check_axis(x, axis, "tile");
  if (x.extent(axis) != 1 || count == 0) {
    throw ShapeError("tile needs extent 1 along axis " + std::to_string(axis) + ", got " +
                     shape_str(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = count;
  Tensor out(out_shape);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t r = 0; r < count; ++r)
      std::copy_n(x.values().data() + o * s.inner, s.inner,
                  out.values().data() + (o * count + r) * s.inner);
  return g.record(std::move(out), {t}, [s, count](const BackwardContext& c) {
    Tensor& gi = *c.in_grads[0];
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t r = 0; r < count; ++r)
        for (std::size_t i = 0; i < s.inner; ++i)
          gi[o * s.inner + i] += c.out_grad[(o * count + r) * s.inner + i];
  });
}

// ---- parameters ---------------------------------------------------------------

void ParameterSet::add(const std::string& name, Tensor value) {
  if (name.empty()) throw ValidationError("parameter name must be non-empty");
  for (unsigned char ch : name) {
    if (ch < 0x20 || ch > 0x7e) throw ValidationError("parameter name must be printable ASCII: " + name);
  }
  if (!tensors_.emplace(name, std::move(value)).second) {
    throw ValidationError("duplicate parameter name: " + name);
  }
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw NotFoundError("no parameter named " + name);
  return it->second;
}

Tensor& ParameterSet::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw NotFoundError("no parameter named " + name);
  return it->second;
}

std::size_t ParameterSet::total_numel() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.numel();
  return n;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

BoundParams bind_variables(Graph& g, const ParameterSet& params) {
  BoundParams out;
  for (const auto& [name, t] : params) out.emplace(name, g.variable(t));
  return out;
}

BoundParams bind_constants(Graph& g, const ParameterSet& params) {
  BoundParams out;
  for (const auto& [name, t] : params) out.emplace(name, g.constant(t));
  return out;
}

ParameterSet collect_grads(const Graph& g, const BoundParams& bound) {
  ParameterSet out;
  for (const auto& [name, v] : bound) out.add(name, g.grad(v));
  return out;
}

double grad_check(const ScalarFn& f, const ParameterSet& params, double eps) {
  ParameterSet analytic;
  {
    Graph g;
    const BoundParams bound = bind_variables(g, params);
    Var loss = f(g, bound);
    if (!loss.valid() || !loss.value().is_scalar()) {
      throw GraphError("grad_check: function must return a scalar");
    }
    g.backward(loss);
    analytic = collect_grads(g, bound);
  }
  auto evaluate = [&](const ParameterSet& p) {
    Graph g;
    return f(g, bind_constants(g, p)).value().item();
  };

  ParameterSet probe = params;
  double worst = 0.0;
  for (const auto& [name, t] : params) {
    Tensor& slot = probe.at(name);
    const Tensor& grad = analytic.at(name);
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double orig = t[i];
      slot[i] = orig + eps;
      const double up = evaluate(probe);
      slot[i] = orig - eps;
      const double down = evaluate(probe);
      slot[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = grad[i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace bqa
