#pragma once

// Reverse-mode automatic differentiation over bqa::Tensor.
//
// A Graph is a tape: every op appends one node whose operands were recorded
// earlier, so the tape order is already topological and backward() is a
// single reverse sweep. Nodes live in a deque so references to values stay
// valid while the tape grows. A Graph is confined to one thread.

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bibleqa/tensor.hpp"

namespace bqa {

class Graph;

// Handle to one node of a Graph.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

struct BackwardContext {
  const Tensor& out_value;
  const Tensor& out_grad;
  std::span<const Tensor* const> in_values;
  // nullptr where the operand does not require a gradient.
  std::span<Tensor* const> in_grads;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var variable(Tensor value);
  Var constant(Tensor value);

  // Appends an op node. Every operand must belong to this graph.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once in reverse.
  void backward(Var loss);

  // Gradient after backward(); zeros for nodes the loss does not reach.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  const Tensor& value_of(std::size_t id) const { return nodes_.at(id).value; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  void check_owned(Var v, const char* what) const;

  std::deque<Node> nodes_;
  bool has_backward_ = false;
};

// ---- ops -------------------------------------------------------------------

enum class UnaryKind { Sigmoid, Relu, Tanh, Softmax, Log, Exp };
enum class ReduceKind { Max, Sum, Mean };

Var apply_unary(UnaryKind kind, Var t);
inline Var sigmoid(Var t) { return apply_unary(UnaryKind::Sigmoid, t); }
inline Var relu(Var t) { return apply_unary(UnaryKind::Relu, t); }
inline Var tanh(Var t) { return apply_unary(UnaryKind::Tanh, t); }
// Over the last axis.
inline Var softmax(Var t) { return apply_unary(UnaryKind::Softmax, t); }
inline Var log(Var t) { return apply_unary(UnaryKind::Log, t); }
inline Var exp(Var t) { return apply_unary(UnaryKind::Exp, t); }

// Elementwise; shapes must match unless one side holds a single element.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// scale * t + shift
Var affine(Var t, double scale, double shift = 0.0);
// Gradient is zero where the input lies outside [lo, hi].
Var clamp(Var t, double lo, double hi);

Var matmul(Var a, Var b);
Var transpose(Var t);

Var reduce(ReduceKind kind, Var t, std::size_t axis);
Var sum_all(Var t);
Var mean_all(Var t);

Var concat(Var a, Var b, std::size_t axis);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var t, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var t, Shape shape);
// Repeats t `count` times along an axis of extent 1.
Var tile(Var t, std::size_t axis, std::size_t count);

// ---- parameters --------------------------------------------------------------

// Named trainable tensors, iterated in lexicographic name order.
class ParameterSet {
 public:
  using Map = std::map<std::string, Tensor>;

  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return tensors_.contains(name); }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  std::size_t size() const { return tensors_.size(); }
  std::size_t total_numel() const;
  std::vector<std::string> names() const;

  Map::const_iterator begin() const { return tensors_.begin(); }
  Map::const_iterator end() const { return tensors_.end(); }
  Map::iterator begin() { return tensors_.begin(); }
  Map::iterator end() { return tensors_.end(); }

  bool operator==(const ParameterSet&) const = default;

 private:
  Map tensors_;
};

using BoundParams = std::map<std::string, Var>;

BoundParams bind_variables(Graph& g, const ParameterSet& params);
BoundParams bind_constants(Graph& g, const ParameterSet& params);
// Gradients of every bound parameter after g.backward().
ParameterSet collect_grads(const Graph& g, const BoundParams& bound);

using ScalarFn = std::function<Var(Graph&, const BoundParams&)>;

// Max over all coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|),
// numeric being the central difference with step eps.
double grad_check(const ScalarFn& f, const ParameterSet& params, double eps = 1e-5);

}  // namespace bqa
