#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "umc/diffnet/matrix.hpp"

namespace umc::diffnet {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  std::size_t id() const { return id_; }
  Graph& graph() const { return *graph_; }
  bool valid() const { return graph_ != nullptr; }
  /// Convenience for 1x1 nodes.
  double scalar() const { return value()(0, 0); }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Tape for reverse-mode differentiation. Nodes are appended in evaluation
// order, so reverse insertion order is a valid topological order for the
// backward sweep. Leaves are constants or parameters; parameters reference
// caller-owned storage and carry a slot index used to route gradients back.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Matrix& upstream, const Matrix& output)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var scalar(double value);
  /// `storage` must outlive the graph and stay unmodified until backward() returns.
  Var parameter(const Matrix& storage, std::size_t slot);
  /// Records an op output. `fn` receives d(loss)/d(output) and the output
  /// itself, and must call accumulate() for each input that needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Matrix value, const std::vector<Var>& inputs, BackwardFn fn);

  const Matrix& value(const Var& v) const { return node(v).value(); }
  bool needs_grad(const Var& v) const { return node(v).requires_grad; }
  void accumulate(const Var& v, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(const Var& v, const Expr& g) {
    Node& n = node(v);
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

  /// Runs the backward sweep from a 1x1 node. May be called once per graph.
  void backward(const Var& loss);
  bool has_backward() const { return backward_done_; }
  /// Gradient accumulated at `v`, or nullptr when none reached it.
  const Matrix* grad(const Var& v) const;

  /// (slot, node id) for every parameter leaf, in recording order.
  const std::vector<std::pair<std::size_t, std::size_t>>& parameter_nodes() const { return params_; }
  /// Moves the accumulated gradient out of node `id`; empty optional when none.
  std::optional<Matrix> take_grad(std::size_t id);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix own;
    const Matrix* external = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    const Matrix& value() const { return external ? *external : own; }
  };

  Node& node(const Var& v);
  const Node& node(const Var& v) const;
  Var push(Node n);

  std::deque<Node> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> params_;
  bool backward_done_ = false;
};

inline const Matrix& Var::value() const { return graph_->value(*this); }

// Differentiable primitives. Shapes are checked and violations raise ShapeError.

Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// Adds the 1 x cols row `bias` to every row of `a`.
Var add_row(const Var& a, const Var& bias);
Var relu(const Var& a);
/// Sum of squared entries, 1x1.
Var sum_squares(const Var& a);
/// Rows scaled to unit norm; zero rows map to zero with zero gradient.
Var row_normalize(const Var& a);
/// Row-wise concatenation.
Var vstack(const std::vector<Var>& parts);
/// Row-wise softmax of `inv_temperature * a`.
Var row_softmax(const Var& a, double inv_temperature);
/// Mean over rows, 1 x cols.
Var col_mean(const Var& a);
/// max(p, floor) then renormalize to unit sum; p is 1 x k.
Var floor_renormalize(const Var& p, double floor);
/// sum_k p_k log(p_k / q_k) with q constant; p, q are 1 x k and positive.
Var kl_to_constant(const Var& p, const Matrix& q);
/// sum_i w_i * s_i over 1x1 nodes.
Var weighted_sum(const std::vector<Var>& terms, const std::vector<double>& weights);

struct BatchNormStats {
  RowVector mean;
  RowVector var;
};

/// Batch normalization with batch statistics. When `running` is non-null it
/// is updated as running = momentum*running + (1-momentum)*batch.
/// Single-row batches get zero variance, so the output is exactly `beta`.
Var batchnorm_train(const Var& x, const Var& gamma, const Var& beta, double eps, BatchNormStats* running,
                    double momentum);
/// Batch normalization with frozen statistics: an affine map per column.
Var batchnorm_eval(const Var& x, const Var& gamma, const Var& beta, const BatchNormStats& stats, double eps);

}  // namespace umc::diffnet
