#include "umc/diffnet/graph.hpp"

#include <cmath>

#include "umc/error.hpp"

namespace umc::diffnet {

namespace {

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + dims(a.value()) + " vs " + dims(b.value()));
  }
}

}  // namespace

Graph::Node& Graph::node(const Var& v) {
  if (v.graph_ != this || v.id_ >= nodes_.size()) throw Error("Var does not belong to this graph");
  return nodes_[v.id_];
}

const Graph::Node& Graph::node(const Var& v) const {
  if (v.graph_ != this || v.id_ >= nodes_.size()) throw Error("Var does not belong to this graph");
  return nodes_[v.id_];
}

Var Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Matrix value) {
  Node n;
  n.own = std::move(value);
  return push(std::move(n));
}

Var Graph::scalar(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return constant(std::move(m));
}

Var Graph::parameter(const Matrix& storage, std::size_t slot) {
  Node n;
  n.external = &storage;
  n.requires_grad = true;
  Var v = push(std::move(n));
  params_.emplace_back(slot, v.id());
  return v;
}

Var Graph::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Var Graph::record(Matrix value, const std::vector<Var>& inputs, BackwardFn fn) {
  Node n;
  n.own = std::move(value);
  for (const Var& in : inputs) n.requires_grad = n.requires_grad || node(in).requires_grad;
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

void Graph::accumulate(const Var& v, const Matrix& g) { accumulate_expr(v, g); }

void Graph::backward(const Var& loss) {
  if (nodes_.empty()) throw Error("backward: no recorded forward pass");
  if (backward_done_) throw Error("backward: graph already differentiated");
  const Node& root = node(loss);
  if (root.value().rows() != 1 || root.value().cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + dims(root.value()));
  }
  backward_done_ = true;
  if (!root.requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  nodes_[loss.id()].has_grad = true;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad, n.value());
    // Interior gradients are not needed after propagation.
    if (n.external == nullptr) {
      n.backward = nullptr;
    }
  }
}

const Matrix* Graph::grad(const Var& v) const {
  const Node& n = node(v);
  return n.has_grad ? &n.grad : nullptr;
}

std::optional<Matrix> Graph::take_grad(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.has_grad) return std::nullopt;
  n.has_grad = false;
  return std::move(n.grad);
}

// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: " + dims(a.value()) + " * " + dims(b.value()));
  Matrix out = a.value() * b.value();
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Matrix& gy, const Matrix&) {
    if (g.needs_grad(a)) g.accumulate_expr(a, gy * b.value().transpose());
    if (g.needs_grad(b)) g.accumulate_expr(b, a.value().transpose() * gy);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: " + dims(a.value()) + " * T(" + dims(b.value()) + ")");
  Matrix out = a.value() * b.value().transpose();
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Matrix& gy, const Matrix&) {
    if (g.needs_grad(a)) g.accumulate_expr(a, gy * b.value());
    if (g.needs_grad(b)) g.accumulate_expr(b, gy.transpose() * a.value());
  });
}

Var add(const Var& a, const Var& b) {
  same_shape(a, b, "add");
  return a.graph().record(a.value() + b.value(), {a, b}, [a, b](Graph& g, const Matrix& gy, const Matrix&) {
    g.accumulate(a, gy);
    g.accumulate(b, gy);
  });
}

Var sub(const Var& a, const Var& b) {
  same_shape(a, b, "sub");
  return a.graph().record(a.value() - b.value(), {a, b}, [a, b](Graph& g, const Matrix& gy, const Matrix&) {
    g.accumulate(a, gy);
    g.accumulate_expr(b, -gy);
  });
}

Var scale(const Var& a, double s) {
  return a.graph().record(a.value() * s, {a}, [a, s](Graph& g, const Matrix& gy, const Matrix&) { g.accumulate_expr(a, gy * s); });
}

Var add_row(const Var& a, const Var& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw ShapeError("add_row: bias " + dims(bias.value()) + " for " + dims(a.value()));
  }
  Matrix out = a.value().rowwise() + bias.value().row(0);
  return a.graph().record(std::move(out), {a, bias}, [a, bias](Graph& g, const Matrix& gy, const Matrix&) {
    g.accumulate(a, gy);
    if (g.needs_grad(bias)) g.accumulate_expr(bias, gy.colwise().sum());
  });
}

Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Matrix& gy, const Matrix&) {
    g.accumulate_expr(a, (a.value().array() > 0.0).select(gy, 0.0));
  });
}

Var sum_squares(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Matrix& gy, const Matrix&) {
    g.accumulate_expr(a, (2.0 * gy(0, 0)) * a.value());
  });
}

Var row_normalize(const Var& a) {
  const Matrix& x = a.value();
  RowVector norms(x.rows());
  Matrix out = x;
  for (Index i = 0; i < x.rows(); ++i) {
    norms(i) = x.row(i).norm();
    if (norms(i) > 0.0) out.row(i) /= norms(i);
  }
  return a.graph().record(std::move(out), {a}, [a, norms](Graph& g, const Matrix& gy, const Matrix& un) {
    Matrix gx = Matrix::Zero(un.rows(), un.cols());
    for (Index i = 0; i < un.rows(); ++i) {
      if (norms(i) == 0.0) continue;
      const double proj = un.row(i).dot(gy.row(i));
      gx.row(i) = (gy.row(i) - proj * un.row(i)) / norms(i);
    }
    g.accumulate(a, gx);
  });
}

Var vstack(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("vstack: no inputs");
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ShapeError("vstack: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return parts.front().graph().record(std::move(out), parts, [parts](Graph& g, const Matrix& gy, const Matrix&) {
    Index off = 0;
    for (const Var& p : parts) {
      if (g.needs_grad(p)) g.accumulate_expr(p, gy.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

Var row_softmax(const Var& a, double inv_temperature) {
  const Matrix& x = a.value();
  Matrix p(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const RowVector z = x.row(i) * inv_temperature;
    const double mx = z.maxCoeff();
    RowVector e = (z.array() - mx).exp().matrix();
    p.row(i) = e / e.sum();
  }
  return a.graph().record(std::move(p), {a}, [a, inv_temperature](Graph& g, const Matrix& gy, const Matrix& pv) {
    Matrix gx(pv.rows(), pv.cols());
    for (Index i = 0; i < pv.rows(); ++i) {
      const double dot = pv.row(i).dot(gy.row(i));
      gx.row(i) = inv_temperature * (pv.row(i).array() * (gy.row(i).array() - dot)).matrix();
    }
    g.accumulate(a, gx);
  });
}

Var col_mean(const Var& a) {
  const Index n = a.rows();
  if (n == 0) throw ShapeError("col_mean: empty input");
  Matrix out = a.value().colwise().sum() / static_cast<double>(n);
  return a.graph().record(std::move(out), {a}, [a, n](Graph& g, const Matrix& gy, const Matrix&) {
    g.accumulate_expr(a, gy.replicate(n, 1) / static_cast<double>(n));
  });
}

Var floor_renormalize(const Var& p, double floor) {
  if (p.rows() != 1) throw ShapeError("floor_renormalize: expected a row vector");
  Matrix q = p.value().cwiseMax(floor);
  const double s = q.sum();
  q /= s;
  return p.graph().record(std::move(q), {p}, [p, s, floor](Graph& g, const Matrix& gy, const Matrix& y) {
    const double dot = y.row(0).dot(gy.row(0));
    Matrix gx = (gy.array() - dot) / s;
    for (Index k = 0; k < gx.cols(); ++k) {
      if (!(p.value()(0, k) > floor)) gx(0, k) = 0.0;
    }
    g.accumulate(p, gx);
  });
}

Var kl_to_constant(const Var& p, const Matrix& q) {
  if (p.rows() != 1 || q.rows() != 1 || p.cols() != q.cols()) throw ShapeError("kl_to_constant: shape mismatch");
  const Matrix& pv = p.value();
  Matrix out(1, 1);
  double acc = 0.0;
  for (Index k = 0; k < pv.cols(); ++k) acc += pv(0, k) * std::log(pv(0, k) / q(0, k));
  out(0, 0) = acc;
  return p.graph().record(std::move(out), {p}, [p, q](Graph& g, const Matrix& gy, const Matrix&) {
    const Matrix& pv = p.value();
    Matrix gx(1, pv.cols());
    for (Index k = 0; k < pv.cols(); ++k) gx(0, k) = gy(0, 0) * (std::log(pv(0, k) / q(0, k)) + 1.0);
    g.accumulate(p, gx);
  });
}

Var weighted_sum(const std::vector<Var>& terms, const std::vector<double>& weights) {
  if (terms.empty() || terms.size() != weights.size()) throw ShapeError("weighted_sum: terms/weights mismatch");
  Matrix out = Matrix::Zero(1, 1);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].rows() != 1 || terms[i].cols() != 1) throw ShapeError("weighted_sum: terms must be 1x1");
    out(0, 0) += weights[i] * terms[i].scalar();
  }
  return terms.front().graph().record(std::move(out), terms, [terms, weights](Graph& g, const Matrix& gy, const Matrix&) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (g.needs_grad(terms[i])) g.accumulate_expr(terms[i], gy * weights[i]);
    }
  });
}

Var batchnorm_train(const Var& x, const Var& gamma, const Var& beta, double eps, BatchNormStats* running,
                    double momentum) {
  const Matrix& xv = x.value();
  const Index n = xv.rows();
  const Index d = xv.cols();
  if (n == 0) throw ShapeError("batchnorm: empty batch");
  if (gamma.cols() != d || beta.cols() != d) throw ShapeError("batchnorm: parameter width mismatch");

  const RowVector mean = xv.colwise().mean();
  Matrix centered = xv.rowwise() - mean;
  const RowVector var = centered.colwise().squaredNorm() / static_cast<double>(n);
  const RowVector inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix xhat = centered.array().rowwise() * inv_std.array();
  Matrix y = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();

  if (running != nullptr) {
    const RowVector unbiased = n > 1 ? RowVector(var * (static_cast<double>(n) / static_cast<double>(n - 1)))
                                     : RowVector(RowVector::Zero(d));
    running->mean = momentum * running->mean + (1.0 - momentum) * mean;
    running->var = momentum * running->var + (1.0 - momentum) * unbiased;
  }

  return x.graph().record(
      std::move(y), {x, gamma, beta}, [x, gamma, beta, xhat = std::move(xhat), inv_std, n](Graph& g, const Matrix& gy, const Matrix&) {
        if (g.needs_grad(beta)) g.accumulate_expr(beta, gy.colwise().sum());
        if (g.needs_grad(gamma)) g.accumulate_expr(gamma, gy.cwiseProduct(xhat).colwise().sum());
        if (g.needs_grad(x)) {
          const Matrix dxhat = gy.array().rowwise() * gamma.value().row(0).array();
          const RowVector sum_d = dxhat.colwise().sum();
          const RowVector sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
          const double nn = static_cast<double>(n);
          Matrix dx = (nn * dxhat.array()).rowwise() - sum_d.array();
          dx -= (xhat.array().rowwise() * sum_dx.array()).matrix();
          dx = dx.array().rowwise() * (inv_std.array() / nn);
          g.accumulate(x, dx);
        }
      });
}

Var batchnorm_eval(const Var& x, const Var& gamma, const Var& beta, const BatchNormStats& stats, double eps) {
  const Index d = x.cols();
  if (stats.mean.cols() != d || gamma.cols() != d || beta.cols() != d) throw ShapeError("batchnorm: width mismatch");
  const RowVector inv_std = (stats.var.array() + eps).rsqrt().matrix();
  const Matrix xhat = (x.value().rowwise() - stats.mean).array().rowwise() * inv_std.array();
  Matrix y = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
  return x.graph().record(std::move(y), {x, gamma, beta}, [x, gamma, beta, xhat, inv_std](Graph& g, const Matrix& gy, const Matrix&) {
    if (g.needs_grad(beta)) g.accumulate_expr(beta, gy.colwise().sum());
    if (g.needs_grad(gamma)) g.accumulate_expr(gamma, gy.cwiseProduct(xhat).colwise().sum());
    if (g.needs_grad(x)) {
      g.accumulate_expr(x, (gy.array().rowwise() * (gamma.value().row(0).array() * inv_std.array())).matrix());
    }
  });
}

}  // namespace umc::diffnet
