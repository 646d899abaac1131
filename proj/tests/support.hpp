#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "umc/diffnet/graph.hpp"

namespace testing {

using umc::diffnet::Graph;
using umc::diffnet::Index;
using umc::diffnet::Matrix;
using umc::diffnet::Var;

inline Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

inline std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, int k) {
  std::uniform_int_distribution<int> d(0, k - 1);
  std::vector<int> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

using Builder = std::function<Var(Graph&, const std::vector<Var>&)>;

// Analytic gradients of a scalar graph w.r.t. the given leaves.
inline std::vector<Matrix> analytic_grads(const Builder& build, const std::vector<Matrix>& params) {
  Graph g;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(g.parameter(params[i], i));
  Var loss = build(g, vars);
  g.backward(loss);
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix* gr = g.grad(vars[i]);
    out.push_back(gr ? *gr : Matrix::Zero(params[i].rows(), params[i].cols()));
  }
  return out;
}

inline double evaluate(const Builder& build, const std::vector<Matrix>& params) {
  Graph g;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(g.parameter(params[i], i));
  return build(g, vars).scalar();
}

// Largest |analytic - central difference| / max(|analytic|, |numeric|, floor).
// The floor keeps exactly-zero gradients (e.g. biases ahead of batch norm)
// from turning rounding noise into a large relative error.
inline double max_fd_error(const Builder& build, std::vector<Matrix> params, double h = 1e-5, double floor = 1e-4) {
  const auto grads = analytic_grads(build, params);
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Index i = 0; i < params[p].rows(); ++i) {
      for (Index j = 0; j < params[p].cols(); ++j) {
        const double orig = params[p](i, j);
        params[p](i, j) = orig + h;
        const double up = evaluate(build, params);
        params[p](i, j) = orig - h;
        const double down = evaluate(build, params);
        params[p](i, j) = orig;
        const double num = (up - down) / (2 * h);
        const double ana = grads[p](i, j);
        worst = std::max(worst, std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor}));
      }
    }
  }
  return worst;
}

}  // namespace testing
