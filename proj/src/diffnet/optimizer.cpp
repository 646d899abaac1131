#include "umc/diffnet/optimizer.hpp"

#include <cmath>

#include "umc/error.hpp"

namespace umc::diffnet {

OptimizerState::OptimizerState(AdamConfig cfg, const AutoencoderBundle& bundle) : config(cfg) {
  for (const Matrix* p : bundle.parameters()) {
    first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

void step(OptimizerState& opt, AutoencoderBundle& bundle, const GradientSet& grads) {
  std::vector<Matrix*> params = bundle.parameters();
  if (grads.grads.size() != params.size() || opt.first_moment.size() != params.size()) {
    throw ShapeError("optimizer step: parameter count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = grads.grads[i];
    if (g.rows() != params[i]->rows() || g.cols() != params[i]->cols()) {
      throw ShapeError("optimizer step: gradient " + std::to_string(i) + " has the wrong shape");
    }
    if (!g.allFinite()) throw NumericError("optimizer step: non-finite gradient for parameter " + std::to_string(i));
  }

  const AdamConfig& c = opt.config;
  opt.step += 1;
  const double t = static_cast<double>(opt.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = opt.first_moment[i];
    Matrix& v = opt.second_moment[i];
    const Matrix& g = grads.grads[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    params[i]->array() -=
        c.learning_rate * (m.array() / correction1) / ((v.array() / correction2).sqrt() + c.eps);
  }
}

}  // namespace umc::diffnet
