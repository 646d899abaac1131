#include "umc/diffnet/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "umc/error.hpp"
#include "umc/seed.hpp"

namespace umc::diffnet {

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw ConfigError("MLP dimensions must be >= 1");
  for (Index h : hidden_dims) {
    if (h < 1) throw ConfigError("MLP hidden widths must be >= 1");
  }
}

MlpSpec MlpSpec::mirrored() const {
  MlpSpec m;
  m.input_dim = output_dim;
  m.hidden_dims.assign(hidden_dims.rbegin(), hidden_dims.rend());
  m.output_dim = input_dim;
  m.batchnorm = batchnorm;
  return m;
}

std::size_t MlpSpec::parameter_count() const {
  std::size_t count = 0;
  Index in = input_dim;
  for (Index h : hidden_dims) {
    count += static_cast<std::size_t>(in * h + h + (batchnorm ? 2 * h : 0));
    in = h;
  }
  return count + static_cast<std::size_t>(in * output_dim + output_dim);
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Index in = spec_.input_dim;
  auto make = [&](Index out, bool hidden) {
    DenseLayer layer;
    layer.weight = Matrix::Zero(in, out);
    layer.bias = Matrix::Zero(1, out);
    layer.hidden = hidden;
    layer.normalized = hidden && spec_.batchnorm;
    if (layer.normalized) {
      layer.gamma = Matrix::Ones(1, out);
      layer.beta = Matrix::Zero(1, out);
      layer.stats.mean = RowVector::Zero(out);
      layer.stats.var = RowVector::Ones(out);
    }
    layers_.push_back(std::move(layer));
    in = out;
  };
  for (Index h : spec_.hidden_dims) make(h, true);
  make(spec_.output_dim, false);
}

void Mlp::initialize(std::uint64_t seed) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    DenseLayer& layer = layers_[l];
    std::mt19937_64 rng(derive_seed(seed, {l}));
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.rows()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
    layer.bias.setZero();
    if (layer.normalized) {
      layer.gamma.setOnes();
      layer.beta.setZero();
      layer.stats.mean.setZero();
      layer.stats.var.setOnes();
    }
  }
}

Var Mlp::forward(Graph& g, const Var& x, Mode mode, std::size_t slot_base, const NormConfig& norm,
                 std::vector<Matrix>* trace) {
  if (x.cols() != spec_.input_dim) {
    throw ShapeError("MLP input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(spec_.input_dim));
  }
  std::size_t slot = slot_base;
  Var h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    DenseLayer& layer = layers_[l];
    h = matmul(h, g.parameter(layer.weight, slot++));
    h = add_row(h, g.parameter(layer.bias, slot++));
    if (layer.normalized) {
      Var gamma = g.parameter(layer.gamma, slot++);
      Var beta = g.parameter(layer.beta, slot++);
      h = mode == Mode::Train ? batchnorm_train(h, gamma, beta, norm.eps, &layer.stats, norm.momentum)
                              : batchnorm_eval(h, gamma, beta, layer.stats, norm.eps);
    }
    if (layer.hidden) h = relu(h);
    if (!h.value().allFinite()) throw NumericError("non-finite activation at layer " + std::to_string(l));
    if (trace != nullptr) trace->push_back(h.value());
  }
  return h;
}

std::vector<Matrix*> Mlp::parameters() {
  std::vector<Matrix*> out;
  for (DenseLayer& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
    if (layer.normalized) {
      out.push_back(&layer.gamma);
      out.push_back(&layer.beta);
    }
  }
  return out;
}

std::vector<const Matrix*> Mlp::parameters() const {
  std::vector<const Matrix*> out;
  for (Matrix* m : const_cast<Mlp*>(this)->parameters()) out.push_back(m);
  return out;
}

AutoencoderBundle::AutoencoderBundle(const std::vector<MlpSpec>& encoders, NormConfig norm, std::uint64_t seed)
    : norm_(norm) {
  if (encoders.empty()) throw ConfigError("autoencoder bundle needs at least one view");
  for (std::size_t v = 0; v < encoders.size(); ++v) {
    encoders_.emplace_back(encoders[v]);
    decoders_.emplace_back(encoders[v].mirrored());
    encoders_.back().initialize(derive_seed(seed, {v, 0}));
    decoders_.back().initialize(derive_seed(seed, {v, 1}));
  }
  index_slots();
}

void AutoencoderBundle::index_slots() {
  encoder_slot_.clear();
  decoder_slot_.clear();
  std::size_t slot = 0;
  for (std::size_t v = 0; v < encoders_.size(); ++v) {
    encoder_slot_.push_back(slot);
    slot += encoders_[v].parameters().size();
    decoder_slot_.push_back(slot);
    slot += decoders_[v].parameters().size();
  }
}

Var AutoencoderBundle::encode(Graph& g, std::size_t view, const Var& x, Mode mode, std::vector<Matrix>* trace) {
  return encoders_.at(view).forward(g, x, mode, encoder_slot_.at(view), norm_, trace);
}

Var AutoencoderBundle::decode(Graph& g, std::size_t view, const Var& z, Mode mode, std::vector<Matrix>* trace) {
  return decoders_.at(view).forward(g, z, mode, decoder_slot_.at(view), norm_, trace);
}

std::vector<Matrix*> AutoencoderBundle::parameters() {
  std::vector<Matrix*> out;
  for (std::size_t v = 0; v < encoders_.size(); ++v) {
    for (Matrix* m : encoders_[v].parameters()) out.push_back(m);
    for (Matrix* m : decoders_[v].parameters()) out.push_back(m);
  }
  return out;
}

std::vector<const Matrix*> AutoencoderBundle::parameters() const {
  std::vector<const Matrix*> out;
  for (Matrix* m : const_cast<AutoencoderBundle*>(this)->parameters()) out.push_back(m);
  return out;
}

std::vector<std::string> AutoencoderBundle::parameter_names() const {
  std::vector<std::string> names;
  auto add = [&names](const Mlp& net, const std::string& prefix) {
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      const std::string base = prefix + ".layer" + std::to_string(l);
      names.push_back(base + ".weight");
      names.push_back(base + ".bias");
      if (net.layers()[l].normalized) {
        names.push_back(base + ".gamma");
        names.push_back(base + ".beta");
      }
    }
  };
  for (std::size_t v = 0; v < encoders_.size(); ++v) {
    add(encoders_[v], "view" + std::to_string(v) + ".encoder");
    add(decoders_[v], "view" + std::to_string(v) + ".decoder");
  }
  return names;
}

std::size_t AutoencoderBundle::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* m : parameters()) n += static_cast<std::size_t>(m->size());
  return n;
}

std::vector<BatchNormStats*> AutoencoderBundle::norm_stats() {
  std::vector<BatchNormStats*> out;
  for (std::size_t v = 0; v < encoders_.size(); ++v) {
    for (DenseLayer& l : encoders_[v].layers()) {
      if (l.normalized) out.push_back(&l.stats);
    }
    for (DenseLayer& l : decoders_[v].layers()) {
      if (l.normalized) out.push_back(&l.stats);
    }
  }
  return out;
}

std::vector<const BatchNormStats*> AutoencoderBundle::norm_stats() const {
  std::vector<const BatchNormStats*> out;
  for (BatchNormStats* s : const_cast<AutoencoderBundle*>(this)->norm_stats()) out.push_back(s);
  return out;
}

Matrix encode(AutoencoderBundle& bundle, std::size_t view, const Matrix& x, Mode mode) {
  Graph g;
  return bundle.encode(g, view, g.constant(x), mode).value();
}

Matrix decode(AutoencoderBundle& bundle, std::size_t view, const Matrix& z, Mode mode) {
  Graph g;
  return bundle.decode(g, view, g.constant(z), mode).value();
}

GradientSet backward(const AutoencoderBundle& bundle, Graph& graph, const Var& loss) {
  if (!loss.valid() || graph.parameter_nodes().empty()) throw Error("backward: no recorded forward pass");
  graph.backward(loss);
  const std::vector<const Matrix*> params = bundle.parameters();
  GradientSet out;
  out.grads.resize(params.size());
  std::vector<bool> seen(params.size(), false);
  for (const auto& [slot, id] : graph.parameter_nodes()) {
    if (slot >= params.size()) throw ShapeError("backward: parameter slot out of range");
    std::optional<Matrix> g = graph.take_grad(id);
    if (!g) continue;
    if (!seen[slot]) {
      out.grads[slot] = std::move(*g);
      seen[slot] = true;
    } else {
      out.grads[slot] += *g;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!seen[i]) out.grads[i] = Matrix::Zero(params[i]->rows(), params[i]->cols());
  }
  return out;
}

}  // namespace umc::diffnet
