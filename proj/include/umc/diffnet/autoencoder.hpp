#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "umc/diffnet/graph.hpp"

namespace umc::diffnet {

struct MlpSpec {
  Index input_dim = 0;
  std::vector<Index> hidden_dims;
  Index output_dim = 0;
  bool batchnorm = true;

  void validate() const;
  /// Decoder spec for an encoder: dimensions reversed end to end.
  MlpSpec mirrored() const;
  std::size_t parameter_count() const;
  bool operator==(const MlpSpec&) const = default;
};

struct NormConfig {
  double eps = 1e-5;
  double momentum = 0.9;
};

enum class Mode { Train, Eval };

// One affine layer, optionally followed by batch normalization and ReLU.
// Hidden layers get BN+ReLU; the final layer of an MLP is purely affine.
struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
  bool hidden = false;
  bool normalized = false;
  Matrix gamma;  // 1 x out, normalized layers only
  Matrix beta;
  BatchNormStats stats;
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(MlpSpec spec);

  /// Uniform He initialization: U(-sqrt(6/fan_in), +sqrt(6/fan_in)), zero bias.
  void initialize(std::uint64_t seed);

  /// Records the forward pass. Parameters are bound to slots starting at
  /// `slot_base`, in the order returned by parameters(). Train mode updates
  /// the running batch-norm statistics. `trace`, when given, receives every
  /// layer's output.
  Var forward(Graph& g, const Var& x, Mode mode, std::size_t slot_base, const NormConfig& norm,
              std::vector<Matrix>* trace = nullptr);

  const MlpSpec& spec() const { return spec_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

 private:
  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

// Per-view encoder/decoder pairs. The flat parameter order is, for each view,
// the encoder's parameters followed by the decoder's; gradient and optimizer
// state use the same order.
class AutoencoderBundle {
 public:
  AutoencoderBundle() = default;
  AutoencoderBundle(const std::vector<MlpSpec>& encoders, NormConfig norm, std::uint64_t seed);

  std::size_t views() const { return encoders_.size(); }
  const NormConfig& norm() const { return norm_; }
  Mlp& encoder(std::size_t v) { return encoders_.at(v); }
  Mlp& decoder(std::size_t v) { return decoders_.at(v); }
  const Mlp& encoder(std::size_t v) const { return encoders_.at(v); }
  const Mlp& decoder(std::size_t v) const { return decoders_.at(v); }

  Var encode(Graph& g, std::size_t view, const Var& x, Mode mode, std::vector<Matrix>* trace = nullptr);
  Var decode(Graph& g, std::size_t view, const Var& z, Mode mode, std::vector<Matrix>* trace = nullptr);

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;
  std::vector<BatchNormStats*> norm_stats();
  std::vector<const BatchNormStats*> norm_stats() const;

 private:
  void index_slots();

  NormConfig norm_;
  std::vector<Mlp> encoders_;
  std::vector<Mlp> decoders_;
  std::vector<std::size_t> encoder_slot_;
  std::vector<std::size_t> decoder_slot_;
};

/// Latent representation of `x` for one view (no gradient tracking).
Matrix encode(AutoencoderBundle& bundle, std::size_t view, const Matrix& x, Mode mode);
/// Reconstruction from latent `z` for one view (no gradient tracking).
Matrix decode(AutoencoderBundle& bundle, std::size_t view, const Matrix& z, Mode mode);

struct GradientSet {
  std::vector<Matrix> grads;
};

/// Differentiates `loss` and gathers d(loss)/d(param) for every parameter of
/// `bundle`; parameters the loss never touched get zero gradients.
GradientSet backward(const AutoencoderBundle& bundle, Graph& graph, const Var& loss);

}  // namespace umc::diffnet
