#pragma once

#include <span>
#include <vector>

#include "umc/clusterkit/clusterkit.hpp"
#include "umc/diffnet/autoencoder.hpp"

namespace umc::losses {

using diffnet::Graph;
using diffnet::Matrix;
using diffnet::Var;

// Coarse-to-fine cluster counts {2, ceil(K/2), K}, strictly increasing.
// For K < 4 coinciding counts are merged, leaving fewer levels.
struct ClusterSet {
  std::vector<int> levels;

  static ClusterSet standard(int num_clusters);
  /// Number of active levels at 1-based epoch t: 1 while t <= epochs/4,
  /// 2 while t <= epochs/2, then all of them.
  static int active_prefix(int epoch, int epochs);
  /// First min(prefix, levels.size()) levels.
  std::vector<int> active(int prefix) const;
  int finest() const { return levels.back(); }
};

struct LossWeights {
  double lambda1 = 1.0;   // orthogonality regularizer
  double lambda2 = 0.01;  // inner-view contrastive
  double lambda3 = 0.01;  // common-view contrastive
  double lambda4 = 1e3;   // cross-view KL
  double temperature = 0.1;

  void validate() const;
};

// ---------------------------------------------------------------- pair sets

// True positives / negatives of one anchor, as positions inside the batch.
struct AnchorPairs {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

/// Multi-level pair sets within a batch: j is a true positive of i when the two share
/// a cluster at every active level, a true negative when they differ at
/// every active level; anything else belongs to neither set. `level_labels`
/// holds one full-view labeling per active level; `batch` lists view rows.
std::vector<AnchorPairs> build_inner_pairs(const std::vector<std::vector<int>>& level_labels,
                                           std::span<const std::size_t> batch);

// One anchor row of a similarity matrix with weighted positives.
struct ContrastiveAnchor {
  std::size_t row = 0;
  std::vector<std::size_t> positives;
  std::vector<double> weights;  // one per positive
  std::vector<std::size_t> negatives;
};

/// sum over anchors and their positives p of
///   weight_p * -log( exp(S[a,p]/tau) / sum_{n in negatives(a)} exp(S[a,n]/tau) ).
/// Anchors without positives or negatives contribute nothing.
Var nt_xent(const Var& similarity, const std::vector<ContrastiveAnchor>& anchors, double temperature);

// ------------------------------------------------------------------- terms

struct AutoencoderTerm {
  Var loss;
  std::vector<Var> latents;  // Z_b per view, reused by the other terms
};

/// sum_v |X_b - G(F(X_b))|_F^2 / b_v + lambda1 |Z_b Z_b^T - I|_F^2 / b_v^2.
AutoencoderTerm recon_orth_loss(Graph& g, diffnet::AutoencoderBundle& bundle, const std::vector<Matrix>& x_batches,
                                double lambda1, diffnet::Mode mode = diffnet::Mode::Train);

/// (1/V) sum_v sum_i sum_{j in tp(i)} 1/(b_v m_i) l_ij on cosine similarities.
Var inner_contrastive_loss(const std::vector<Var>& latents, const std::vector<std::vector<AnchorPairs>>& pairs,
                           double temperature);

/// Matching between common-view clusters (rows) and view clusters (columns)
/// maximizing the summed cosine between matched centroids.
clusterkit::MatchMatrix match_common(const Matrix& common_centroids, const Matrix& view_centroids);

// Labels needed by the common-view term at one level, for the current step.
struct CommonLevelBatch {
  std::vector<int> anchor_common_labels;           // per stacked batch row
  std::vector<std::vector<int>> view_labels;       // per view, per batch row
  std::vector<clusterkit::MatchMatrix> matchings;  // per view: common row -> view column
};

/// Common-view contrastive term. Anchors are all rows of the stacked batch
/// Z* = [Z_1; ...; Z_V]. A view row j is a positive of anchor i when the
/// matching links j's view cluster to i's common cluster; every other
/// non-self row is a negative. Per anchor and view, positives are averaged;
/// anchors and views are averaged by 1/(N_b V); levels are averaged.
Var common_contrastive_loss(const std::vector<Var>& latents, const std::vector<CommonLevelBatch>& levels,
                            double temperature);

/// Reliable views of every view: r != v with sils[r] > coeff * sils[v] when
/// sils[v] > 0, and sils[r] > sils[v] + coeff * |sils[v]| otherwise.
std::vector<std::vector<int>> select_reliable(const std::vector<double>& silhouettes, double coeff);

constexpr double kDistributionFloor = 1e-8;

/// Batch-averaged softmax(cosine(z_i, C*_k) / tau) over common centroids,
/// floored at kDistributionFloor and renormalized. 1 x K.
Var view_distribution(const Var& latent, const Matrix& common_centroids, double temperature);

/// (1/V^2) sum_v sum_{r in reliable[v]} KL(P_v || Q_r), with Q_r = P_r held constant.
Var cross_view_kl(const std::vector<Var>& distributions, const std::vector<std::vector<int>>& reliable);
/// Same with explicit targets Q_r (1 x K each) instead of the current values of P_r.
Var cross_view_kl(const std::vector<Var>& distributions, const std::vector<std::vector<int>>& reliable,
                  const std::vector<Matrix>& targets);

struct LossTerms {
  Var autoencoder;
  Var inner;
  Var common;
  Var cross;
};

struct LossValues {
  double autoencoder = 0.0;
  double inner = 0.0;
  double common = 0.0;
  double cross = 0.0;
  double total = 0.0;
};

/// l_AE + lambda2 l_in + lambda3 l_co + lambda4 l_cr.
Var total_loss(const LossTerms& terms, const LossWeights& w);
LossValues values(const LossTerms& terms, const Var& total);

}  // namespace umc::losses
