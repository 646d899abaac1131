#include "umc/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "umc/error.hpp"

namespace umc::losses {

using diffnet::Index;
using diffnet::weighted_sum;

ClusterSet ClusterSet::standard(int num_clusters) {
  if (num_clusters < 2) throw ConfigError("cluster set needs K >= 2, got " + std::to_string(num_clusters));
  ClusterSet cs;
  for (int k : {2, (num_clusters + 1) / 2, num_clusters}) {
    if (cs.levels.empty() || k > cs.levels.back()) cs.levels.push_back(k);
  }
  return cs;
}

int ClusterSet::active_prefix(int epoch, int epochs) {
  if (epoch < 1 || epochs < 1) throw ConfigError("active_prefix: epochs are 1-based");
  if (4 * epoch <= epochs) return 1;
  if (2 * epoch <= epochs) return 2;
  return 3;
}

std::vector<int> ClusterSet::active(int prefix) const {
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(prefix, 1)), levels.size());
  return {levels.begin(), levels.begin() + static_cast<std::ptrdiff_t>(n)};
}

void LossWeights::validate() const {
  for (double l : {lambda1, lambda2, lambda3, lambda4}) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("loss weights must be finite and non-negative");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be positive");
}

std::vector<AnchorPairs> build_inner_pairs(const std::vector<std::vector<int>>& level_labels,
                                           std::span<const std::size_t> batch) {
  if (level_labels.empty()) throw DataError("build_inner_pairs: no active level");
  for (const auto& labels : level_labels) {
    for (std::size_t r : batch) {
      if (r >= labels.size()) throw DataError("build_inner_pairs: batch index out of range");
    }
  }
  const std::size_t b = batch.size();
  std::vector<AnchorPairs> out(b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (i == j) continue;
      bool all_same = true;
      bool all_diff = true;
      for (const auto& labels : level_labels) {
        const bool same = labels[batch[i]] == labels[batch[j]];
        all_same = all_same && same;
        all_diff = all_diff && !same;
      }
      if (all_same) out[i].positives.push_back(j);
      else if (all_diff) out[i].negatives.push_back(j);
    }
  }
  return out;
}

Var nt_xent(const Var& similarity, const std::vector<ContrastiveAnchor>& anchors, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("nt_xent: temperature must be positive");
  const Matrix& s = similarity.value();
  const double inv = 1.0 / temperature;
  auto check = [&](std::size_t r, std::size_t c) {
    if (r >= static_cast<std::size_t>(s.rows()) || c >= static_cast<std::size_t>(s.cols())) {
      throw ShapeError("nt_xent: index outside similarity matrix");
    }
  };
  // Log-sum-exp over the negatives; takes everything by argument because the
  // backward closure keeps a copy.
  auto lse = [](const Matrix& s, double inv, const ContrastiveAnchor& a) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t n : a.negatives) mx = std::max(mx, s(Index(a.row), Index(n)) * inv);
    double acc = 0.0;
    for (std::size_t n : a.negatives) acc += std::exp(s(Index(a.row), Index(n)) * inv - mx);
    return mx + std::log(acc);
  };
  double total = 0.0;
  for (const auto& a : anchors) {
    if (a.weights.size() != a.positives.size()) throw ShapeError("nt_xent: one weight per positive required");
    for (std::size_t p : a.positives) check(a.row, p);
    for (std::size_t n : a.negatives) check(a.row, n);
    if (a.positives.empty() || a.negatives.empty()) continue;
    const double l = lse(s, inv, a);
    for (std::size_t k = 0; k < a.positives.size(); ++k) {
      total += a.weights[k] * (l - s(Index(a.row), Index(a.positives[k])) * inv);
    }
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  return similarity.graph().record(
      std::move(out), {similarity}, [similarity, anchors, inv, lse](Graph& g, const Matrix& gy, const Matrix&) {
        if (!g.needs_grad(similarity)) return;
        const Matrix& sv = similarity.value();
        Matrix gs = Matrix::Zero(sv.rows(), sv.cols());
        const double up = gy(0, 0);
        for (const auto& a : anchors) {
          if (a.positives.empty() || a.negatives.empty()) continue;
          double wsum = 0.0;
          for (std::size_t k = 0; k < a.positives.size(); ++k) {
            wsum += a.weights[k];
            gs(Index(a.row), Index(a.positives[k])) -= up * a.weights[k] * inv;
          }
          const double l = lse(sv, inv, a);
          for (std::size_t n : a.negatives) {
            gs(Index(a.row), Index(n)) += up * wsum * inv * std::exp(sv(Index(a.row), Index(n)) * inv - l);
          }
        }
        g.accumulate(similarity, gs);
      });
}

AutoencoderTerm recon_orth_loss(Graph& g, diffnet::AutoencoderBundle& bundle, const std::vector<Matrix>& x_batches,
                                double lambda1, diffnet::Mode mode) {
  if (x_batches.size() != bundle.views()) throw ShapeError("recon_orth_loss: one batch per view required");
  AutoencoderTerm out;
  std::vector<Var> terms;
  std::vector<double> weights;
  for (std::size_t v = 0; v < x_batches.size(); ++v) {
    const Index b = x_batches[v].rows();
    if (b == 0) throw DataError("recon_orth_loss: empty batch for view " + std::to_string(v));
    Var x = g.constant(x_batches[v]);
    Var z = bundle.encode(g, v, x, mode);
    Var xr = bundle.decode(g, v, z, mode);
    out.latents.push_back(z);
    terms.push_back(sum_squares(sub(xr, x)));
    weights.push_back(1.0 / static_cast<double>(b));
    if (lambda1 != 0.0) {
      Var gram = matmul_nt(z, z);
      terms.push_back(sum_squares(sub(gram, g.constant(Matrix::Identity(b, b)))));
      weights.push_back(lambda1 / static_cast<double>(b * b));
    }
  }
  out.loss = weighted_sum(terms, weights);
  return out;
}

Var inner_contrastive_loss(const std::vector<Var>& latents, const std::vector<std::vector<AnchorPairs>>& pairs,
                           double temperature) {
  if (latents.empty() || latents.size() != pairs.size()) throw ShapeError("inner_contrastive_loss: one pair set per view");
  const double V = static_cast<double>(latents.size());
  std::vector<Var> terms;
  for (std::size_t v = 0; v < latents.size(); ++v) {
    const auto b = static_cast<std::size_t>(latents[v].rows());
    if (pairs[v].size() != b) throw ShapeError("inner_contrastive_loss: pair set size differs from batch");
    std::vector<ContrastiveAnchor> anchors;
    for (std::size_t i = 0; i < b; ++i) {
      const auto& ps = pairs[v][i];
      if (ps.positives.empty() || ps.negatives.empty()) continue;
      const double w = 1.0 / (static_cast<double>(b) * static_cast<double>(ps.positives.size()) * V);
      anchors.push_back({i, ps.positives, std::vector<double>(ps.positives.size(), w), ps.negatives});
    }
    Var u = row_normalize(latents[v]);
    terms.push_back(nt_xent(matmul_nt(u, u), anchors, temperature));
  }
  return weighted_sum(terms, std::vector<double>(terms.size(), 1.0));
}

clusterkit::MatchMatrix match_common(const Matrix& common_centroids, const Matrix& view_centroids) {
  if (common_centroids.rows() != view_centroids.rows() || common_centroids.cols() != view_centroids.cols()) {
    throw ShapeError("match_common: centroid sets differ in shape");
  }
  return clusterkit::hungarian_max(clusterkit::cosine_matrix(common_centroids, view_centroids));
}

Var common_contrastive_loss(const std::vector<Var>& latents, const std::vector<CommonLevelBatch>& levels,
                            double temperature) {
  if (latents.empty()) throw ShapeError("common_contrastive_loss: no views");
  if (levels.empty()) throw DataError("common_contrastive_loss: no active level");
  const std::size_t V = latents.size();
  std::vector<std::size_t> offset(V + 1, 0);
  std::vector<Var> units;
  for (std::size_t v = 0; v < V; ++v) {
    offset[v + 1] = offset[v] + static_cast<std::size_t>(latents[v].rows());
    units.push_back(row_normalize(latents[v]));
  }
  const std::size_t nb = offset[V];
  Var ustar = vstack(units);
  Var s = matmul_nt(ustar, ustar);

  std::vector<Var> terms;
  for (const auto& level : levels) {
    if (level.anchor_common_labels.size() != nb) throw ShapeError("common_contrastive_loss: anchor labels size");
    if (level.view_labels.size() != V || level.matchings.size() != V) {
      throw DataError("common_contrastive_loss: missing matching or view labels");
    }
    // Common cluster linked to each stacked column.
    std::vector<int> linked(nb);
    for (std::size_t v = 0; v < V; ++v) {
      if (level.view_labels[v].size() != offset[v + 1] - offset[v]) {
        throw ShapeError("common_contrastive_loss: view labels size");
      }
      const auto inv = level.matchings[v].inverse();
      for (std::size_t j = 0; j < level.view_labels[v].size(); ++j) {
        const int c = level.view_labels[v][j];
        if (c < 0 || static_cast<std::size_t>(c) >= inv.size()) throw DataError("common_contrastive_loss: label outside matching");
        linked[offset[v] + j] = inv[static_cast<std::size_t>(c)];
      }
    }
    std::vector<ContrastiveAnchor> anchors;
    for (std::size_t i = 0; i < nb; ++i) {
      ContrastiveAnchor a;
      a.row = i;
      const int ci = level.anchor_common_labels[i];
      for (std::size_t v = 0; v < V; ++v) {
        std::size_t first = a.positives.size();
        for (std::size_t j = offset[v]; j < offset[v + 1]; ++j) {
          if (j == i) continue;
          if (linked[j] == ci) a.positives.push_back(j);
          else a.negatives.push_back(j);
        }
        const std::size_t p = a.positives.size() - first;
        const double w = 1.0 / (static_cast<double>(nb) * static_cast<double>(V) * static_cast<double>(p));
        a.weights.resize(a.positives.size(), w);
      }
      if (!a.positives.empty() && !a.negatives.empty()) anchors.push_back(std::move(a));
    }
    terms.push_back(nt_xent(s, anchors, temperature));
  }
  return weighted_sum(terms, std::vector<double>(terms.size(), 1.0 / static_cast<double>(terms.size())));
}

std::vector<std::vector<int>> select_reliable(const std::vector<double>& silhouettes, double coeff) {
  const std::size_t V = silhouettes.size();
  std::vector<std::vector<int>> out(V);
  for (std::size_t v = 0; v < V; ++v) {
    const double sv = silhouettes[v];
    const double bar = sv > 0.0 ? coeff * sv : sv + coeff * std::abs(sv);
    for (std::size_t r = 0; r < V; ++r) {
      if (r != v && silhouettes[r] > bar) out[v].push_back(static_cast<int>(r));
    }
  }
  return out;
}

Var view_distribution(const Var& latent, const Matrix& common_centroids, double temperature) {
  if (common_centroids.rows() < 2) throw DataError("view_distribution: need at least 2 centroids");
  if (common_centroids.cols() != latent.cols()) throw ShapeError("view_distribution: centroid dimension mismatch");
  if (!(temperature > 0.0)) throw ConfigError("view_distribution: temperature must be positive");
  Graph& g = latent.graph();
  Var c = g.constant(diffnet::normalize_rows(common_centroids));
  Var sim = matmul_nt(row_normalize(latent), c);
  return floor_renormalize(col_mean(row_softmax(sim, 1.0 / temperature)), kDistributionFloor);
}

Var cross_view_kl(const std::vector<Var>& distributions, const std::vector<std::vector<int>>& reliable) {
  std::vector<Matrix> targets;
  for (const Var& p : distributions) targets.push_back(p.value());
  return cross_view_kl(distributions, reliable, targets);
}

Var cross_view_kl(const std::vector<Var>& distributions, const std::vector<std::vector<int>>& reliable,
                  const std::vector<Matrix>& targets) {
  if (distributions.empty() || distributions.size() != reliable.size() || targets.size() != distributions.size()) {
    throw ShapeError("cross_view_kl: one reliable set and target per view");
  }
  const std::size_t V = distributions.size();
  Graph& g = distributions.front().graph();
  std::vector<Var> terms;
  for (std::size_t v = 0; v < V; ++v) {
    for (int r : reliable[v]) {
      if (r < 0 || static_cast<std::size_t>(r) >= V) throw DataError("cross_view_kl: reliable view out of range");
      terms.push_back(kl_to_constant(distributions[v], targets[static_cast<std::size_t>(r)]));
    }
  }
  if (terms.empty()) return g.scalar(0.0);
  const double w = 1.0 / static_cast<double>(V * V);
  return weighted_sum(terms, std::vector<double>(terms.size(), w));
}

Var total_loss(const LossTerms& t, const LossWeights& w) {
  return weighted_sum({t.autoencoder, t.inner, t.common, t.cross}, {1.0, w.lambda2, w.lambda3, w.lambda4});
}

LossValues values(const LossTerms& t, const Var& total) {
  return {t.autoencoder.scalar(), t.inner.scalar(), t.common.scalar(), t.cross.scalar(), total.scalar()};
}

}  // namespace umc::losses
