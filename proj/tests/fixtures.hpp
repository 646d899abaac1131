#pragma once

#include <numeric>
#include <random>

#include "support.hpp"
#include "umc/losses/losses.hpp"

namespace fixtures {

using namespace umc;
using diffnet::AutoencoderBundle;
using diffnet::Graph;
using diffnet::Index;
using diffnet::Matrix;
using diffnet::Var;

// A small random model with all four loss terms switched on. Level labels,
// matchings, centroids and reliable sets are fixed random constants.
struct LossCase {
  AutoencoderBundle bundle;
  std::vector<Matrix> x;
  std::vector<std::vector<std::vector<int>>> view_levels;  // [view][level] labels per batch row
  std::vector<losses::CommonLevelBatch> common;
  Matrix centroids;
  std::vector<std::vector<int>> reliable;
  std::vector<Matrix> targets;
  losses::LossWeights weights;
  std::size_t parameters = 0;

  explicit LossCase(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int V = pick(2, 3);
    const int K = 3;
    const std::vector<int> levels{2, 3};
    const Index D = 3;
    std::vector<diffnet::MlpSpec> specs;
    for (int v = 0; v < V; ++v) specs.push_back({pick(2, 4), {pick(3, 4)}, D, true});
    bundle = AutoencoderBundle(specs, diffnet::NormConfig{}, seed);
    parameters = bundle.parameter_count();
    // Zero biases can leave a latent row exactly at the origin, where cosine
    // similarity has no derivative.
    std::normal_distribution<double> jitter(0.0, 0.3);
    for (Matrix* m : bundle.parameters()) {
      for (Index i = 0; i < m->size(); ++i) m->data()[i] += jitter(rng);
    }
    for (int v = 0; v < V; ++v) {
      const Index b = pick(4, 8);
      x.push_back(testing::random_matrix(rng, b, specs[static_cast<std::size_t>(v)].input_dim));
      std::vector<std::vector<int>> lv;
      for (int k : levels) lv.push_back(testing::random_labels(rng, static_cast<std::size_t>(b), k));
      view_levels.push_back(lv);
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
      losses::CommonLevelBatch lb;
      for (int v = 0; v < V; ++v) {
        const auto& labels = view_levels[static_cast<std::size_t>(v)][l];
        for (std::size_t i = 0; i < labels.size(); ++i) lb.anchor_common_labels.push_back(pick(0, levels[l] - 1));
        lb.view_labels.push_back(labels);
        std::vector<int> perm(static_cast<std::size_t>(levels[l]));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        lb.matchings.push_back({perm});
      }
      common.push_back(std::move(lb));
    }
    centroids = testing::random_matrix(rng, K, D);
    reliable.resize(static_cast<std::size_t>(V));
    for (int v = 0; v < V; ++v) {
      for (int r = 0; r < V; ++r) {
        if (r != v && pick(0, 1) == 1) reliable[static_cast<std::size_t>(v)].push_back(r);
      }
    }
    if (reliable[0].empty()) reliable[0].push_back(1);
    weights.lambda1 = 0.5;
    weights.lambda2 = 0.7;
    weights.lambda3 = 0.9;
    weights.lambda4 = 1.3;
    Graph g;
    const auto terms = build(g);
    for (std::size_t v = 0; v < terms.second.size(); ++v) targets.push_back(terms.second[v].value());
  }

  // (term set, per-view distributions); the KL targets are taken from
  // `targets` once they exist so that finite differences see them frozen.
  std::pair<losses::LossTerms, std::vector<Var>> build(Graph& g) {
    auto ae = losses::recon_orth_loss(g, bundle, x, weights.lambda1);
    std::vector<std::vector<losses::AnchorPairs>> pairs;
    for (std::size_t v = 0; v < x.size(); ++v) {
      std::vector<std::size_t> idx(static_cast<std::size_t>(x[v].rows()));
      std::iota(idx.begin(), idx.end(), 0);
      pairs.push_back(losses::build_inner_pairs(view_levels[v], idx));
    }
    Var inner = losses::inner_contrastive_loss(ae.latents, pairs, weights.temperature);
    Var co = losses::common_contrastive_loss(ae.latents, common, weights.temperature);
    std::vector<Var> dist;
    for (const Var& z : ae.latents) dist.push_back(losses::view_distribution(z, centroids, weights.temperature));
    Var cross = targets.empty() ? losses::cross_view_kl(dist, reliable) : losses::cross_view_kl(dist, reliable, targets);
    return {{ae.loss, inner, co, cross}, dist};
  }

  double total() {
    Graph g;
    return losses::total_loss(build(g).first, weights).scalar();
  }

  // Largest relative error between backward() and central differences over
  // every parameter, at step h.
  double max_fd_error(double h = 1e-5, double floor = 1e-4) {
    Graph g;
    auto grads = diffnet::backward(bundle, g, losses::total_loss(build(g).first, weights));
    double worst = 0.0;
    auto params = bundle.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      for (Index i = 0; i < params[p]->size(); ++i) {
        double& w = params[p]->data()[i];
        const double orig = w;
        w = orig + h;
        const double up = total();
        w = orig - h;
        const double down = total();
        w = orig;
        const double num = (up - down) / (2 * h);
        const double ana = grads.grads[p].data()[i];
        worst = std::max(worst, std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor}));
      }
    }
    return worst;
  }
};

}  // namespace fixtures
