#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "umc/dataio/dataset.hpp"

namespace umc::evalkit {

using diffnet::Matrix;

/// Mutual information over the arithmetic mean of the two entropies (natural
/// log). Two single-cluster partitions score 1. Throws DataError on length
/// mismatch or empty input.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);
/// Fraction of samples correct under the best one-to-one cluster->class map.
double acc(const std::vector<int>& pred, const std::vector<int>& truth);
/// F-measure over unordered same-cluster pairs; 0 when either side has no pairs.
double pairwise_f1(const std::vector<int>& pred, const std::vector<int>& truth);

struct ScopeMetrics {
  std::string scope;  // "all" or "view<id>"
  std::size_t samples = 0;
  double nmi = 0.0;  // percentages, rounded to 2 decimals
  double acc = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::vector<ScopeMetrics> scopes;  // "all" first, then one per view
  std::string config_hash;

  const ScopeMetrics& scope(const std::string& name) const;
  std::string to_json() const;
  std::string to_csv() const;
  static MetricsReport from_json(const std::string& text);
};

struct ReportOptions {
  std::uint64_t kmeans_seed = 0;
  int restarts = 10;
  int max_iter = 100;
  double tol = 1e-6;
};

/// Scores the final representations. The all-view scope uses
/// `all_view_labels` (one per stacked sample) against the stacked true
/// labels; each view scope runs K-means(K) on that view's latents alone.
MetricsReport report(const std::vector<Matrix>& latents, const std::vector<int>& all_view_labels,
                     const dataio::MultiViewDataset& dataset, const ReportOptions& opts);

/// One CSV row per sample: global id, view id, true label, predicted label,
/// then D latent coordinates in shortest round-trip form. Throws DataError
/// on write failure.
void export_embeddings(const std::filesystem::path& path, const dataio::MultiViewDataset& dataset,
                       const std::vector<Matrix>& latents, const std::vector<int>& predicted);

}  // namespace umc::evalkit
