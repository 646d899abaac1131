#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "umc/clusterkit/clusterkit.hpp"
#include "umc/dataio/dataset.hpp"
#include "umc/diffnet/autoencoder.hpp"
#include "umc/diffnet/optimizer.hpp"
#include "umc/evalkit/evalkit.hpp"
#include "umc/losses/losses.hpp"

namespace umc::trainer {

using diffnet::Index;
using diffnet::Matrix;
using diffnet::Var;

struct Seeds {
  std::uint64_t init = 0;     // network weights
  std::uint64_t shuffle = 0;  // batch order
  std::uint64_t kmeans = 0;   // every K-means start

  /// Three independent streams derived from one base seed.
  static Seeds from(std::uint64_t base);
  bool operator==(const Seeds&) const = default;
};

struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 128;
  losses::LossWeights weights;
  double reliability_start = 1.5;
  double reliability_decay = 0.99;
  double reliability_floor = 1.0;
  Seeds seeds = Seeds::from(0);
  std::vector<Index> hidden_dims{1024, 1024, 1024};
  Index latent_dim = 128;
  bool batchnorm = true;
  diffnet::NormConfig norm;
  diffnet::AdamConfig adam;
  /// Level state is recomputed at the start of every `refresh_every`-th epoch.
  int refresh_every = 1;
  clusterkit::KMeansOptions kmeans;
  int final_restarts = 10;

  void validate() const;
  std::vector<diffnet::MlpSpec> encoder_specs(const dataio::MultiViewDataset& data) const;
  /// Reliability coefficient in force during 1-based epoch t.
  double reliability_coeff(int epoch) const;
};

/// Hash of everything that influences the trajectory: the config and the
/// per-view input dimensions. Run-control settings are not included.
std::uint64_t config_hash(const TrainConfig& cfg, const dataio::MultiViewDataset& data);
std::string hash_hex(std::uint64_t h);

struct Clustering {
  clusterkit::Assignment assignment;
  Matrix centroids;
};

// Clustering state refreshed from full-view representations.
struct LevelState {
  std::vector<int> levels;                                 // active cluster counts
  std::vector<std::vector<Clustering>> views;              // [view][level]
  std::vector<Clustering> common;                          // [level], on Z* = [Z^1; ...; Z^V]
  std::vector<std::vector<clusterkit::MatchMatrix>> matchings;  // [view][level]
  std::vector<double> silhouettes;                         // per view, K clusters
  Matrix common_centroids;                                 // K x D on Z*
};

/// Previous centroids keyed by (view, k); view == V denotes Z*.
using WarmStarts = std::map<std::pair<int, int>, Matrix>;

/// Eval-mode latents for every view.
std::vector<Matrix> encode_all(diffnet::AutoencoderBundle& bundle, const dataio::MultiViewDataset& data);

/// Clusters every view and Z* at each active level (plus K, which the
/// reliability and distribution terms always need), matches clusters to Z*,
/// and scores views by silhouette at K. Centroids start from `warm` when
/// present and from k-means++ seeded by (seed, epoch, view, k) otherwise;
/// `warm` is updated with the new centroids.
LevelState refresh_level_state(const std::vector<Matrix>& latents, const std::vector<int>& active, int num_clusters,
                               std::uint64_t seed, int epoch, WarmStarts& warm,
                               const clusterkit::KMeansOptions& opts = {});

struct EpochRecord {
  int epoch = 0;
  int active_levels = 0;
  losses::LossValues loss;  // means over the epoch's steps
  double reliability_coeff = 0.0;
  std::vector<double> silhouettes;
};

struct RunControl {
  std::optional<std::filesystem::path> checkpoint_path;
  int checkpoint_every = 0;  // 0: only at the end of training
  std::optional<std::filesystem::path> resume_from;
  int stop_after_epoch = 0;  // 0: run to completion
  std::function<void(const EpochRecord&)> on_epoch;
};

struct RunArtifacts {
  std::optional<std::filesystem::path> checkpoint_path;
  std::vector<EpochRecord> curve;
  bool completed = false;  // false when stopped early
  std::vector<Matrix> latents;
  clusterkit::Assignment final_assignment;  // over stacked samples, view order
  evalkit::MetricsReport metrics;
};

/// Full training run. Throws NumericError with epoch/step context when the
/// loss or a gradient becomes non-finite, ConfigError/DataError on bad input.
RunArtifacts train(const TrainConfig& cfg, const dataio::MultiViewDataset& data, const RunControl& control = {});

/// Final step: eval-mode latents for all samples, best-of-restarts K-means on
/// their concatenation, and the metrics report.
void finalize(const TrainConfig& cfg, const dataio::MultiViewDataset& data, diffnet::AutoencoderBundle& bundle,
              RunArtifacts& art);
/// Runs the final step from a completed checkpoint of the same config.
RunArtifacts evaluate(const TrainConfig& cfg, const dataio::MultiViewDataset& data,
                      const std::filesystem::path& checkpoint);

/// Comma-separated loss curve: epoch, l_AE, l_in, l_co, l_cr, total,
/// reliability_coeff, then one silhouette column per view.
std::string loss_curve_csv(const std::vector<EpochRecord>& curve, const dataio::MultiViewDataset& data);
/// Progress line: "epoch=<t> total=<x> l_AE=... levels=<n> coeff=<c>".
std::string format_epoch(const EpochRecord& r);

}  // namespace umc::trainer
