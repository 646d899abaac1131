#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "umc/dataio/dataset.hpp"

namespace umc::dataio {

enum class UnpairStrategy { StratifiedRoundRobin, UniformRandom };

struct UnpairRecipe {
  std::uint64_t seed = 0;
  UnpairStrategy strategy = UnpairStrategy::StratifiedRoundRobin;
  std::string source;
};

UnpairStrategy parse_unpair_strategy(const std::string& s);
std::string to_string(UnpairStrategy s);

/// Keeps each sample in exactly one view.
///
/// stratified-round-robin: samples are grouped by class (ascending), each
/// class is shuffled, and the class-ordered sequence is dealt to views
/// round-robin. Every view ends with floor(N/V) or ceil(N/V) samples and
/// per-class counts within one of balance.
/// uniform-random: each sample draws its view uniformly.
///
/// Throws DataError when V < 2, a class in [0, K) is empty under
/// stratification, or a view ends up empty.
MultiViewDataset unpair(const PairedDataset& paired, const UnpairRecipe& recipe);

struct SyntheticSpec {
  int num_clusters = 3;
  int num_views = 2;
  std::vector<long> dims;          // one per view
  long samples_per_cluster = 50;   // per view
  double separation = 10.0;        // distance between any two class centers
  double noise_std = 1.0;
  std::uint64_t distortion_seed = 0;

  void validate() const;
};

/// Gaussian blobs around K mutually equidistant centers in a K-dimensional
/// space, mapped into each view through its own random linear map: an
/// isometry of the centers' plane when d^v >= K-1, a projection below that.
/// Ids are assigned view by view, so the result is unpaired by construction.
MultiViewDataset synthesize(const SyntheticSpec& spec, std::uint64_t seed);

enum class ScaleMethod { None, MinMax, ZScore };

ScaleMethod parse_scale_method(const std::string& s);
std::string to_string(ScaleMethod m);

/// Per view, per feature column. minmax maps to [0,1] with constant columns
/// set to 0; zscore subtracts the mean and divides by the population std
/// (constant columns set to 0).
MultiViewDataset scale(MultiViewDataset dataset, ScaleMethod method);
void scale_in_place(Matrix& features, ScaleMethod method);

}  // namespace umc::dataio
