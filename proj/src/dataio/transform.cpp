#include "umc/dataio/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "umc/error.hpp"
#include "umc/seed.hpp"

namespace umc::dataio {

UnpairStrategy parse_unpair_strategy(const std::string& s) {
  if (s == "stratified-round-robin") return UnpairStrategy::StratifiedRoundRobin;
  if (s == "uniform-random") return UnpairStrategy::UniformRandom;
  throw ConfigError("unknown unpair strategy '" + s + "'");
}

std::string to_string(UnpairStrategy s) {
  return s == UnpairStrategy::StratifiedRoundRobin ? "stratified-round-robin" : "uniform-random";
}

MultiViewDataset unpair(const PairedDataset& paired, const UnpairRecipe& recipe) {
  paired.validate();
  const std::size_t V = paired.views.size();
  if (V < 2) throw DataError("unpair needs at least 2 views");
  const std::size_t N = paired.sample_count();

  std::mt19937_64 rng(derive_seed(recipe.seed, {0x756e70}));
  std::vector<std::size_t> owner(N, 0);
  if (recipe.strategy == UnpairStrategy::StratifiedRoundRobin) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(paired.num_clusters));
    for (std::size_t i = 0; i < N; ++i) by_class[static_cast<std::size_t>(paired.labels[i])].push_back(i);
    std::size_t dealt = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].empty()) throw DataError("unpair: class " + std::to_string(c) + " is empty");
      std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
      for (std::size_t i : by_class[c]) owner[i] = dealt++ % V;
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, V - 1);
    for (std::size_t i = 0; i < N; ++i) owner[i] = pick(rng);
  }

  MultiViewDataset out;
  out.name = paired.name;
  out.num_clusters = paired.num_clusters;
  for (std::size_t v = 0; v < V; ++v) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < N; ++i) {
      if (owner[i] == v) rows.push_back(i);
    }
    if (rows.empty()) throw DataError("unpair left view " + std::to_string(paired.view_ids[v]) + " empty");
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return paired.ids[a] < paired.ids[b]; });
    View view;
    view.id = paired.view_ids[v];
    view.features.resize(static_cast<Eigen::Index>(rows.size()), paired.views[v].cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      view.features.row(static_cast<Eigen::Index>(r)) = paired.views[v].row(static_cast<Eigen::Index>(rows[r]));
      view.ids.push_back(paired.ids[rows[r]]);
      view.labels.push_back(paired.labels[rows[r]]);
    }
    out.views.push_back(std::move(view));
  }
  out.validate();
  return out;
}

void SyntheticSpec::validate() const {
  if (num_clusters < 1) throw ConfigError("synthetic: K must be >= 1");
  if (num_views < 1) throw ConfigError("synthetic: V must be >= 1");
  if (static_cast<int>(dims.size()) != num_views) throw ConfigError("synthetic: need one dim per view");
  for (long d : dims) {
    if (d < 1) throw ConfigError("synthetic: view dims must be >= 1");
  }
  if (samples_per_cluster < 1) throw ConfigError("synthetic: samples_per_cluster must be >= 1");
  if (!(separation > 0.0)) throw ConfigError("synthetic: separation must be > 0");
  if (!(noise_std > 0.0)) throw ConfigError("synthetic: noise_std must be > 0");
}

MultiViewDataset synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto K = static_cast<Eigen::Index>(spec.num_clusters);
  // Scaled basis vectors are pairwise `separation` apart.
  const Matrix centers = Matrix::Identity(K, K) * (spec.separation / std::sqrt(2.0));

  MultiViewDataset ds;
  ds.name = "synthetic";
  ds.num_clusters = spec.num_clusters;
  std::int64_t next_id = 0;
  for (int v = 0; v < spec.num_views; ++v) {
    const auto d = static_cast<Eigen::Index>(spec.dims[static_cast<std::size_t>(v)]);
    std::mt19937_64 map_rng(derive_seed(spec.distortion_seed, {static_cast<std::uint64_t>(v)}));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(d, K);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(map_rng);
    Matrix map;  // d x K
    if (d >= K) {
      Eigen::HouseholderQR<Matrix> qr(g);
      map = qr.householderQ() * Matrix::Identity(d, K);
    } else {
      // The centers span a (K-1)-dim affine plane orthogonal to the ones
      // vector; rotate that plane into d dimensions
      // (isometric when d = K-1, a projection below that).
      Matrix ones_first(K, K);
      ones_first.col(0).setOnes();
      ones_first.rightCols(K - 1) = Matrix::Identity(K, K).leftCols(K - 1);
      Eigen::HouseholderQR<Matrix> basis_qr(ones_first);
      const Matrix basis = Matrix(basis_qr.householderQ()).rightCols(K - 1);  // K x (K-1)
      Matrix rot(K - 1, K - 1);
      for (Eigen::Index i = 0; i < rot.size(); ++i) rot.data()[i] = gauss(map_rng);
      Eigen::HouseholderQR<Matrix> r_qr(rot);
      map = Matrix(r_qr.householderQ()).topRows(d) * basis.transpose();
    }

    std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(v), 1}));
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    const Eigen::Index n = K * spec.samples_per_cluster;
    Matrix latent(n, K);
    View view;
    view.id = v;
    for (Eigen::Index c = 0; c < K; ++c) {
      for (long s = 0; s < spec.samples_per_cluster; ++s) {
        const Eigen::Index row = c * spec.samples_per_cluster + s;
        for (Eigen::Index j = 0; j < K; ++j) latent(row, j) = centers(c, j) + noise(rng);
        view.ids.push_back(next_id++);
        view.labels.push_back(static_cast<int>(c));
      }
    }
    view.features = latent * map.transpose();
    ds.views.push_back(std::move(view));
  }
  ds.validate();
  return ds;
}

ScaleMethod parse_scale_method(const std::string& s) {
  if (s == "none") return ScaleMethod::None;
  if (s == "minmax") return ScaleMethod::MinMax;
  if (s == "zscore") return ScaleMethod::ZScore;
  throw ConfigError("unknown scaling method '" + s + "'");
}

std::string to_string(ScaleMethod m) {
  switch (m) {
    case ScaleMethod::None:
      return "none";
    case ScaleMethod::MinMax:
      return "minmax";
    case ScaleMethod::ZScore:
      return "zscore";
  }
  return "none";
}

void scale_in_place(Matrix& x, ScaleMethod method) {
  if (method == ScaleMethod::None || x.rows() == 0) return;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    auto col = x.col(j);
    if (method == ScaleMethod::MinMax) {
      const double lo = col.minCoeff();
      const double range = col.maxCoeff() - lo;
      if (range > 0.0) {
        col = (col.array() - lo) / range;
      } else {
        col.setZero();
      }
    } else {
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(x.rows()));
      if (sd > 0.0) {
        col = (col.array() - mean) / sd;
      } else {
        col.setZero();
      }
    }
  }
}

MultiViewDataset scale(MultiViewDataset dataset, ScaleMethod method) {
  for (View& v : dataset.views) scale_in_place(v.features, method);
  return dataset;
}

}  // namespace umc::dataio
