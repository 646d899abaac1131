#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "umc/diffnet/matrix.hpp"

namespace umc::clusterkit {

using diffnet::Index;
using diffnet::Matrix;

struct Assignment {
  std::vector<int> labels;
  int k = 0;
  double inertia = 0.0;
};

struct KMeansOptions {
  int max_iter = 100;
  double tol = 1e-6;  // on the largest centroid displacement
};

struct KMeansResult {
  Assignment assignment;
  Matrix centroids;  // k x D
  int iterations = 0;
  /// Inertia after each assignment step (for monotonicity checks).
  std::vector<double> inertia_trace;
};

/// Lloyd's algorithm from a k-means++ start drawn with `seed`. Throws
/// DataError when rows < k. Empty clusters seize the point farthest from its
/// current centroid.
KMeansResult kmeans(const Matrix& z, int k, std::uint64_t seed, const KMeansOptions& opts = {});
/// Lloyd's algorithm from the given k x D starting centroids.
KMeansResult kmeans_from(const Matrix& z, const Matrix& init, const KMeansOptions& opts = {});
/// Best of `restarts` seeded runs by inertia (first wins ties).
KMeansResult kmeans_best_of(const Matrix& z, int k, std::uint64_t seed, int restarts, const KMeansOptions& opts = {});

/// a.b / (|a| |b|); 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);
/// Row-pairwise cosine: out(i, j) = cosine(a.row(i), b.row(j)).
Matrix cosine_matrix(const Matrix& a, const Matrix& b);

/// Per-sample silhouette with Euclidean distance. Singleton clusters and
/// samples with no other non-empty cluster score 0; 0/0 is taken as 0.
std::vector<double> silhouette_samples(const Matrix& z, const Assignment& a);
/// Mean of silhouette_samples. Throws DataError when a.k < 2.
double silhouette_view(const Matrix& z, const Assignment& a);

// Permutation matrix stored as row -> column.
struct MatchMatrix {
  std::vector<int> row_to_col;

  int size() const { return static_cast<int>(row_to_col.size()); }
  int at(int i, int j) const { return row_to_col[static_cast<std::size_t>(i)] == j ? 1 : 0; }
  Matrix dense() const;
  double total(const Matrix& weights) const;
  /// Column -> row.
  std::vector<int> inverse() const;
};

/// Maximum-weight perfect matching of a square matrix (Hungarian method).
/// Among optimal matchings the lexicographically smallest row->column
/// mapping is returned. Throws ShapeError on non-square input.
MatchMatrix hungarian_max(const Matrix& weights);

}  // namespace umc::clusterkit
