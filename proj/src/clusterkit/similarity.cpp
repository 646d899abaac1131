#include <algorithm>
#include <cmath>
#include <limits>

#include "umc/clusterkit/clusterkit.hpp"
#include "umc/error.hpp"

namespace umc::clusterkit {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Matrix cosine_matrix(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("cosine_matrix: column mismatch");
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      out(i, j) = cosine(std::span<const double>(a.row(i).data(), static_cast<std::size_t>(a.cols())),
                         std::span<const double>(b.row(j).data(), static_cast<std::size_t>(b.cols())));
    }
  }
  return out;
}

std::vector<double> silhouette_samples(const Matrix& z, const Assignment& a) {
  const Index n = z.rows();
  if (static_cast<Index>(a.labels.size()) != n) throw ShapeError("silhouette: label count differs from rows");
  if (a.k < 2) throw DataError("silhouette needs k >= 2");
  const auto k = static_cast<std::size_t>(a.k);
  std::vector<Index> counts(k, 0);
  for (int l : a.labels) {
    if (l < 0 || l >= a.k) throw DataError("silhouette: label out of range");
    ++counts[static_cast<std::size_t>(l)];
  }

  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  std::vector<double> sums(k);
  for (Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(a.labels[static_cast<std::size_t>(j)])] += (z.row(i) - z.row(j)).norm();
    }
    const auto own = static_cast<std::size_t>(a.labels[static_cast<std::size_t>(i)]);
    if (counts[own] <= 1) continue;
    const double intra = sums[own] / static_cast<double>(counts[own] - 1);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      nearest = std::min(nearest, sums[c] / static_cast<double>(counts[c]));
    }
    if (!std::isfinite(nearest)) continue;
    const double denom = std::max(intra, nearest);
    out[static_cast<std::size_t>(i)] = denom > 0.0 ? (nearest - intra) / denom : 0.0;
  }
  return out;
}

double silhouette_view(const Matrix& z, const Assignment& a) {
  const std::vector<double> s = silhouette_samples(z, a);
  if (s.empty()) return 0.0;
  double total = 0.0;
  for (double v : s) total += v;
  return total / static_cast<double>(s.size());
}

}  // namespace umc::clusterkit
