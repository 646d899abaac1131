#include <algorithm>
#include <limits>
#include <random>

#include "umc/clusterkit/clusterkit.hpp"
#include "umc/error.hpp"
#include "umc/seed.hpp"

namespace umc::clusterkit {

namespace {

double sqdist(const Matrix& a, Index i, const Matrix& b, Index j) { return (a.row(i) - b.row(j)).squaredNorm(); }

Matrix plus_plus_init(const Matrix& z, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index n = z.rows();
  Matrix c(k, z.cols());
  std::uniform_int_distribution<Index> first(0, n - 1);
  c.row(0) = z.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = sqdist(z, i, c, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int m = 1; m < k; ++m) {
    double total = 0.0;
    for (double d : d2) total += d;
    Index pick = n - 1;
    if (total > 0.0) {
      double r = unit(rng) * total;
      for (Index i = 0; i < n; ++i) {
        r -= d2[static_cast<std::size_t>(i)];
        if (r < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::uniform_int_distribution<Index>(0, n - 1)(rng);
    }
    c.row(m) = z.row(pick);
    for (Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sqdist(z, i, c, m));
    }
  }
  return c;
}

// Nearest centroid per row (lowest index on ties); returns inertia.
double assign(const Matrix& z, const Matrix& c, std::vector<int>& labels, std::vector<double>& cost) {
  double inertia = 0.0;
  for (Index i = 0; i < z.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < c.rows(); ++j) {
      const double d = sqdist(z, i, c, j);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    cost[static_cast<std::size_t>(i)] = best_d;
    inertia += best_d;
  }
  return inertia;
}

// Moves the farthest point of a multi-point cluster into each empty cluster.
// Returns the adjusted inertia.
double repair_empty(const Matrix& z, Matrix& c, std::vector<int>& labels, std::vector<double>& cost, double inertia) {
  const int k = static_cast<int>(c.rows());
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (int e = 0; e < k; ++e) {
    if (counts[static_cast<std::size_t>(e)] != 0) continue;
    Index far = -1;
    double far_d = -1.0;
    for (Index i = 0; i < z.rows(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (counts[static_cast<std::size_t>(labels[ui])] > 1 && cost[ui] > far_d) {
        far_d = cost[ui];
        far = i;
      }
    }
    if (far < 0) break;
    const auto uf = static_cast<std::size_t>(far);
    --counts[static_cast<std::size_t>(labels[uf])];
    labels[uf] = e;
    ++counts[static_cast<std::size_t>(e)];
    inertia -= cost[uf];
    cost[uf] = 0.0;
    c.row(e) = z.row(far);
  }
  return inertia;
}

KMeansResult lloyd(const Matrix& z, Matrix c, const KMeansOptions& opts) {
  const Index n = z.rows();
  const int k = static_cast<int>(c.rows());
  KMeansResult res;
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::vector<double> cost(static_cast<std::size_t>(n), 0.0);
  for (int it = 0; it < opts.max_iter; ++it) {
    double inertia = assign(z, c, labels, cost);
    inertia = repair_empty(z, c, labels, cost, inertia);
    res.inertia_trace.push_back(inertia);

    Matrix next = Matrix::Zero(k, z.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      next.row(labels[static_cast<std::size_t>(i)]) += z.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    double shift = 0.0;
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        next.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);
      } else {
        next.row(j) = c.row(j);
      }
      shift = std::max(shift, (next.row(j) - c.row(j)).norm());
    }
    c = std::move(next);
    res.iterations = it + 1;
    if (shift < opts.tol) break;
  }
  double inertia = assign(z, c, labels, cost);
  inertia = repair_empty(z, c, labels, cost, inertia);
  res.inertia_trace.push_back(inertia);
  res.assignment.labels = std::move(labels);
  res.assignment.k = k;
  res.assignment.inertia = std::max(0.0, inertia);
  res.centroids = std::move(c);
  return res;
}

}  // namespace

KMeansResult kmeans(const Matrix& z, int k, std::uint64_t seed, const KMeansOptions& opts) {
  if (k < 1) throw DataError("kmeans: k must be >= 1");
  if (z.rows() < k) {
    throw DataError("kmeans: " + std::to_string(z.rows()) + " rows cannot form " + std::to_string(k) + " clusters");
  }
  return lloyd(z, plus_plus_init(z, k, seed), opts);
}

KMeansResult kmeans_from(const Matrix& z, const Matrix& init, const KMeansOptions& opts) {
  if (init.rows() < 1 || init.cols() != z.cols()) throw ShapeError("kmeans: initial centroids have the wrong shape");
  if (z.rows() < init.rows()) throw DataError("kmeans: fewer rows than clusters");
  return lloyd(z, init, opts);
}

KMeansResult kmeans_best_of(const Matrix& z, int k, std::uint64_t seed, int restarts, const KMeansOptions& opts) {
  KMeansResult best;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    KMeansResult cur = kmeans(z, k, derive_seed(seed, {static_cast<std::uint64_t>(r)}), opts);
    if (r == 0 || cur.assignment.inertia < best.assignment.inertia) best = std::move(cur);
  }
  return best;
}

}  // namespace umc::clusterkit
