#include <algorithm>
#include <cmath>
#include <limits>

#include "umc/clusterkit/clusterkit.hpp"
#include "umc/error.hpp"

namespace umc::clusterkit {

Matrix MatchMatrix::dense() const {
  const int k = size();
  Matrix m = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) m(i, row_to_col[static_cast<std::size_t>(i)]) = 1.0;
  return m;
}

double MatchMatrix::total(const Matrix& weights) const {
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += weights(i, row_to_col[static_cast<std::size_t>(i)]);
  return s;
}

std::vector<int> MatchMatrix::inverse() const {
  std::vector<int> inv(row_to_col.size(), -1);
  for (std::size_t i = 0; i < row_to_col.size(); ++i) inv[static_cast<std::size_t>(row_to_col[i])] = static_cast<int>(i);
  return inv;
}

namespace {

// Kuhn augmenting path over the admissible-edge graph restricted to free rows/cols.
bool augment(int row, const std::vector<std::vector<int>>& adj, std::vector<int>& col_owner, std::vector<char>& seen,
             const std::vector<char>& col_blocked) {
  for (int c : adj[static_cast<std::size_t>(row)]) {
    const auto uc = static_cast<std::size_t>(c);
    if (col_blocked[uc] || seen[uc]) continue;
    seen[uc] = 1;
    if (col_owner[uc] < 0 || augment(col_owner[uc], adj, col_owner, seen, col_blocked)) {
      col_owner[uc] = row;
      return true;
    }
  }
  return false;
}

// True when rows [from, k) can be perfectly matched into unblocked columns.
bool completable(int from, int k, const std::vector<std::vector<int>>& adj, const std::vector<char>& col_blocked) {
  std::vector<int> col_owner(static_cast<std::size_t>(k), -1);
  for (int r = from; r < k; ++r) {
    std::vector<char> seen(static_cast<std::size_t>(k), 0);
    if (!augment(r, adj, col_owner, seen, col_blocked)) return false;
  }
  return true;
}

}  // namespace

MatchMatrix hungarian_max(const Matrix& weights) {
  if (weights.rows() != weights.cols()) {
    throw ShapeError("hungarian_max: matrix must be square, got " + std::to_string(weights.rows()) + "x" +
                     std::to_string(weights.cols()));
  }
  if (!weights.allFinite()) throw NumericError("hungarian_max: non-finite weight");
  const int n = static_cast<int>(weights.rows());
  MatchMatrix out;
  if (n == 0) return out;

  // Shortest augmenting path Hungarian method on cost = -weight (1-indexed, with potentials).
  const double inf = std::numeric_limits<double>::infinity();
  auto cost = [&](int i, int j) { return -weights(i - 1, j - 1); };
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[uj];
        if (cur < minv[uj]) {
          minv[uj] = cur;
          way[uj] = j0;
        }
        if (minv[uj] < delta) {
          delta = minv[uj];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) {
          u[static_cast<std::size_t>(p[uj])] += delta;
          v[uj] -= delta;
        } else {
          minv[uj] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> found(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) found[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;

  // Every optimal matching uses only zero-reduced-cost edges of an optimal
  // dual, and every perfect matching on those edges is optimal. The
  // lexicographically smallest one is built greedily row by row.
  const double scale = 1.0 + weights.cwiseAbs().maxCoeff();
  const double tol = 64.0 * n * std::numeric_limits<double>::epsilon() * scale;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double reduced = cost(i + 1, j + 1) - u[static_cast<std::size_t>(i) + 1] - v[static_cast<std::size_t>(j) + 1];
      if (std::abs(reduced) <= tol || found[static_cast<std::size_t>(i)] == j) adj[static_cast<std::size_t>(i)].push_back(j);
    }
  }

  out.row_to_col.assign(static_cast<std::size_t>(n), -1);
  std::vector<char> blocked(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    for (int j : adj[static_cast<std::size_t>(i)]) {
      const auto uj = static_cast<std::size_t>(j);
      if (blocked[uj]) continue;
      blocked[uj] = 1;
      if (completable(i + 1, n, adj, blocked)) {
        out.row_to_col[static_cast<std::size_t>(i)] = j;
        break;
      }
      blocked[uj] = 0;
    }
    if (out.row_to_col[static_cast<std::size_t>(i)] < 0) throw NumericError("hungarian_max: no tight completion");
  }
  return out;
}

}  // namespace umc::clusterkit
