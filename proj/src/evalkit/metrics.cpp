#include <cmath>
#include <map>

#include "umc/clusterkit/clusterkit.hpp"
#include "umc/error.hpp"
#include "umc/evalkit/evalkit.hpp"

namespace umc::evalkit {

namespace {

struct Contingency {
  std::vector<std::vector<double>> counts;  // pred cluster x true class
  std::vector<double> pred_sizes;
  std::vector<double> true_sizes;
  double n = 0.0;
};

std::vector<int> densify(const std::vector<int>& labels, std::size_t& distinct) {
  std::map<int, int> ids;
  for (int l : labels) {
    if (l < 0) throw DataError("labels must be non-negative");
    ids.emplace(l, 0);
  }
  int next = 0;
  for (auto& [_, v] : ids) v = next++;
  distinct = ids.size();
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids[l]);
  return out;
}

Contingency contingency(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) {
    throw DataError("label length mismatch: " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()));
  }
  if (pred.empty()) throw DataError("empty labelings");
  std::size_t kp = 0, kt = 0;
  const auto p = densify(pred, kp);
  const auto t = densify(truth, kt);
  Contingency c;
  c.counts.assign(kp, std::vector<double>(kt, 0.0));
  c.pred_sizes.assign(kp, 0.0);
  c.true_sizes.assign(kt, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.counts[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(t[i])] += 1.0;
    c.pred_sizes[static_cast<std::size_t>(p[i])] += 1.0;
    c.true_sizes[static_cast<std::size_t>(t[i])] += 1.0;
  }
  c.n = static_cast<double>(p.size());
  return c;
}

double entropy(const std::vector<double>& sizes, double n) {
  double h = 0.0;
  for (double s : sizes) {
    if (s > 0.0) h -= (s / n) * std::log(s / n);
  }
  return h;
}

double pairs(double s) { return s * (s - 1.0) / 2.0; }

}  // namespace

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Contingency c = contingency(pred, truth);
  const double hp = entropy(c.pred_sizes, c.n);
  const double ht = entropy(c.true_sizes, c.n);
  if (hp + ht == 0.0) return 1.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < c.counts.size(); ++i) {
    for (std::size_t j = 0; j < c.counts[i].size(); ++j) {
      const double nij = c.counts[i][j];
      if (nij > 0.0) mi += (nij / c.n) * std::log(c.n * nij / (c.pred_sizes[i] * c.true_sizes[j]));
    }
  }
  return std::clamp(mi / ((hp + ht) / 2.0), 0.0, 1.0);
}

double acc(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Contingency c = contingency(pred, truth);
  const std::size_t k = std::max(c.pred_sizes.size(), c.true_sizes.size());
  clusterkit::Matrix w = clusterkit::Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < c.counts.size(); ++i) {
    for (std::size_t j = 0; j < c.counts[i].size(); ++j) {
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.counts[i][j];
    }
  }
  return clusterkit::hungarian_max(w).total(w) / c.n;
}

double pairwise_f1(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Contingency c = contingency(pred, truth);
  double tp = 0.0, pred_pairs = 0.0, true_pairs = 0.0;
  for (const auto& row : c.counts) {
    for (double nij : row) tp += pairs(nij);
  }
  for (double s : c.pred_sizes) pred_pairs += pairs(s);
  for (double s : c.true_sizes) true_pairs += pairs(s);
  if (pred_pairs == 0.0 || true_pairs == 0.0) return 0.0;
  const double precision = tp / pred_pairs;
  const double recall = tp / true_pairs;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace umc::evalkit
