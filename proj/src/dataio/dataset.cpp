#include "umc/dataio/dataset.hpp"

#include <unordered_set>

#include "umc/error.hpp"

namespace umc::dataio {

std::size_t MultiViewDataset::total_samples() const {
  std::size_t n = 0;
  for (const View& v : views) n += v.ids.size();
  return n;
}

std::vector<int> MultiViewDataset::stacked_labels() const {
  std::vector<int> out;
  out.reserve(total_samples());
  for (const View& v : views) out.insert(out.end(), v.labels.begin(), v.labels.end());
  return out;
}

void MultiViewDataset::validate() const {
  if (views.empty()) throw DataError("dataset '" + name + "' has no views");
  if (num_clusters < 1) throw DataError("dataset '" + name + "' has K < 1");
  std::unordered_set<std::int64_t> seen;
  for (const View& v : views) {
    const auto n = static_cast<std::size_t>(v.features.rows());
    if (v.ids.size() != n || v.labels.size() != n) {
      throw DataError("view " + std::to_string(v.id) + ": ids/labels/rows disagree");
    }
    if (n == 0) throw DataError("view " + std::to_string(v.id) + " is empty");
    for (std::size_t i = 0; i < n; ++i) {
      if (v.labels[i] < 0 || v.labels[i] >= num_clusters) {
        throw DataError("label " + std::to_string(v.labels[i]) + " of sample " + std::to_string(v.ids[i]) +
                        " out of range [0," + std::to_string(num_clusters) + ")");
      }
      if (!seen.insert(v.ids[i]).second) {
        throw DataError("sample id " + std::to_string(v.ids[i]) +
                        " appears in more than one view (violates unpaired condition)");
      }
    }
  }
}

void PairedDataset::validate() const {
  if (views.empty()) throw DataError("paired dataset '" + name + "' has no views");
  if (labels.size() != ids.size()) throw DataError("paired dataset: label count differs from id count");
  for (const Matrix& m : views) {
    if (static_cast<std::size_t>(m.rows()) != ids.size()) throw DataError("paired dataset: view row count mismatch");
  }
  std::unordered_set<std::int64_t> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_clusters) throw DataError("paired dataset: label out of range");
    if (!seen.insert(ids[i]).second) throw DataError("paired dataset: duplicate id " + std::to_string(ids[i]));
  }
}

}  // namespace umc::dataio
