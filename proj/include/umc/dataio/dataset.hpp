#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "umc/diffnet/matrix.hpp"

namespace umc::dataio {

using diffnet::Matrix;

struct View {
  int id = 0;
  Matrix features;                  // n^v x d^v
  std::vector<std::int64_t> ids;    // global sample ids, one per row
  std::vector<int> labels;          // evaluation only
};

// Unpaired multi-view data: every global sample id lives in exactly one view.
struct MultiViewDataset {
  std::string name;
  int num_clusters = 0;
  std::vector<View> views;

  std::size_t view_count() const { return views.size(); }
  std::size_t total_samples() const;
  /// Checks shapes, label range and the one-view-per-id condition.
  void validate() const;
  /// Labels of all views concatenated in view order.
  std::vector<int> stacked_labels() const;
};

// Fully observed data: every sample has a row in every view, rows aligned.
struct PairedDataset {
  std::string name;
  int num_clusters = 0;
  std::vector<int> view_ids;
  std::vector<Matrix> views;  // each N x d^v
  std::vector<std::int64_t> ids;
  std::vector<int> labels;

  std::size_t sample_count() const { return ids.size(); }
  void validate() const;
};

}  // namespace umc::dataio
