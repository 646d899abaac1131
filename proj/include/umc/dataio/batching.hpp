#pragma once

#include <cstdint>
#include <vector>

namespace umc::dataio {

// Mini-batch schedule for one epoch. Each view is shuffled independently;
// one training step draws one batch from every view. The number of steps is
// set by the view needing the most batches; a view that runs out early
// starts a fresh shuffled pass. The final batch of a pass may be short.
struct BatchPlan {
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;

  /// steps[s][v] = row indices of view v used at step s.
  std::vector<std::vector<std::vector<std::size_t>>> epoch(const std::vector<std::size_t>& view_sizes,
                                                           std::uint64_t epoch_index) const;
  /// Shuffled order of view `view` for pass `pass` of epoch `epoch_index`.
  std::vector<std::size_t> order(std::size_t n, std::uint64_t epoch_index, std::size_t view, std::size_t pass) const;
};

}  // namespace umc::dataio
