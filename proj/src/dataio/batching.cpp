#include "umc/dataio/batching.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "umc/error.hpp"
#include "umc/seed.hpp"

namespace umc::dataio {

std::vector<std::size_t> BatchPlan::order(std::size_t n, std::uint64_t epoch_index, std::size_t view,
                                          std::size_t pass) const {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, {epoch_index, view, pass}));
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

std::vector<std::vector<std::vector<std::size_t>>> BatchPlan::epoch(const std::vector<std::size_t>& view_sizes,
                                                                    std::uint64_t epoch_index) const {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  std::size_t steps = 0;
  for (std::size_t n : view_sizes) {
    if (n == 0) throw DataError("cannot batch an empty view");
    steps = std::max(steps, (n + batch_size - 1) / batch_size);
  }
  std::vector<std::vector<std::vector<std::size_t>>> plan(steps, std::vector<std::vector<std::size_t>>(view_sizes.size()));
  for (std::size_t v = 0; v < view_sizes.size(); ++v) {
    const std::size_t n = view_sizes[v];
    const std::size_t per_pass = (n + batch_size - 1) / batch_size;
    std::vector<std::size_t> current;
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t pass = s / per_pass;
      const std::size_t within = s % per_pass;
      if (within == 0) current = order(n, epoch_index, v, pass);
      const std::size_t begin = within * batch_size;
      const std::size_t end = std::min(n, begin + batch_size);
      plan[s][v].assign(current.begin() + static_cast<std::ptrdiff_t>(begin),
                        current.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return plan;
}

}  // namespace umc::dataio
