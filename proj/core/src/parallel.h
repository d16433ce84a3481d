#ifndef DAIN_SRC_PARALLEL_H_
#define DAIN_SRC_PARALLEL_H_

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace dain::internal {

// Runs body(begin, end) over [0, count) split into contiguous chunks, one
// per worker. Bodies must write to disjoint outputs.
template <class Body>
void parallel_chunks(std::size_t count, int threads, Body body) {
  const std::size_t workers =
      std::clamp<std::size_t>(threads > 0 ? static_cast<std::size_t>(threads) : 1, 1,
                              std::max<std::size_t>(count, 1));
  if (workers == 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([=] { body(begin, end); });
  }
}

}  // namespace dain::internal

#endif  // DAIN_SRC_PARALLEL_H_
