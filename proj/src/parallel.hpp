#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace lego::detail {

/// Splits [0, n) into `workers` contiguous chunks and runs fn(worker, begin, end)
/// on each, the first chunk on the calling thread. The split depends only on
/// (n, workers), so per-worker partial results can be reduced deterministically.
template <class Fn>
void parallel_chunks(int workers, std::size_t n, Fn&& fn) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    fn(0, std::size_t{0}, n);
    return;
  }
  const auto bounds = [&](int w) { return n * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers); };
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        fn(w, bounds(w), bounds(w + 1));
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  try {
    fn(0, bounds(0), bounds(1));
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Pairwise reduction order over `count` partial results: calls
/// combine(dst, src) so that slot 0 ends up holding the total.
template <class Combine>
void tree_reduce(int count, Combine&& combine) {
  for (int stride = 1; stride < count; stride *= 2) {
    for (int i = 0; i + stride < count; i += 2 * stride) combine(i, i + stride);
  }
}

}  // namespace lego::detail
