#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace oamspdc {

struct ParallelOptions {
  /// Worker count; 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
  /// With deterministic reduction the result is bit-identical for every
  /// worker count: items are grouped into fixed blocks of `block_size`, each
  /// block is accumulated serially in index order and the block partials are
  /// combined in block order. The non-deterministic mode combines worker
  /// partials in completion order and keeps one partial per worker.
  bool deterministic = true;
  std::size_t block_size = 32;

  unsigned resolved_threads() const noexcept {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return threads == 0 ? hw : threads;
  }
};

namespace detail {

// Runs body(worker_index) on `workers` threads (the caller's thread is worker 0)
// and rethrows the first exception raised by any of them.
template <class Body>
void run_workers(unsigned workers, Body&& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto guarded = [&](unsigned w) {
    try {
      body(w);
    } catch (...) {
      std::scoped_lock lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers > 0 ? workers - 1 : 0);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(guarded, w);
  guarded(0);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Associative reduction over independent work items.
///
/// `make_worker()` is called once per worker and must return a callable
/// `void(T& partial, std::size_t item)` that may own scratch state.
/// `combine(T& into, const T& from)` must be associative and commutative.
/// An empty item range returns `identity`.
template <class T, class MakeWorker, class Combine>
T parallel_reduce(std::size_t n_items, const T& identity, MakeWorker&& make_worker, Combine&& combine,
                  const ParallelOptions& opts = {}) {
  if (n_items == 0) return identity;
  const std::size_t block = std::max<std::size_t>(1, opts.block_size);
  const std::size_t n_blocks = (n_items + block - 1) / block;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(opts.resolved_threads(), n_blocks));

  std::atomic<std::size_t> next_block{0};

  if (opts.deterministic) {
    std::vector<std::optional<T>> partials(n_blocks);
    detail::run_workers(workers, [&](unsigned) {
      auto work = make_worker();
      for (std::size_t b = next_block.fetch_add(1); b < n_blocks; b = next_block.fetch_add(1)) {
        T partial = identity;
        const std::size_t end = std::min(n_items, (b + 1) * block);
        for (std::size_t i = b * block; i < end; ++i) work(partial, i);
        partials[b].emplace(std::move(partial));
      }
    });
    T result = identity;
    for (auto& p : partials) combine(result, *p);
    return result;
  }

  T result = identity;
  std::mutex result_mutex;
  detail::run_workers(workers, [&](unsigned) {
    auto work = make_worker();
    T partial = identity;
    for (std::size_t b = next_block.fetch_add(1); b < n_blocks; b = next_block.fetch_add(1)) {
      const std::size_t end = std::min(n_items, (b + 1) * block);
      for (std::size_t i = b * block; i < end; ++i) work(partial, i);
    }
    std::scoped_lock lock(result_mutex);
    combine(result, partial);
  });
  return result;
}

/// Calls body(item) for every item; items must write to disjoint outputs.
template <class Body>
void parallel_for(std::size_t n_items, Body&& body, const ParallelOptions& opts = {}) {
  if (n_items == 0) return;
  const std::size_t block = std::max<std::size_t>(1, opts.block_size);
  const std::size_t n_blocks = (n_items + block - 1) / block;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(opts.resolved_threads(), n_blocks));
  std::atomic<std::size_t> next_block{0};
  detail::run_workers(workers, [&](unsigned) {
    for (std::size_t b = next_block.fetch_add(1); b < n_blocks; b = next_block.fetch_add(1)) {
      const std::size_t end = std::min(n_items, (b + 1) * block);
      for (std::size_t i = b * block; i < end; ++i) body(i);
    }
  });
}

}  // namespace oamspdc
