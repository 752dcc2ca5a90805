#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace relaycheck {

inline constexpr const char* kVersion = "0.1.0";

// SplitMix64 mixing step. Used for seed derivation only; the sample streams
// themselves run on mt19937_64.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Trial-seed scheme: chain master -> cell -> trial through splitmix64, so any
// (cell, trial) pair is reproducible without running the cells before it.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t cell_index,
                                    std::uint64_t trial_index) noexcept {
  return splitmix64(splitmix64(splitmix64(master_seed) ^ cell_index) ^ trial_index);
}

// Number format shared by every emitted report: six significant digits.
std::string format_g6(double v);

// Empirical q-quantile: the k-th smallest value with k = ceil(q * (N + 1)),
// clamped to [1, N].
double empirical_quantile(std::vector<double> values, double q);

// Runs fn(0..count-1) across hardware threads. Writes must be index-addressed
// by the caller; scheduling order is unspecified. The first exception thrown
// by any invocation is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned thread_hint = 0) {
  if (count == 0) return;
  const unsigned hw = thread_hint ? thread_hint : std::thread::hardware_concurrency();
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      if (failed.load(std::memory_order_relaxed)) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  if (hw < 2 || count < 2) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(hw, count));
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace relaycheck
