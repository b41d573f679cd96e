#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <thread>
#include <vector>

namespace stochchain::est {

/// SplitMix64 stream keyed by (seed, index). Trial i of a run always draws
/// from Substream(seed, i), so results do not depend on how trials are
/// scheduled across threads.
class Substream {
 public:
  using result_type = std::uint64_t;

  Substream(std::uint64_t seed, std::uint64_t index)
      : state_(mix(seed ^ mix(index + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(state_ += 0x9e3779b97f4a7c15ULL); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

/// Welford accumulator; merge uses the pairwise update of Chan et al.
struct RunningStats {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const RunningStats& other) {
    if (other.count == 0.0) return;
    if (count == 0.0) {
      *this = other;
      return;
    }
    const double total = count + other.count;
    const double delta = other.mean - mean;
    mean += delta * other.count / total;
    m2 += other.m2 + delta * delta * count * other.count / total;
    count = total;
  }

  double variance() const { return count > 1.0 ? m2 / (count - 1.0) : 0.0; }
  double std_error() const { return count > 1.0 ? std::sqrt(variance() / count) : 0.0; }
};

/// Worker count: STOCHCHAIN_THREADS when set, else the hardware concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("STOCHCHAIN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline constexpr std::uint64_t kBlockSize = 4096;

/// Runs trial(substream, acc) for trials [0, trials) in fixed-size blocks and
/// merges the per-block accumulators pairwise in block order. Acc needs a
/// merge(const Acc&) member; `empty` is copied to start each block. The block
/// size fixes the reduction tree, so it must not vary with the thread count.
template <typename Acc, typename Trial>
Acc run_trials(std::uint64_t trials, std::uint64_t seed, const Acc& empty, Trial&& trial,
               unsigned threads = 0, std::uint64_t block_size = kBlockSize) {
  const std::uint64_t blocks = (trials + block_size - 1) / block_size;
  std::vector<Acc> partial(blocks, empty);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t b = next++; b < blocks; b = next++) {
      const std::uint64_t end = std::min(trials, (b + 1) * block_size);
      for (std::uint64_t i = b * block_size; i < end; ++i) {
        Substream stream(seed, i);
        trial(stream, partial[b]);
      }
    }
  };
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(blocks, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (partial.empty()) return empty;
  // Pairwise reduction in a fixed tree shape.
  for (std::size_t width = 1; width < partial.size(); width *= 2) {
    for (std::size_t i = 0; i + width < partial.size(); i += 2 * width) {
      partial[i].merge(partial[i + width]);
    }
  }
  return partial.front();
}

}  // namespace stochchain::est
