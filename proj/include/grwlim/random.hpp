#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <type_traits>
#include <thread>
#include <vector>

namespace grwlim {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Key of a family of random streams: the master seed plus a tag naming the
/// experiment that consumes them. Stream `index` of a key is a pure function
/// of (seed, tag, index), so Monte Carlo results never depend on scheduling.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t tag = 0;

  StreamKey child(std::uint64_t subtag) const noexcept {
    return {seed, splitmix64(tag ^ splitmix64(subtag + 0x632be59bd9b4e019ULL))};
  }
};

/// xoshiro256** generator, counter-seeded. Satisfies UniformRandomBitGenerator.
class RandomStream {
public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) noexcept { reseed(seed); }
  RandomStream(const StreamKey& key, std::uint64_t index) noexcept
      : RandomStream(splitmix64(splitmix64(key.seed ^ 0xd1b54a32d192ed03ULL) ^ key.tag) + index) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& word : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      word = splitmix64(x);
    }
  }

  std::uint64_t s_[4]{};
};

/// Uniform real in [0,1) from any bit generator; exact for RandomStream.
template <typename Rng>
double uniform01(Rng& rng) {
  if constexpr (std::is_same_v<Rng, RandomStream>) {
    return rng.uniform();
  } else {
    return std::generate_canonical<double, 53>(rng);
  }
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

namespace detail {

struct ChunkSums {
  double sum = 0.0;
  double sum_sq = 0.0;
};

inline unsigned effective_workers(unsigned workers, std::size_t chunks) {
  unsigned w = workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers;
  if (w > chunks) w = static_cast<unsigned>(std::max<std::size_t>(1, chunks));
  return w;
}

}  // namespace detail

inline constexpr std::size_t kMonteCarloChunk = 4096;

/// Runs `trial(stream, index) -> double` for index in [0, trials), each trial
/// on its own stream. Partial sums are formed per fixed-size chunk and folded
/// in chunk order, so the estimate is bit-identical for any worker count.
template <typename Trial>
MeanEstimate monte_carlo_mean(const StreamKey& key, std::size_t trials, unsigned workers, Trial&& trial) {
  MeanEstimate out;
  out.trials = trials;
  if (trials == 0) return out;

  const std::size_t chunks = (trials + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<detail::ChunkSums> partial(chunks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
      const std::size_t begin = c * kMonteCarloChunk;
      const std::size_t end = std::min(trials, begin + kMonteCarloChunk);
      detail::ChunkSums s;
      for (std::size_t i = begin; i < end; ++i) {
        RandomStream stream(key, i);
        const double v = trial(stream, i);
        s.sum += v;
        s.sum_sq += v * v;
      }
      partial[c] = s;
    }
  };

  const unsigned w = detail::effective_workers(workers, chunks);
  if (w <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned t = 0; t < w; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  double sum = 0.0, sum_sq = 0.0;
  for (const auto& s : partial) {
    sum += s.sum;
    sum_sq += s.sum_sq;
  }
  const double n = static_cast<double>(trials);
  out.mean = sum / n;
  if (trials > 1) {
    const double var = std::max(0.0, (sum_sq - n * out.mean * out.mean) / (n - 1.0));
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

/// Runs `job(index)` for index in [0, count) on up to `workers` threads.
/// Results must be written to index-addressed storage by the caller.
template <typename Job>
void parallel_for(std::size_t count, unsigned workers, Job&& job) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) job(i);
  };
  const unsigned w = detail::effective_workers(workers, count);
  if (w <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (unsigned t = 0; t < w; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace grwlim
