#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rlab {

// Worker count used by parallel_for; 0 means hardware concurrency.
void set_jobs(int jobs);
int jobs();

// SplitMix64 mixing of (seed, stream) into an independent substream seed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Runs body(b) for b in [0, blocks). Block boundaries are chosen by the
// caller, so results that are stored per block and merged in block order do
// not depend on the worker count.
template <class F>
void parallel_for(std::size_t blocks, F&& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs()), blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  auto run = [&]() {
    for (;;) {
      std::size_t b;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= blocks || error) return;
        b = next++;
      }
      try {
        body(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rlab
