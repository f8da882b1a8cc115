// Copyright 2026 The himo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace himo {

inline void warn(const std::string& msg) {
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  std::cerr << "[himo] warning: " << msg << "\n";
}

// ---------------------------------------------------------------------------
// Thread budget. HIMO_THREADS caps parallelism process-wide; set_max_threads
// overrides it (0 restores the environment/hardware default).
// ---------------------------------------------------------------------------

namespace detail {
inline std::atomic<int>& thread_override() {
  static std::atomic<int> value{0};
  return value;
}
}  // namespace detail

inline void set_max_threads(int n) { detail::thread_override().store(n); }

inline int max_threads() {
  int forced = detail::thread_override().load();
  if (forced > 0) return forced;
  if (const char* env = std::getenv("HIMO_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(begin, end) over disjoint chunks of [0, n). Chunks are contiguous
/// and assigned in order, so callers that write into per-chunk slots get a
/// deterministic result regardless of the thread count.
inline void parallel_for(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  int threads = max_threads();
  if (threads <= 1 || n < 2048) {
    fn(0, n);
    return;
  }
  std::size_t n_chunks = std::min<std::size_t>(threads, n);
  std::size_t chunk = (n + n_chunks - 1) / n_chunks;
  std::vector<std::thread> pool;
  pool.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    std::size_t begin = c * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 streams keyed by counters give bit-identical
// output independent of platform, thread count and call order.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  std::uint64_t s = seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // decorrelate trivially different seeds
    splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller (no stdlib distribution, so the stream is
  /// identical on every platform).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// FNV-1a, used to fingerprint configurations in run manifests.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace himo
