#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <string_view>
#include <thread>
#include <vector>

namespace nlcd {

// 64-bit FNV-1a, used for config hashing and regression fingerprints.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// SplitMix64 step; also used to derive independent per-trial seeds so that
// randomized audits are reproducible regardless of thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial_index) {
    std::uint64_t s = base_seed ^ (0x9e3779b97f4a7c15ull * (trial_index + 1));
    return splitmix64(s);
}

inline unsigned max_threads() {
    if (const char* env = std::getenv("NLCD_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Static-chunked parallel loop. Work items must be independent.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    unsigned nthreads = max_threads();
    if (nthreads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    if (nthreads > count) nthreads = static_cast<unsigned>(count);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < count; i += nthreads) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace nlcd
