// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeding and worker-pool helpers shared by every stochastic module.
//
// Results never depend on the worker count: each trial owns an engine seeded
// from (seed, trial index), outputs are written to per-index slots, and all
// reductions run serially in index order afterwards.

#include <cstddef>
#include <cstdint>
#include <random>
#include <type_traits>

namespace gscert {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate counter-derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return Engine(derive_seed(seed, stream));
}

/// Caps the number of worker threads used by parallel loops (0 = hardware).
void set_thread_limit(unsigned threads);
unsigned thread_limit();

namespace detail {
void run_chunks(std::size_t n, void (*body)(void*, std::size_t, std::size_t), void* ctx);
}

/// Calls fn(i) for i in [0, n). fn must only write to slot i of its outputs.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  auto body = [](void* ctx, std::size_t lo, std::size_t hi) {
    auto& f = *static_cast<std::remove_reference_t<Fn>*>(ctx);
    for (std::size_t i = lo; i < hi; ++i) f(i);
  };
  detail::run_chunks(n, body, static_cast<void*>(&fn));
}

}  // namespace gscert
