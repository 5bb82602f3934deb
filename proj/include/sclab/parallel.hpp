#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sclab {

// Worker cap used by parallel_for. 0 means hardware concurrency.
void set_thread_count(unsigned threads);
unsigned thread_count();

namespace detail {
void run_parallel(std::size_t count, void (*fn)(void*, std::size_t), void* ctx);
}

// Runs body(i) for i in [0, count). Each index must only write its own output
// slot; callers reduce afterwards in index order, so results do not depend on
// the worker count.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
    auto thunk = [](void* ctx, std::size_t i) { (*static_cast<Body*>(ctx))(i); };
    detail::run_parallel(count, thunk, &body);
}

// Fixed-shape pairwise (tree) summation.
double tree_sum(std::span<const double> values);

}  // namespace sclab
