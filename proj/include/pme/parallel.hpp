// parallel.hpp — Minimal deterministic parallel-for over index ranges

#pragma once

#include <cstddef>
#include <functional>

namespace pme {

// Global worker count used by table builds and rate assembly. 0 = hardware default.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Work items must write to disjoint slots; the
// partition is static so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace pme
