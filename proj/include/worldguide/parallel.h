#pragma once

#include <cstddef>
#include <functional>

namespace worldguide {

// Resolves a requested worker count: a positive request wins, then the
// WORLDGUIDE_THREADS environment variable, then the hardware concurrency.
int ResolveThreadCount(int requested);

// Runs body(i) for every i in [0, count). Work items are handed out
// dynamically, so body must only write state owned by index i.
void ParallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t)>& body);

}  // namespace worldguide
