#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace pdg {

// Caps the number of worker threads used by parallel_for (0 = hardware).
void set_max_threads(int n);
int max_threads();

// Runs fn(0..n-1) across up to `max_threads()` workers. Results and errors
// are slot-addressed, so the outcome is independent of the thread count: if
// several tasks throw, the lowest index wins.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace pdg
