#pragma once

#include <cstddef>
#include <functional>

namespace metafors {

// Runs fn(i) for i in [0, n). Work items must be independent; each item
// writes only to its own output slot, so results do not depend on the
// thread count or schedule. Exceptions from workers are rethrown on the
// calling thread.
void parallel_for(std::size_t n, unsigned n_threads,
                  const std::function<void(std::size_t)>& fn);

unsigned default_thread_count();

}  // namespace metafors
