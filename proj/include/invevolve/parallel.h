#ifndef INVEVOLVE_PARALLEL_H_
#define INVEVOLVE_PARALLEL_H_

#include <functional>

namespace invevolve {

// Calls fn(i) for i in [0, n) on up to `jobs` threads (0 = hardware
// concurrency). Work is claimed in index order; the first exception thrown
// by any call is rethrown after all workers stop.
void ParallelFor(int n, int jobs, const std::function<void(int)>& fn);

int ResolveJobs(int jobs);

}  // namespace invevolve

#endif  // INVEVOLVE_PARALLEL_H_
