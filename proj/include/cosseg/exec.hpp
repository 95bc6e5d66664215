#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cosseg {

// Hot loops (segment vectorization, per-tree training, batch prediction,
// full-grid cells) run under OpenMP by default. The serial path is kept as a
// reference implementation; tests assert both produce identical results and
// the bench tool compares their throughput.
enum class ExecPolicy { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace cosseg
