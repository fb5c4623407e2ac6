#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kdc {

// Every parallel kernel has a serial reference implementation selected by
// ExecMode; results are bit-identical because all per-index randomness is
// derived from the index, never from thread order.
enum class ExecMode { serial, openmp };

template <class F>
void parallel_for(std::size_t n, ExecMode mode, F&& body) {
    if (mode == ExecMode::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(static_cast<std::size_t>(i));
        return;
#endif
    }
    for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace kdc
