#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sgflow {

/// Execution mode for the data-parallel kernels. Every kernel has a plain
/// serial loop that serves as the reference implementation; the OpenMP path
/// must produce identical results (each loop iteration writes disjoint
/// outputs, so no reduction reordering is involved).
enum class ExecMode { serial, openmp };

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class F>
void parallel_for(int n, ExecMode mode, F&& body) {
  if (mode == ExecMode::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < n; ++i) body(i);
  } else {
    for (int i = 0; i < n; ++i) body(i);
  }
}

}  // namespace sgflow
