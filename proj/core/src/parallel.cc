#include "terraperm/parallel.h"

#include <omp.h>

#include <algorithm>

namespace terraperm {

void set_thread_count(int n) { omp_set_num_threads(std::max(1, n)); }

int thread_count() { return omp_get_max_threads(); }

}  // namespace terraperm
