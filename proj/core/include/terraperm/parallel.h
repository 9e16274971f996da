#ifndef TERRAPERM_PARALLEL_H_
#define TERRAPERM_PARALLEL_H_

namespace terraperm {

// Worker count for the library's parallel loops. Results never depend on it.
void set_thread_count(int n);
int thread_count();

}  // namespace terraperm

#endif  // TERRAPERM_PARALLEL_H_
