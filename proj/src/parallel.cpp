#include "islimits/parallel.hpp"

namespace islimits::parallel {

int resolve_threads(int requested) {
  return requested > 0 ? requested : omp_get_max_threads();
}

}  // namespace islimits::parallel
