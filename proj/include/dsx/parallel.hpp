#pragma once

#include <cstddef>
#include <cstdint>

namespace dsx {

/// Selects the OpenMP kernel or the serial reference loop. Both produce
/// identical results; the serial path exists for testing and benchmarking.
enum class Exec : std::uint8_t { Serial, Parallel };

template <typename Fn>
void parallel_for(Exec exec, std::size_t n, Fn&& fn) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

int max_threads();

}  // namespace dsx
