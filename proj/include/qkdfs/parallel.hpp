#pragma once

#include <cstddef>
#include <exception>
#include <type_traits>
#include <vector>

namespace qkdfs {

enum class Execution { serial, openmp };

/// Evaluates f(0..count-1) and returns results in index order.
/// The serial path is the reference; the OpenMP path must agree with it.
template <typename F>
auto parallel_map(std::size_t count, F&& f, Execution exec = Execution::openmp)
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out(count);
  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
    return out;
  }
  std::exception_ptr first_error;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(qkdfs_parallel_map_error)
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace qkdfs
