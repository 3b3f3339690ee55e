#pragma once

#include <stdexcept>
#include <string>

namespace hsl {

// Numerical procedure failed to meet its certified tolerance.
struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& m) : std::runtime_error(m) {}
};

// Graph cannot be reduced by leaf/series/parallel moves (e.g. a 4-clique).
struct NotSeriesParallelError : std::runtime_error {
  explicit NotSeriesParallelError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace hsl
