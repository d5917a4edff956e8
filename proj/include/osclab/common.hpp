#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace osclab {

/// Raised when an argument violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a kernel evaluator misbehaves (non-finite value on a valid pair).
class KernelDefect : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Neumaier-compensated accumulator. All measure integrals and matrix row
/// sums go through this, in ascending index order, so results are identical
/// across thread counts and schedules.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + comp; }
};

/// Running maximum with index witness. Ties resolve to the lowest index, so
/// merging per-thread partials is order-independent.
struct MaxLoc {
  double value = -std::numeric_limits<double>::infinity();
  std::int64_t index = -1;

  void update(double v, std::int64_t i) {
    if (v > value || (v == value && index >= 0 && i < index)) {
      value = v;
      index = i;
    } else if (index < 0) {
      value = v;
      index = i;
    }
  }

  void merge(const MaxLoc& o) {
    if (o.index < 0) return;
    if (index < 0 || o.value > value || (o.value == value && o.index < index)) {
      value = o.value;
      index = o.index;
    }
  }

  bool empty() const { return index < 0; }
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// lhs <= rhs up to the given relative slack (used by the chain checks).
inline bool approx_le(double lhs, double rhs, double rel = 1e-9) {
  return lhs <= rhs + rel * std::max(std::fabs(lhs), std::fabs(rhs));
}

int max_threads();
void set_num_threads(int n);

}  // namespace osclab
