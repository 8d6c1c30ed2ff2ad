#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace lemsim {

// Malformed or inconsistent input data (scenario files, order lists, configs).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or broken numerical invariants during a run.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Quantities below this magnitude are treated as zero when deciding whether
// an order is fully cleared.
inline constexpr double kQuantityEps = 1e-9;

// Submitted prices are quantized to this grid so that equal-price tiers are
// grouped by exact comparison.
inline constexpr double kPriceQuantum = 1e-6;

inline double quantize_price(double p) {
  return std::round(p / kPriceQuantum) * kPriceQuantum;
}

}  // namespace lemsim
