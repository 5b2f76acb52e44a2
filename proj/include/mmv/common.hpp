#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmv {

inline constexpr const char* kToolVersion = "0.1.0";

// Thrown when an adaptive numerical routine cannot reach its accuracy target
// (quadrature refinement budget exhausted, iteration diverged, ...).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by the command-line front end for unparseable or invalid run configs.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Power quantities (noise variance, MSE) in decibels: x_dB = 10*log10(x).
// This convention is applied uniformly across the toolkit.
inline double to_db(double x) { return 10.0 * std::log10(x); }
inline double from_db(double x_db) { return std::pow(10.0, x_db / 10.0); }

// Quantile with linear interpolation between order statistics (the common
// "type 7" definition); q in [0, 1]. Takes its argument by value on purpose.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0) || !(q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }
inline double iqr(const std::vector<double>& v) { return quantile(v, 0.75) - quantile(v, 0.25); }

}  // namespace mmv
