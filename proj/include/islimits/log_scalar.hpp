#pragma once

#include <cmath>
#include <limits>

namespace islimits {

/// A positive quantity stored as its natural logarithm. Values such as the
/// second moment of the importance weights overflow double precision long
/// before they become uninteresting, so they are only exponentiated on
/// request. The positive-infinity marker stands for a divergent quantity.
class LogScalar {
 public:
  constexpr LogScalar() = default;
  constexpr explicit LogScalar(double log_value) : log_value_(log_value) {}

  static constexpr LogScalar infinity() {
    return LogScalar(std::numeric_limits<double>::infinity());
  }
  static LogScalar from_linear(double value) { return LogScalar(std::log(value)); }

  constexpr double log() const { return log_value_; }
  bool is_infinite() const { return std::isinf(log_value_) && log_value_ > 0; }
  bool is_finite() const { return std::isfinite(log_value_); }

  /// exp(log). Overflows to +inf for log > ~709.
  double value() const { return std::exp(log_value_); }

  friend LogScalar operator*(LogScalar a, LogScalar b) {
    return LogScalar(a.log_value_ + b.log_value_);
  }
  friend LogScalar operator/(LogScalar a, LogScalar b) {
    return LogScalar(a.log_value_ - b.log_value_);
  }
  friend bool operator<(LogScalar a, LogScalar b) { return a.log_value_ < b.log_value_; }
  friend bool operator>(LogScalar a, LogScalar b) { return a.log_value_ > b.log_value_; }
  friend bool operator==(LogScalar a, LogScalar b) = default;

 private:
  double log_value_ = 0.0;
};

}  // namespace islimits
