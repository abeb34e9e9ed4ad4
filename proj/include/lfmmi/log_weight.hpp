#pragma once

#include <Eigen/Core>

#include <cmath>
#include <compare>
#include <limits>
#include <span>

namespace lfmmi {

template <typename Scalar>
inline constexpr Scalar kLogZero = -std::numeric_limits<Scalar>::infinity();

template <typename Scalar>
inline bool is_log_zero(Scalar x) {
  return x == kLogZero<Scalar>;
}

/// log(exp(a) + exp(b)); either argument may be log-zero.
template <typename Scalar>
inline Scalar log_add(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (is_log_zero(b)) return a;
  return a + std::log1p(std::exp(b - a));
}

/// Max-shifted log-sum-exp over any dense Eigen expression. Empty or
/// all-zero input yields log-zero.
template <typename Derived>
typename Derived::Scalar logsumexp(const Eigen::DenseBase<Derived> &values) {
  using Scalar = typename Derived::Scalar;
  if (values.size() == 0) return kLogZero<Scalar>;
  const Scalar max = values.maxCoeff();
  if (is_log_zero(max)) return kLogZero<Scalar>;
  if (std::isinf(max)) return max;
  return max + std::log((values.derived().array() - max).exp().sum());
}

/// Natural-log probability in the log semiring: times is addition, plus is
/// log-sum-exp, and Zero() is -inf. Products involving Zero() saturate.
class LogWeight {
 public:
  constexpr LogWeight() = default;
  constexpr explicit LogWeight(double value) : value_(value) {}

  static constexpr LogWeight Zero() { return LogWeight(kLogZero<double>); }
  static constexpr LogWeight One() { return LogWeight(0.0); }

  constexpr double value() const { return value_; }
  bool is_zero() const { return is_log_zero(value_); }

  friend LogWeight times(LogWeight a, LogWeight b) {
    if (a.is_zero() || b.is_zero()) return Zero();
    return LogWeight(a.value_ + b.value_);
  }
  friend LogWeight plus(LogWeight a, LogWeight b) {
    return LogWeight(log_add(a.value_, b.value_));
  }

  friend bool operator==(LogWeight, LogWeight) = default;
  friend auto operator<=>(LogWeight, LogWeight) = default;

 private:
  double value_ = 0.0;
};

LogWeight logsumexp(std::span<const LogWeight> values);

}  // namespace lfmmi
