// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <cmath>
#include <compare>
#include <stdexcept>

namespace fracprox {

/// Extended real value: a finite double, +infinity or -infinity, stored as an
/// explicit tag. Objective evaluations return these so that a point outside a
/// domain is unmistakable; IEEE infinities and NaN are never used as
/// sentinels (the extended objectives here are not lower semicontinuous, and
/// a NaN sneaking into the line-search reference would corrupt it silently).
class ExtendedReal {
 public:
  ExtendedReal() : kind_(Kind::Finite), value_(0.0) {}

  /// Wraps a finite double. Rejects NaN and IEEE infinities.
  static ExtendedReal finite(double v) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ExtendedReal::finite: value is not finite");
    }
    return ExtendedReal(Kind::Finite, v);
  }
  static ExtendedReal pos_inf() { return ExtendedReal(Kind::PosInf, 0.0); }
  static ExtendedReal neg_inf() { return ExtendedReal(Kind::NegInf, 0.0); }

  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_pos_inf() const { return kind_ == Kind::PosInf; }
  bool is_neg_inf() const { return kind_ == Kind::NegInf; }

  /// The finite payload; throws when the value is infinite.
  double value() const {
    if (!is_finite()) {
      throw std::logic_error("ExtendedReal::value: value is infinite");
    }
    return value_;
  }

  /// Addition with absorbing infinities. +inf + (-inf) is a caller bug.
  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.is_finite() && b.is_finite()) return finite(a.value_ + b.value_);
    if (a.is_pos_inf() || b.is_pos_inf()) {
      if (a.is_neg_inf() || b.is_neg_inf()) {
        throw std::logic_error("ExtendedReal: +inf + -inf");
      }
      return pos_inf();
    }
    return neg_inf();
  }

  friend bool operator==(ExtendedReal a, ExtendedReal b) {
    return a.kind_ == b.kind_ && (!a.is_finite() || a.value_ == b.value_);
  }

  friend bool operator<(ExtendedReal a, ExtendedReal b) {
    if (a.kind_ == b.kind_) return a.is_finite() && a.value_ < b.value_;
    if (a.is_neg_inf() || b.is_pos_inf()) return true;
    return false;
  }
  friend bool operator<=(ExtendedReal a, ExtendedReal b) { return a < b || a == b; }
  friend bool operator>(ExtendedReal a, ExtendedReal b) { return b < a; }
  friend bool operator>=(ExtendedReal a, ExtendedReal b) { return b <= a; }

 private:
  enum class Kind { Finite, PosInf, NegInf };
  ExtendedReal(Kind k, double v) : kind_(k), value_(v) {}

  Kind kind_;
  double value_;
};

}  // namespace fracprox
