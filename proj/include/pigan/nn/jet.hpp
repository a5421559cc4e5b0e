#pragma once

#include <array>

namespace pigan::nn {

/// Value with first and second partials in the two spatial inputs.
/// d2 stores the symmetric Hessian as (11, 12, 22).
struct Jet2 {
  double value = 0.0;
  std::array<double, 2> d1{};
  std::array<double, 3> d2{};

  double d11() const { return d2[0]; }
  double d12() const { return d2[1]; }
  double d22() const { return d2[2]; }
};

/// Which derivative channels a batched pass carries. Channel 0 is the value,
/// then one channel per tangent direction, then (if `second`) the upper
/// triangle of the Hessian in row order.
struct JetLayout {
  int directions = 0;
  bool second = false;

  int channels() const {
    return 1 + directions + (second ? directions * (directions + 1) / 2 : 0);
  }
  static constexpr JetLayout value_only() { return {0, false}; }
  static constexpr JetLayout first(int directions = 2) { return {directions, false}; }
  static constexpr JetLayout second_order() { return {2, true}; }

  friend bool operator==(const JetLayout&, const JetLayout&) = default;
};

}  // namespace pigan::nn
