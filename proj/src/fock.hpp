#pragma once

// Ladder-operator action on occupation bitstrings (bit p = spin orbital p).

#include <bit>
#include <cstdint>

namespace escqe::detail {

inline int ladder_sign(std::uint64_t det, int p) {
  return (std::popcount(det & ((std::uint64_t{1} << p) - 1)) & 1) ? -1 : 1;
}

/// a_p; returns false when the result vanishes.
inline bool annihilate(std::uint64_t& det, int p, int& sign) {
  const std::uint64_t bit = std::uint64_t{1} << p;
  if (!(det & bit)) return false;
  sign *= ladder_sign(det, p);
  det ^= bit;
  return true;
}

/// a†_p; returns false when the result vanishes.
inline bool create(std::uint64_t& det, int p, int& sign) {
  const std::uint64_t bit = std::uint64_t{1} << p;
  if (det & bit) return false;
  sign *= ladder_sign(det, p);
  det ^= bit;
  return true;
}

}  // namespace escqe::detail
