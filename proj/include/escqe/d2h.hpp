#pragma once

#include <array>
#include <string_view>

namespace escqe::d2h {

/// One-dimensional irreps of D2h. Axis convention: molecular plane is xy,
/// the generators are C2(z), C2(y) and inversion.
enum class Irrep : int { Ag = 0, B1g, B2g, B3g, Au, B1u, B2u, B3u };

inline constexpr int kIrrepCount = 8;

/// Characters under (C2z, C2y, i).
constexpr std::array<int, 3> characters(Irrep g) {
  constexpr std::array<std::array<int, 3>, 8> table{{
      {1, 1, 1},     // Ag
      {1, -1, 1},    // B1g
      {-1, 1, 1},    // B2g
      {-1, -1, 1},   // B3g
      {1, 1, -1},    // Au
      {1, -1, -1},   // B1u
      {-1, 1, -1},   // B2u
      {-1, -1, -1},  // B3u
  }};
  return table[static_cast<int>(g)];
}

constexpr Irrep from_characters(const std::array<int, 3>& chi) {
  for (int g = 0; g < kIrrepCount; ++g) {
    if (characters(static_cast<Irrep>(g)) == chi) return static_cast<Irrep>(g);
  }
  return Irrep::Ag;  // unreachable for +-1 inputs
}

constexpr Irrep product(Irrep a, Irrep b) {
  auto ca = characters(a);
  auto cb = characters(b);
  return from_characters({ca[0] * cb[0], ca[1] * cb[1], ca[2] * cb[2]});
}

constexpr std::string_view label(Irrep g) {
  constexpr std::array<std::string_view, 8> names{"A1g", "B1g", "B2g", "B3g",
                                                  "Au",  "B1u", "B2u", "B3u"};
  return names[static_cast<int>(g)];
}

}  // namespace escqe::d2h
