#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

namespace ambislam {

/// Variable identifier: robot pose x<index> or landmark l<index>.
struct Key {
  enum class Kind : std::uint8_t { Robot = 0, Landmark = 1 };

  Kind kind = Kind::Robot;
  std::uint32_t index = 0;

  constexpr bool isRobot() const { return kind == Kind::Robot; }
  constexpr bool isLandmark() const { return kind == Kind::Landmark; }

  friend constexpr auto operator<=>(const Key&, const Key&) = default;

  /// "x12" / "l3"
  std::string str() const;

  /// Inverse of str(); throws std::invalid_argument on malformed input.
  static Key parse(std::string_view text);
};

constexpr Key X(std::uint32_t i) { return Key{Key::Kind::Robot, i}; }
constexpr Key L(std::uint32_t j) { return Key{Key::Kind::Landmark, j}; }

inline std::ostream& operator<<(std::ostream& os, const Key& k) { return os << k.str(); }

}  // namespace ambislam

template <>
struct std::hash<ambislam::Key> {
  std::size_t operator()(const ambislam::Key& k) const noexcept {
    return (static_cast<std::size_t>(k.kind) << 32) ^ k.index;
  }
};
