#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace prw {

enum class Direction : std::uint8_t { Up, Down };

inline constexpr std::array<Direction, 2> kDirections{Direction::Up, Direction::Down};

constexpr Direction opposite(Direction d) noexcept {
  return d == Direction::Up ? Direction::Down : Direction::Up;
}

// Up -> 0, Down -> 1; used to index per-direction arrays.
constexpr std::size_t index(Direction d) noexcept { return d == Direction::Up ? 0 : 1; }

constexpr int step(Direction d) noexcept { return d == Direction::Up ? 1 : -1; }

constexpr std::string_view to_string(Direction d) noexcept {
  return d == Direction::Up ? "up" : "down";
}

constexpr char letter(Direction d) noexcept { return d == Direction::Up ? 'u' : 'd'; }

inline std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "up" || s == "u" || s == "Up") return Direction::Up;
  if (s == "down" || s == "d" || s == "Down") return Direction::Down;
  return std::nullopt;
}

}  // namespace prw
