#pragma once

// plays.bin container, little-endian:
//   magic "PLAY" | version u16 | count u32 | per play:
//     version 1: label u8 | role u8 | 125 x 11 x (x, y, z) f32
//     version 2: label u8 | role u8 | quarter u8 | game_clock f32 | 125 x 11 x (x, y, z) f32
// Slots follow the Play layout (offense roles 1..5, ball, defense roles 1..5).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "courtraster/play.hpp"

namespace courtraster {

inline constexpr std::uint16_t kPlayFileVersion = 2;

void write_plays(std::ostream& out, const std::vector<Play>& plays, std::uint16_t version = kPlayFileVersion);
std::vector<Play> read_plays(std::istream& in);

void save_plays(const std::filesystem::path& path, const std::vector<Play>& plays,
                std::uint16_t version = kPlayFileVersion);
std::vector<Play> load_plays(const std::filesystem::path& path);

}  // namespace courtraster
