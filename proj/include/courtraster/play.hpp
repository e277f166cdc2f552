#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "courtraster/common.hpp"

namespace courtraster {

// One entity slot layout per frame: offense roles 1..5, ball, defense roles 1..5.
using SlotPositions = std::array<Vec3, kNumSlots>;

// A fixed-length window ending at (and including) a shot frame.
struct Play {
    std::vector<SlotPositions> frames;  // kPlayFrames entries
    int shooter_role = 1;
    bool made = false;
    int quarter = 1;
    double game_clock = 0.0;  // seconds left in the quarter at the shot
    int offense_team = 1;
    std::array<int, kNumSlots> slot_ids{};  // player ids per slot, -1 for the ball
    std::size_t shot_frame = 0;             // index of the shot frame in the source sequence

    int label() const;
    const Vec3& shooter_at(std::size_t t) const { return frames[t][static_cast<std::size_t>(offense_slot(shooter_role))]; }
    const Vec3& ball_at(std::size_t t) const { return frames[t][kBallSlot]; }
};

// 2*(role-1) + (0 made / 1 missed)
int label_play(int shooter_role, bool made);
constexpr int label_role(int label) { return label / 2 + 1; }
constexpr bool label_made(int label) { return label % 2 == 0; }

}  // namespace courtraster
