#pragma once

// Possession detection and extraction of fixed-length shot plays from frame sequences.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "courtraster/ingest.hpp"
#include "courtraster/play.hpp"

namespace courtraster::segmentation {

// Event code table.
enum Event : int {
    kEventNone = 0,
    kEventShotMade = 1,
    kEventShotMissed = 2,
    kEventPass = 3,
    kEventFoul = 4,
    kEventRebound = 5,
};

inline constexpr int kPossessionSwitchFrames = 12;

struct Possession {
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;  // inclusive
    int offense_team = 1;
    std::vector<int> owner_by_frame;  // nearest player id, one per frame in [start, end]
};

struct SegmentOptions {
    int switch_frames = kPossessionSwitchFrames;
    int play_frames = kPlayFrames;
};

struct SegmentReport {
    std::size_t frames = 0;
    std::size_t quarters = 0;
    std::size_t possessions = 0;
    std::size_t shots = 0;
    std::size_t plays = 0;
    std::size_t discarded_short = 0;         // window leaves the possession or the quarter
    std::size_t discarded_multi_shot = 0;    // second shot inside the window
    std::size_t discarded_wrong_team = 0;    // shooter not on the possession's offense
    std::size_t discarded_bad_roles = 0;

    std::string to_json() const;
};

// Player minimizing planar distance to the ball; ties go to the lowest id.
int nearest_owner(const ingest::Frame& frame);

// Contiguous [begin, end) ranges; a new quarter starts whenever the game clock rises.
std::vector<std::pair<std::size_t, std::size_t>> split_quarters(const std::vector<ingest::Frame>& frames);

// Frames of a single quarter. Possession indices are relative to `frames`; `offset` is added
// to every index so callers can segment a slice of a longer sequence.
std::vector<Possession> segment_possessions(std::span<const ingest::Frame> frames,
                                            int switch_frames = kPossessionSwitchFrames,
                                            std::size_t offset = 0);

// Roles as recorded in the window's first frame. Throws DataError on a duplicated role.
std::map<int, int> assign_roles(std::span<const ingest::Frame> window);

std::vector<Play> extract_shot_plays(const std::vector<ingest::Frame>& frames,
                                     const std::vector<Possession>& possessions,
                                     const SegmentOptions& opts = {}, SegmentReport* report = nullptr,
                                     int quarter = 1);

struct SegmentedGame {
    std::vector<Play> plays;
    std::vector<Possession> possessions;
    SegmentReport report;
};

// Quarters, then possessions, then plays.
SegmentedGame segment_game(const std::vector<ingest::Frame>& frames, const SegmentOptions& opts = {});

}  // namespace courtraster::segmentation
