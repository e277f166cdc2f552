#pragma once

// Frame-by-frame tracking data: one CSV row per entity,
//   game_time,real_time,team,player,x,y,z,role,event

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace courtraster::ingest {

inline constexpr int kTeamBall = -1;
inline constexpr int kTeamReferee = -2;
inline constexpr double kCourtTolerance = 2.0;
// A rise in game_time is a new quarter only if the clock had run down below this.
inline constexpr double kQuarterEndClock = 1.0;

inline constexpr std::string_view kHeader = "game_time,real_time,team,player,x,y,z,role,event";

struct EntityRecord {
    int team = 0;
    int player_id = 0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    int role = 0;
    int event = 0;

    bool is_player() const { return team == 1 || team == 2; }
    bool is_ball() const { return team == kTeamBall; }
    bool is_referee() const { return team == kTeamReferee; }

    friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

struct Frame {
    double game_time = 0.0;  // seconds remaining in the quarter
    double real_time = 0.0;  // wall-clock timestamp
    std::vector<EntityRecord> records;

    const EntityRecord* ball() const;
    int player_count(int team) const;

    friend bool operator==(const Frame&, const Frame&) = default;
};

struct Violation {
    std::size_t frame_index = 0;
    std::string rule;
    std::string message;
};

struct ValidationReport {
    std::size_t frame_count = 0;
    std::size_t dropped_frames = 0;
    std::vector<Violation> violations;

    std::size_t accepted_frames() const { return frame_count - dropped_frames; }
    bool clean() const { return violations.empty(); }
    std::string to_json() const;
};

struct ParsedTracking {
    std::vector<Frame> frames;
    ValidationReport report;
};

// Throws ParseError (with 1-based row number) on malformed rows. Frames lacking the ball or
// 5 players per team are quarantined into the report rather than emitted.
ParsedTracking parse_tracking(std::string_view text);

std::string write_tracking(const std::vector<Frame>& frames);

// Report-only: out-of-court coordinates, backwards game clock within a quarter, missing ball,
// player count, role/team consistency.
ValidationReport validate(const std::vector<Frame>& frames);

}  // namespace courtraster::ingest
