#pragma once

// Hand-crafted per-play statistics, evaluated on oriented plays (attacked hoop at (88.75, 25)).
//
// Layout (player order: offense roles 1..5, then defense roles 1..5):
//   [0..19]    player (x, y) at the shot
//   [20..22]   ball (x, y, z) at the shot
//   [23]       game time left (s), [24] quarter time left (s)
//   [25..74]   player mean speed per one-second window, player-major (ft/s)
//   [75..79]   ball mean speed per window (ft/s)
//   [80..124]  pairwise player distances at the shot (i < j, lexicographic)
//   [125..169] pairwise angles subtended at the hoop (rad, [0, pi])
//   [170..179] player -> hoop distances
//   [180..189] player -> hoop angle against the baseline normal (rad, [0, pi])
//   [190]      defenders in the shooter's cone and within 6 ft
//   [191]      defenders within 6 ft of the shooter
//   [192..196] ball possession time per offensive role (s)
//   [197]      players (either team, shooter excluded) within 6 ft of the shooter

#include <array>
#include <string>
#include <vector>

#include "courtraster/common.hpp"
#include "courtraster/play.hpp"

namespace courtraster::features {

inline constexpr int kFeatureCount = 198;
inline constexpr int kPositionsBegin = 0;
inline constexpr int kBallBegin = 20;
inline constexpr int kGameTime = 23;
inline constexpr int kQuarterTime = 24;
inline constexpr int kSpeedBegin = 25;
inline constexpr int kBallSpeedBegin = 75;
inline constexpr int kPairDistBegin = 80;
inline constexpr int kPairAngleBegin = 125;
inline constexpr int kHoopDistBegin = 170;
inline constexpr int kHoopAngleBegin = 180;
inline constexpr int kConeCount = 190;
inline constexpr int kNearDefenders = 191;
inline constexpr int kPossessionBegin = 192;
inline constexpr int kNearAnyone = 197;

inline constexpr double kNearRadius = 6.0;
inline constexpr double kConeHalfAngleDeg = 15.0;
inline constexpr double kSpeedClamp = 50.0;
inline constexpr int kWindows = 5;
inline constexpr double kQuarterSeconds = 720.0;

struct FeatureVector {
    std::vector<double> values;
    int shooter_role = 1;
};

// Shot-frame geometry.
struct Scene {
    std::array<Vec2, 10> players{};  // offense roles 1..5, defense roles 1..5
    Vec3 ball{};
    int shooter = 0;  // index into players (0..4)
    Vec2 hoop = kAttackedHoop;
};

constexpr int player_slot(int player_index) { return player_index < 5 ? player_index : player_index + 1; }

Scene shot_scene(const Play& play);

FeatureVector extract_features(const Play& play);

// Shooter at the hoop has no cone direction; such scenes count by radius only.
int defenders_in_cone(const Scene& scene, double half_angle_deg = kConeHalfAngleDeg, double radius = kNearRadius);

// Seconds each offensive role is the player nearest the ball; ties go to the earlier player index.
std::array<double, 5> possession_times(const Play& play);

// 50 player values (player-major, 5 windows each) followed by 5 ball values.
std::vector<double> window_speeds(const Play& play);

// Angle between the bearings of a and b seen from `origin`, in [0, pi]; 0 if either coincides.
double angle_at(Vec2 origin, Vec2 a, Vec2 b);

const std::vector<std::string>& feature_names();
std::string layout_json();

}  // namespace courtraster::features
