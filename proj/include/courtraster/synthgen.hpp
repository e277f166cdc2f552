#pragma once

// Synthetic tracking games with a planted logistic shot-outcome model. The planted
// probability of every generated shot is recorded, so downstream estimates can be
// scored against ground truth.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "courtraster/common.hpp"
#include "courtraster/ingest.hpp"

namespace courtraster::synthgen {

struct PlantedCoeffs {
    double a = 0.8;   // intercept
    double b = 0.09;  // per foot of distance to the hoop
    double c = 0.08;  // per foot of defender separation, capped at kDefenderCap
};

inline constexpr double kDefenderCap = 10.0;

struct GenConfig {
    int n_plays = 1;
    std::uint64_t seed = 0;
    int fps = kFps;
    double noise_std = 0.5;
    std::array<double, 5> role_offsets{-0.1, 0.1, 0.4, 0.0, 0.1};
    PlantedCoeffs coeffs{};
    int referees = 0;           // referee rows per frame (ignored downstream)
    int frames_per_play = 150;  // possession length; the last frame is the shot

    void check() const;  // throws ConfigError
};

struct PlantedScene {
    int play_index = 0;
    std::size_t shot_frame = 0;  // index into the generated frame sequence
    int offense_team = 1;
    int shooter_id = 0;
    int shooter_role = 1;
    Vec2 shot_xy;  // oriented: attacked hoop at (88.75, 25)
    double dist_to_hoop = 0.0;
    double min_defender_dist = 0.0;
    double probability = 0.0;
    bool made = false;
    bool mirrored = false;           // raw coordinates attack the x = 5.25 hoop
    std::array<int, 10> role_of{};   // roles of players 101..105, 201..205
};

struct SyntheticGame {
    std::vector<ingest::Frame> frames;
    std::vector<PlantedScene> scenes;
};

double logistic(double z);

double planted_shot_probability(double dist_to_hoop, double min_defender_dist, int role,
                                const GenConfig& cfg);

SyntheticGame generate_games(const GenConfig& cfg);

// CSV with one row per generated play.
std::string write_truth_csv(const std::vector<PlantedScene>& scenes);
std::vector<PlantedScene> parse_truth_csv(const std::string& text);

// Player ids used by the generator: team 1 -> 101..105, team 2 -> 201..205.
constexpr int player_id(int team, int k) { return team * 100 + 1 + k; }

}  // namespace courtraster::synthgen
