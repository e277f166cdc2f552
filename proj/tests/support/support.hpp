#pragma once

// Shared fixtures and independent oracles for the unit tests and the acceptance binary.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "courtraster/features.hpp"
#include "courtraster/ingest.hpp"
#include "courtraster/nn/layers.hpp"
#include "courtraster/nn/model.hpp"
#include "courtraster/play.hpp"
#include "courtraster/segmentation.hpp"

namespace courtraster::fixtures {

// ---- tracking fixtures ----

// The 14-row sample snapshot: 10 players, ball at (25.1, 14.0, 3.4), 3 referees.
std::string sample_snapshot_csv();

// Ten players on fixed spots (team 1 along y = 10, team 2 along y = 40), roles 1..5 by
// index, ball on top of `owner` (a player id).
ingest::Frame grid_frame(int owner, double game_time = 700.0, double real_time = 0.0);

// One frame per entry, ball on player 101 for team 1 entries and on 201 for team 2.
std::vector<ingest::Frame> owner_trace(const std::vector<int>& owner_teams, double start_clock = 700.0);

// Expands run-length pairs (team, frames) into one team entry per frame.
std::vector<int> runs(const std::vector<std::pair<int, int>>& team_frames);

// Sets the shot event on `shooter` in frame `index`.
void mark_shot(std::vector<ingest::Frame>& frames, std::size_t index, int shooter, bool made);

struct PossessionTrace {
    std::string name;
    std::vector<int> owner_teams;
    // (start, end inclusive, offense team) written out by hand.
    std::vector<std::tuple<std::size_t, std::size_t, int>> expected;
};

std::vector<PossessionTrace> possession_traces();

// ---- play fixtures ----

// 125 frames with every slot at `pos(t, slot)`.
Play make_play(const std::function<Vec3(int t, int slot)>& pos, int shooter_role = 1, bool made = true);

// A random in-court play: players wander, the ball follows the shooter. Already oriented.
Play random_play(std::mt19937_64& rng, int shooter_role = 0);

// ---- neural-network oracles ----

// Four nested loops over output pixels with zero padding 1 and a 3x3 kernel.
nn::Tensor<double> conv_reference(const nn::Tensor<double>& x, const nn::Tensor<double>& w, const nn::Tensor<double>& b);

struct GradCheck {
    std::string what;
    double rel_error = 0.0;  // worst over every checked tensor
    std::size_t checked = 0;
};

// Relative error ||a - n|| / max(||a||, ||n||) with n from central differences.
double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

// Central finite-difference check of d(sum(r * layer(x)))/d(x) and of every parameter.
GradCheck check_layer(nn::Layer<double>& layer, nn::Tensor<double> x, bool train, std::uint64_t seed,
                      double eps = 1e-3);

// Mean softmax log loss gradient against central differences.
GradCheck check_logloss(const nn::Tensor<double>& logits, const std::vector<int>& labels, double eps = 1e-3);

// Whole-network check: log loss gradient for every parameter scalar in `probe` (indices into
// Network::params()) on a batch, train mode. Probes where the loss is not smooth within eps are
// skipped; more than half skipped counts as a failure.
GradCheck check_network(nn::Network<double>& net, const nn::Tensor<double>* images, const nn::Tensor<double>* features,
                        const std::vector<int>& labels, const std::vector<std::pair<std::size_t, std::size_t>>& probe,
                        double eps = 1e-3);

// The full randomized suite used by the acceptance criterion: every layer kind on random shapes.
std::vector<GradCheck> gradient_suite(std::uint64_t seed);

// ---- feature oracle ----

// Counts, distances and angles recomputed from the shot frame with dot/cross products rather
// than bearings. Indices follow the feature layout; every other entry is NaN.
std::vector<double> brute_force_geometry(const Play& play);

// Indices of the entries brute_force_geometry fills.
std::vector<int> geometry_indices();

}  // namespace courtraster::fixtures
