#pragma once

// Interpretation tools: shot heat maps, per-role probability histograms, activation
// maximization, and SSIM comparison of filter images with shot-time occupancy.

#include <cstdint>
#include <string>
#include <vector>

#include "courtraster/nn/model.hpp"
#include "courtraster/play.hpp"
#include "courtraster/raster.hpp"

namespace courtraster::analysis {

// 94 x 50 one-foot cells indexed by (floor x, floor y) of the shooter at the shot frame.
struct CourtGrid {
    static constexpr int kRows = 94;
    static constexpr int kCols = 50;

    std::vector<double> sum;       // made count (raw) or summed probability (model)
    std::vector<std::size_t> attempts;

    CourtGrid() : sum(kRows * kCols, 0.0), attempts(kRows * kCols, 0) {}

    static std::size_t index(int row, int col) { return static_cast<std::size_t>(row) * kCols + static_cast<std::size_t>(col); }
    bool empty(int row, int col) const { return attempts[index(row, col)] == 0; }
    // NaN for an empty cell.
    double value(int row, int col) const;
    std::size_t populated() const;
    void add(int row, int col, double v);

    // One line per populated cell: row,col,attempts,value
    std::string to_csv() const;
    // Gray image, empty cells black.
    raster::TrajectoryImage to_image() const;
};

std::pair<int, int> cell_of(Vec2 p);
// Shooter position at the last frame. The play must already be oriented.
Vec2 shot_location(const Play& play);

// role 0 keeps every play.
CourtGrid heatmap_raw(const std::vector<Play>& plays, int role = 0);
// made_probability[i] is the model's made probability for plays[i].
CourtGrid heatmap_model(const std::vector<Play>& plays, const std::vector<double>& made_probability);

// Spearman rank correlation (average ranks for ties). Returns NaN for fewer than two points
// or a constant input.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
// Correlation between cell-center distance to the attacked hoop and cell value over populated cells.
double distance_trend(const CourtGrid& grid, std::size_t min_attempts = 1);

inline constexpr int kHistogramBins = 20;

struct Histogram {
    int role = 0;  // 0 means all plays
    std::vector<std::size_t> bins = std::vector<std::size_t>(kHistogramBins, 0);
    std::size_t count = 0;
    double mean = 0.0;

    std::string to_csv() const;
};

// probs is [N, 10] softmax output. A play enters the histogram when its predicted role equals
// `role` (0 = all); its value is the made share of the predicted role pair.
Histogram probability_histogram(const nn::Tensor<float>& probs, int role = 0);

struct ActivationResult {
    raster::TrajectoryImage image;
    std::vector<double> trace;  // activation before the first step, then after every step
    bool degenerate = false;    // gradient stayed zero for every restart
    int restarts = 0;
};

struct ActivationOptions {
    int conv_layer = 1;  // 1-based index among the image trunk's conv layers
    int filter = 0;
    int steps = 200;
    double step_size = 0.05;
    std::uint64_t seed = 0;
    int max_restarts = 3;
    double init_high = 0.1;
};

// Gradient ascent on the network input with frozen weights. The objective is the mean of the
// filter's post-ReLU map in eval mode. Steps are RMS-normalised; pixels are clamped to [0, 1].
ActivationResult maximize_activation(nn::Network<float>& net, const ActivationOptions& opts);

struct SsimSpec {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;

    void check() const;
};

// Mean SSIM over all fully contained windows of two single-channel images.
double ssim(const raster::TrajectoryImage& a, const raster::TrajectoryImage& b, const SsimSpec& spec = {});
double ssim(const std::vector<float>& a, const std::vector<float>& b, int height, int width, const SsimSpec& spec = {});

// Keeps the rows whose extent reaches past mid-court (x > 47 ft), the attacked half after
// orientation. Idempotent.
raster::TrajectoryImage half_court_crop(const raster::TrajectoryImage& img);

// Offense, ball and defense occupancy at the shot frame over all plays, each channel divided
// by its maximum count. Plays must be oriented.
raster::TrajectoryImage occupancy_image(const std::vector<Play>& plays, int scale);

// Channel-group projection of an 11-channel image: offense max, ball, defense max.
raster::TrajectoryImage group_projection(const raster::TrajectoryImage& img11);

enum class Group { Offense = 0, Ball = 1, Defense = 2 };
std::string to_string(Group g);

struct FilterComparison {
    std::string filter;               // label for the row
    raster::TrajectoryImage image;    // 3-channel group projection of the filter image
    std::vector<Group> targets;       // groups compared; several are averaged
};

struct SsimRow {
    std::string filter;
    std::string target;  // groups joined with '+'
    double ssim_half = 0.0;
    double ssim_full = 0.0;
};

// Compares each filter group channel with the matching history channel at full and half court.
std::vector<SsimRow> compare_filters_to_history(const std::vector<FilterComparison>& filters,
                                                const raster::TrajectoryImage& history, const SsimSpec& spec = {});
// Header: filter,target,ssim_half,ssim_full
std::string ssim_table_csv(const std::vector<SsimRow>& rows);

}  // namespace courtraster::analysis
