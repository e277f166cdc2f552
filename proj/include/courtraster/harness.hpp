#pragma once

// End-to-end pipeline: synthesize -> segment -> rasterize -> featurize -> train -> eval, with
// on-disk caches and deterministic metrics.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "courtraster/nn/checkpoint.hpp"
#include "courtraster/nn/train.hpp"
#include "courtraster/play.hpp"
#include "courtraster/raster.hpp"
#include "courtraster/synthgen.hpp"

namespace courtraster::harness {

enum class Representation { Gray, Rgb, Eleven };

std::string to_string(Representation r);
Representation representation_from_string(const std::string& s);
int channel_count(Representation r);

struct ModelRun {
    nn::ModelKind model = nn::ModelKind::Cnn;
    Representation representation = Representation::Eleven;  // ignored for the FFN

    std::string id() const;  // e.g. "cnn-11ch", "ffn"
};

struct RunConfig {
    std::string preset = "ci";
    std::uint64_t seed = 1;  // data seed; training seeds come from `train_seeds`
    std::filesystem::path out_dir = "run";
    std::vector<std::string> stages = {"synth", "segment", "rasterize", "featurize", "train", "eval"};

    synthgen::GenConfig gen;
    int scale = 2;
    double fade_floor = 0.2;
    std::size_t n_train = 0;  // 0 means 0.72 of the plays
    std::size_t n_val = 0;    // 0 means 0.14 of the plays

    std::vector<ModelRun> models;
    std::vector<std::uint64_t> train_seeds = {1};
    nn::TrainConfig train;
    std::vector<std::size_t> ffn_hidden = {256, 256};
    std::size_t cnn_filters = 32;
    std::size_t cnn_dense = 400;
    std::size_t combined_hidden = 1000;
    double combined_dropout = 0.5;  // dropout on the combined model's concatenated branch outputs

    bool write_tracking_csv = false;
    bool verbose = false;

    void check() const;  // throws ConfigError
    nlohmann::json to_json() const;
};

// "ci", "full", "ablation" or "acceptance". Throws ConfigError for other names.
RunConfig preset(const std::string& name);
// TOML keys override the preset named by `preset` (default "ci").
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& toml_text);

struct MetricsRecord {
    std::string model;
    std::string representation;
    std::string split;
    double log_loss = 0;
    double error_rate = 0;
    double wall_time_s = 0;  // reported in timings.json only, so metrics stay byte-stable
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;  // without wall time
};

// A play matched with the planted truth of the scene that produced it.
struct LabeledPlay {
    Play play;  // oriented, coordinates rounded to f32
    synthgen::PlantedScene truth;
};

struct TrainedModel {
    ModelRun run;
    std::uint64_t seed = 0;
    std::shared_ptr<nn::Network<float>> net;
    nn::TrainResult result;
};

struct RunResult {
    RunConfig config;
    std::vector<LabeledPlay> plays;
    nn::Split split;  // features z-scored with train statistics; images hold the run's first representation
    nn::FeatureScaler scaler;
    std::vector<TrainedModel> models;
    std::vector<MetricsRecord> metrics;
    std::filesystem::path metrics_path;
};

// Builds the dataset for one representation over the given plays (images, features, labels).
nn::Dataset build_dataset(const std::vector<LabeledPlay>& plays, Representation rep, int scale, double fade_floor,
                          bool with_images, bool with_features);

// Generates or loads the matched plays (synth + segment stages).
std::vector<LabeledPlay> make_plays(const RunConfig& cfg, nlohmann::json* segment_report = nullptr);

nn::ModelSpec model_spec(const RunConfig& cfg, const ModelRun& run);

// Runs every configured stage. Writes metrics.json (deterministic), timings.json and summary.txt
// under cfg.out_dir. Stage failures are rethrown as Error naming the stage.
RunResult run_pipeline(const RunConfig& cfg);

std::string metrics_json(const std::vector<MetricsRecord>& metrics);
std::vector<MetricsRecord> parse_metrics_json(const std::string& text);

struct AblationVerdict {
    bool pass = false;
    std::vector<std::string> lines;  // per-seed and median detail
    double median_eleven = 0, median_rgb = 0, median_gray = 0;
};

// Requires validation rows for cnn with gray, rgb and 11ch per seed; missing rows -> ConfigError.
AblationVerdict ablation_report(const std::vector<MetricsRecord>& metrics, const std::string& model = "cnn",
                                double min_gap = 0.0);

}  // namespace courtraster::harness
