#include "courtraster/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "courtraster/features.hpp"
#include "courtraster/play_io.hpp"
#include "courtraster/segmentation.hpp"

namespace courtraster::harness {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kStageOrder = {"synth", "segment", "rasterize", "featurize", "train", "eval"};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write failed: " + p.string());
}

bool stamp_matches(const fs::path& stamp, const nlohmann::json& key) {
    if (!fs::exists(stamp)) return false;
    try {
        return nlohmann::json::parse(read_file(stamp)) == key;
    } catch (const std::exception&) {
        return false;
    }
}

nlohmann::json gen_json(const synthgen::GenConfig& g) {
    return {{"n_plays", g.n_plays},     {"seed", g.seed},
            {"fps", g.fps},             {"noise_std", g.noise_std},
            {"role_offsets", g.role_offsets}, {"a", g.coeffs.a},
            {"b", g.coeffs.b},          {"c", g.coeffs.c},
            {"referees", g.referees},   {"frames_per_play", g.frames_per_play}};
}

float f32(double v) { return static_cast<float>(v); }

Play quantize(Play p) {
    for (auto& f : p.frames) {
        for (auto& v : f) {
            v.x = f32(v.x);
            v.y = f32(v.y);
            v.z = f32(v.z);
        }
    }
    p.game_clock = f32(p.game_clock);
    return p;
}

template <class F>
auto run_stage(const std::string& name, std::map<std::string, double>& timings, F&& body) {
    const auto t0 = Clock::now();
    try {
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            timings[name] += seconds_since(t0);
        } else {
            auto r = body();
            timings[name] += seconds_since(t0);
            return r;
        }
    } catch (const std::exception& e) {
        throw Error("stage '" + name + "' failed: " + e.what());
    }
}

std::size_t stage_index(const std::string& s) {
    const auto it = std::find(kStageOrder.begin(), kStageOrder.end(), s);
    if (it == kStageOrder.end()) throw ConfigError("unknown stage '" + s + "'");
    return static_cast<std::size_t>(it - kStageOrder.begin());
}

ModelRun parse_model_run(const std::string& s) {
    ModelRun m;
    const auto colon = s.find_first_of(":-");  // "cnn:rgb" and the id form "cnn-rgb" are both accepted
    m.model = nn::model_kind_from_string(s.substr(0, colon));
    if (colon != std::string::npos) m.representation = representation_from_string(s.substr(colon + 1));
    if (m.model == nn::ModelKind::Ffn && colon != std::string::npos) {
        throw ConfigError("model '" + s + "': the ffn takes no image representation");
    }
    return m;
}

std::string model_run_string(const ModelRun& m) {
    if (m.model == nn::ModelKind::Ffn) return "ffn";
    return nn::to_string(m.model) + ":" + to_string(m.representation);
}

void reject_unknown(const toml::table& t, const std::set<std::string>& allowed, const std::string& where) {
    for (auto&& [k, v] : t) {
        if (!allowed.count(std::string(k.str()))) throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + where);
    }
}

template <class T>
void read_value(const toml::table& t, const char* key, T& out) {
    const auto* node = t.get(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
        auto v = node->value<bool>();
        if (!v) throw ConfigError(std::string("'") + key + "' must be a boolean");
        out = *v;
    } else if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, fs::path>) {
        auto v = node->value<std::string>();
        if (!v) throw ConfigError(std::string("'") + key + "' must be a string");
        out = *v;
    } else if constexpr (std::is_floating_point_v<T>) {
        auto v = node->value<double>();
        if (!v) throw ConfigError(std::string("'") + key + "' must be a number");
        out = static_cast<T>(*v);
    } else {
        auto v = node->value<std::int64_t>();
        if (!v || *v < 0) throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
        out = static_cast<T>(*v);
    }
}

template <class T>
std::optional<std::vector<T>> read_array(const toml::table& t, const char* key) {
    const auto* node = t.get(key);
    if (!node) return std::nullopt;
    const auto* arr = node->as_array();
    if (!arr) throw ConfigError(std::string("'") + key + "' must be an array");
    std::vector<T> out;
    for (const auto& e : *arr) {
        if constexpr (std::is_same_v<T, std::string>) {
            auto v = e.value<std::string>();
            if (!v) throw ConfigError(std::string("'") + key + "' must hold strings");
            out.push_back(*v);
        } else if constexpr (std::is_floating_point_v<T>) {
            auto v = e.value<double>();
            if (!v) throw ConfigError(std::string("'") + key + "' must hold numbers");
            out.push_back(static_cast<T>(*v));
        } else {
            auto v = e.value<std::int64_t>();
            if (!v || *v < 0) throw ConfigError(std::string("'") + key + "' must hold non-negative integers");
            out.push_back(static_cast<T>(*v));
        }
    }
    return out;
}

struct SplitCounts {
    std::size_t train, val;
};

SplitCounts split_sizes(const RunConfig& cfg, std::size_t n) {
    if (cfg.n_train || cfg.n_val) return {cfg.n_train, cfg.n_val};
    const auto d = static_cast<double>(n);
    return {static_cast<std::size_t>(std::llround(0.72 * d)), static_cast<std::size_t>(std::llround(0.14 * d))};
}

void log(const RunConfig& cfg, const std::string& msg) {
    if (cfg.verbose) std::cerr << "[courtraster] " << msg << std::endl;
}

}  // namespace

std::string to_string(Representation r) {
    switch (r) {
        case Representation::Gray: return "gray";
        case Representation::Rgb: return "rgb";
        case Representation::Eleven: return "11ch";
    }
    return "?";
}

Representation representation_from_string(const std::string& s) {
    if (s == "gray" || s == "1") return Representation::Gray;
    if (s == "rgb" || s == "3") return Representation::Rgb;
    if (s == "11ch" || s == "11") return Representation::Eleven;
    throw ConfigError("unknown representation '" + s + "' (expected gray, rgb or 11ch)");
}

int channel_count(Representation r) {
    switch (r) {
        case Representation::Gray: return 1;
        case Representation::Rgb: return 3;
        case Representation::Eleven: return 11;
    }
    return 0;
}

std::string ModelRun::id() const {
    if (model == nn::ModelKind::Ffn) return "ffn";
    return nn::to_string(model) + "-" + to_string(representation);
}

void RunConfig::check() const {
    gen.check();
    train.check();
    if (scale < 1) throw ConfigError("scale must be >= 1");
    if (!(fade_floor >= 0 && fade_floor < 1)) throw ConfigError("fade_floor must be in [0, 1)");
    if (!(combined_dropout >= 0 && combined_dropout < 1)) throw ConfigError("combined_dropout must be in [0, 1)");
    if (stages.empty()) throw ConfigError("no stages requested");
    std::size_t last = 0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::size_t k = stage_index(stages[i]);
        if (i && k <= last) throw ConfigError("stages must be listed once each in pipeline order");
        last = k;
    }
    if (train_seeds.empty()) throw ConfigError("at least one training seed is required");
    if (n_train && n_train + n_val > static_cast<std::size_t>(gen.n_plays)) {
        throw ConfigError("n_train + n_val exceeds n_plays");
    }
    const bool trains = std::find(stages.begin(), stages.end(), "train") != stages.end() ||
                        std::find(stages.begin(), stages.end(), "eval") != stages.end();
    if (trains && models.empty()) throw ConfigError("train/eval stages need at least one model");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json models_j = nlohmann::json::array();
    for (const auto& m : models) models_j.push_back(model_run_string(m));
    return {{"preset", preset},
            {"seed", seed},
            {"stages", stages},
            {"data", gen_json(gen)},
            {"scale", scale},
            {"fade_floor", fade_floor},
            {"n_train", n_train},
            {"n_val", n_val},
            {"models", models_j},
            {"train_seeds", train_seeds},
            {"train",
             {{"lr", train.lr}, {"batch_size", train.batch_size}, {"epochs", train.epochs}, {"patience", train.patience}}},
            {"ffn_hidden", ffn_hidden},
            {"cnn_filters", cnn_filters},
            {"cnn_dense", cnn_dense},
            {"combined_hidden", combined_hidden},
            {"combined_dropout", combined_dropout}};
}

RunConfig preset(const std::string& name) {
    RunConfig c;
    c.preset = name;
    const ModelRun ffn{nn::ModelKind::Ffn, Representation::Eleven};
    const ModelRun cnn11{nn::ModelKind::Cnn, Representation::Eleven};
    const ModelRun cnn_rgb{nn::ModelKind::Cnn, Representation::Rgb};
    const ModelRun cnn_gray{nn::ModelKind::Cnn, Representation::Gray};
    const ModelRun combined{nn::ModelKind::Combined, Representation::Eleven};
    if (name == "ci") {
        c.gen.n_plays = 2000;
        c.scale = 2;
        c.train.epochs = 5;
        c.models = {ffn, cnn11, combined};
        c.train_seeds = {1};
    } else if (name == "full") {
        c.gen.n_plays = 8000;
        c.n_train = 6000;
        c.n_val = 1000;
        c.scale = 1;
        c.train.epochs = 30;
        c.models = {ffn, cnn11, cnn_rgb, cnn_gray, combined};
        c.train_seeds = {1, 2, 3};
    } else if (name == "ablation" || name == "acceptance") {
        c.gen.n_plays = 8000;
        c.n_train = 6000;
        c.n_val = 1000;
        c.scale = 2;
        c.train.epochs = 12;
        c.models = name == "ablation" ? std::vector<ModelRun>{cnn11, cnn_rgb, cnn_gray}
                                      : std::vector<ModelRun>{ffn, cnn11, cnn_rgb, cnn_gray, combined};
        c.train_seeds = {1, 2, 3};
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected ci, full, ablation or acceptance)");
    }
    c.gen.seed = c.seed;
    c.out_dir = "run-" + name;
    return c;
}

RunConfig parse_config(const std::string& text) {
    toml::table t;
    try {
        t = toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw ConfigError(std::string("TOML: ") + std::string(e.description()));
    }
    reject_unknown(t, {"preset", "seed", "out_dir", "stages", "verbose", "data", "train", "model"}, "config");
    std::string name = "ci";
    read_value(t, "preset", name);
    RunConfig c = preset(name);
    read_value(t, "seed", c.seed);
    c.gen.seed = c.seed;
    read_value(t, "out_dir", c.out_dir);
    read_value(t, "verbose", c.verbose);
    if (auto s = read_array<std::string>(t, "stages")) c.stages = *s;
    if (const auto* d = t.get_as<toml::table>("data")) {
        reject_unknown(*d, {"n_plays", "noise_std", "frames_per_play", "referees", "role_offsets", "a", "b", "c", "scale",
                            "fade_floor", "n_train", "n_val", "write_tracking_csv"},
                       "[data]");
        read_value(*d, "n_plays", c.gen.n_plays);
        read_value(*d, "noise_std", c.gen.noise_std);
        read_value(*d, "frames_per_play", c.gen.frames_per_play);
        read_value(*d, "referees", c.gen.referees);
        read_value(*d, "a", c.gen.coeffs.a);
        read_value(*d, "b", c.gen.coeffs.b);
        read_value(*d, "c", c.gen.coeffs.c);
        if (auto r = read_array<double>(*d, "role_offsets")) {
            if (r->size() != 5) throw ConfigError("role_offsets needs 5 values");
            std::copy(r->begin(), r->end(), c.gen.role_offsets.begin());
        }
        read_value(*d, "scale", c.scale);
        read_value(*d, "fade_floor", c.fade_floor);
        read_value(*d, "n_train", c.n_train);
        read_value(*d, "n_val", c.n_val);
        read_value(*d, "write_tracking_csv", c.write_tracking_csv);
    }
    if (const auto* tr = t.get_as<toml::table>("train")) {
        reject_unknown(*tr, {"lr", "batch_size", "epochs", "patience", "seeds"}, "[train]");
        read_value(*tr, "lr", c.train.lr);
        read_value(*tr, "batch_size", c.train.batch_size);
        read_value(*tr, "epochs", c.train.epochs);
        read_value(*tr, "patience", c.train.patience);
        if (auto s = read_array<std::uint64_t>(*tr, "seeds")) c.train_seeds = *s;
    }
    if (const auto* m = t.get_as<toml::table>("model")) {
        reject_unknown(*m, {"runs", "ffn_hidden", "cnn_filters", "cnn_dense", "combined_hidden", "combined_dropout"},
                       "[model]");
        if (auto runs = read_array<std::string>(*m, "runs")) {
            c.models.clear();
            for (const auto& r : *runs) c.models.push_back(parse_model_run(r));
        }
        if (auto h = read_array<std::size_t>(*m, "ffn_hidden")) c.ffn_hidden = *h;
        read_value(*m, "cnn_filters", c.cnn_filters);
        read_value(*m, "cnn_dense", c.cnn_dense);
        read_value(*m, "combined_hidden", c.combined_hidden);
        read_value(*m, "combined_dropout", c.combined_dropout);
    }
    c.check();
    return c;
}

RunConfig load_config(const fs::path& path) { return parse_config(read_file(path)); }

nlohmann::json MetricsRecord::to_json() const {
    return {{"model", model},       {"representation", representation}, {"split", split},
            {"log_loss", log_loss}, {"error_rate", error_rate},         {"seed", seed}};
}

std::string metrics_json(const std::vector<MetricsRecord>& metrics) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& m : metrics) a.push_back(m.to_json());
    return nlohmann::json{{"records", a}}.dump(2) + "\n";
}

std::vector<MetricsRecord> parse_metrics_json(const std::string& text) {
    std::vector<MetricsRecord> out;
    try {
        const auto j = nlohmann::json::parse(text);
        for (const auto& r : j.at("records")) {
            MetricsRecord m;
            m.model = r.at("model").get<std::string>();
            m.representation = r.at("representation").get<std::string>();
            m.split = r.at("split").get<std::string>();
            m.log_loss = r.at("log_loss").get<double>();
            m.error_rate = r.at("error_rate").get<double>();
            m.seed = r.at("seed").get<std::uint64_t>();
            out.push_back(m);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("metrics JSON: ") + e.what());
    }
    return out;
}

nn::Dataset build_dataset(const std::vector<LabeledPlay>& plays, Representation rep, int scale, double fade_floor,
                          bool with_images, bool with_features) {
    nn::Dataset ds;
    const std::size_t n = plays.size();
    const raster::FadeSpec fade{fade_floor};
    if (with_images) {
        const int ch = channel_count(rep);
        const auto rows = static_cast<std::size_t>(raster::court_rows(scale));
        const auto cols = static_cast<std::size_t>(raster::court_cols(scale));
        ds.images = nn::Tensor<float>({n, static_cast<std::size_t>(ch), rows, cols});
        for (std::size_t i = 0; i < n; ++i) {
            const auto img = raster::rasterize(plays[i].play, ch, fade, scale);
            std::copy(img.data.begin(), img.data.end(), ds.images.sample(i));
        }
    }
    if (with_features) {
        ds.features = nn::Tensor<float>({n, static_cast<std::size_t>(features::kFeatureCount)});
        for (std::size_t i = 0; i < n; ++i) {
            const auto fv = features::extract_features(plays[i].play);
            std::transform(fv.values.begin(), fv.values.end(), ds.features.sample(i), f32);
        }
    }
    ds.labels.reserve(n);
    for (const auto& p : plays) ds.labels.push_back(p.play.label());
    return ds;
}

std::vector<LabeledPlay> make_plays(const RunConfig& cfg, nlohmann::json* segment_report) {
    const fs::path plays_path = cfg.out_dir / "plays.bin";
    const fs::path truth_path = cfg.out_dir / "truth.csv";
    const fs::path stamp = cfg.out_dir / "plays.stamp.json";
    const nlohmann::json key = {{"data", gen_json(cfg.gen)}, {"write_tracking_csv", cfg.write_tracking_csv}};
    std::vector<LabeledPlay> out;
    if (stamp_matches(stamp, key) && fs::exists(plays_path) && fs::exists(truth_path)) {
        auto plays = load_plays(plays_path);
        auto truth = synthgen::parse_truth_csv(read_file(truth_path));
        if (plays.size() != truth.size()) throw DataError("cached plays and truth rows differ in count");
        for (std::size_t i = 0; i < plays.size(); ++i) out.push_back({std::move(plays[i]), truth[i]});
        if (segment_report && fs::exists(cfg.out_dir / "segment.json")) {
            *segment_report = nlohmann::json::parse(read_file(cfg.out_dir / "segment.json"));
        }
        log(cfg, "reusing " + std::to_string(out.size()) + " cached plays");
        return out;
    }
    fs::create_directories(cfg.out_dir);
    auto game = synthgen::generate_games(cfg.gen);
    if (cfg.write_tracking_csv) write_file(cfg.out_dir / "tracking.csv", ingest::write_tracking(game.frames));
    auto seg = segmentation::segment_game(game.frames);
    std::map<std::size_t, const synthgen::PlantedScene*> by_frame;
    for (const auto& s : game.scenes) by_frame[s.shot_frame] = &s;
    std::vector<Play> plays;
    std::vector<synthgen::PlantedScene> truth;
    for (auto& p : seg.plays) {
        const auto it = by_frame.find(p.shot_frame);
        if (it == by_frame.end()) throw DataError("segmented play at frame " + std::to_string(p.shot_frame) + " has no planted scene");
        out.push_back({quantize(raster::orient_play(p)), *it->second});
        plays.push_back(out.back().play);
        truth.push_back(out.back().truth);
    }
    save_plays(plays_path, plays);
    write_file(truth_path, synthgen::write_truth_csv(truth));
    write_file(cfg.out_dir / "segment.json", seg.report.to_json() + "\n");
    write_file(stamp, key.dump(2) + "\n");
    if (segment_report) *segment_report = nlohmann::json::parse(seg.report.to_json());
    log(cfg, "generated " + std::to_string(game.scenes.size()) + " scenes, kept " + std::to_string(out.size()) + " plays");
    return out;
}

nn::ModelSpec model_spec(const RunConfig& cfg, const ModelRun& run) {
    const auto rows = static_cast<std::size_t>(raster::court_rows(cfg.scale));
    const auto cols = static_cast<std::size_t>(raster::court_cols(cfg.scale));
    const auto ch = static_cast<std::size_t>(channel_count(run.representation));
    switch (run.model) {
        case nn::ModelKind::Ffn: return nn::build_ffn(features::kFeatureCount, cfg.ffn_hidden);
        case nn::ModelKind::Cnn: return nn::build_cnn(ch, rows, cols, cfg.cnn_filters, 3, cfg.cnn_dense);
        case nn::ModelKind::Combined:
            return nn::build_combined(nn::build_cnn(ch, rows, cols, cfg.cnn_filters, 3, cfg.cnn_dense),
                                      nn::build_ffn(features::kFeatureCount, cfg.ffn_hidden), cfg.combined_hidden,
                                      cfg.combined_dropout);
    }
    throw ConfigError("unknown model kind");
}

RunResult run_pipeline(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    cfg.gen.seed = cfg.seed;
    cfg.check();
    const std::size_t last = stage_index(cfg.stages.back());
    std::map<std::string, double> timings;
    RunResult res;
    res.config = cfg;
    fs::create_directories(cfg.out_dir);

    nlohmann::json seg_report;
    res.plays = run_stage("segment", timings, [&] { return make_plays(cfg, &seg_report); });
    if (last < stage_index("rasterize")) return res;

    const auto counts = split_sizes(cfg, res.plays.size());
    if (counts.train + counts.val > res.plays.size()) {
        throw DataError("only " + std::to_string(res.plays.size()) + " plays survived segmentation; split needs " +
                        std::to_string(counts.train + counts.val) + " plus a test set");
    }
    // Split on labels alone so every representation sees the same rows.
    nn::Dataset labels_only;
    for (const auto& p : res.plays) labels_only.labels.push_back(p.play.label());
    const auto rows = nn::split_counts(labels_only, counts.train, counts.val, cfg.seed);
    res.split.train_rows = rows.train_rows;
    res.split.val_rows = rows.val_rows;
    res.split.test_rows = rows.test_rows;

    std::vector<Representation> reps;
    bool need_features = last >= stage_index("featurize");
    for (const auto& m : cfg.models) {
        if (m.model != nn::ModelKind::Ffn && std::find(reps.begin(), reps.end(), m.representation) == reps.end()) {
            reps.push_back(m.representation);
        }
        if (m.model != nn::ModelKind::Cnn) need_features = true;
    }
    if (reps.empty() && last == stage_index("rasterize")) reps.push_back(Representation::Eleven);

    std::map<Representation, nn::Split> splits;
    run_stage("rasterize", timings, [&] {
        for (auto rep : reps) {
            const auto ds = build_dataset(res.plays, rep, cfg.scale, cfg.fade_floor, true, false);
            nn::Split s;
            s.train = ds.subset(rows.train_rows);
            s.val = ds.subset(rows.val_rows);
            s.test = ds.subset(rows.test_rows);
            splits[rep] = std::move(s);
        }
        const fs::path prev = cfg.out_dir / "previews";
        fs::create_directories(prev);
        for (std::size_t i = 0; i < std::min<std::size_t>(3, res.plays.size()); ++i) {
            const auto img = raster::rasterize(res.plays[i].play, 11, raster::FadeSpec{cfg.fade_floor}, cfg.scale);
            raster::write_ppm(raster::to_rgb_preview(img), prev / ("play" + std::to_string(i) + ".ppm"));
        }
    });
    if (last < stage_index("featurize")) return res;

    run_stage("featurize", timings, [&] {
        if (!need_features) return;
        auto ds = build_dataset(res.plays, Representation::Eleven, cfg.scale, cfg.fade_floor, false, true);
        save_tensor(cfg.out_dir / "features.tnsr", to_tensor_data(ds.features));
        nn::Tensor<float> labels({ds.size()});
        std::transform(ds.labels.begin(), ds.labels.end(), labels.data.begin(), [](int l) { return static_cast<float>(l); });
        save_tensor(cfg.out_dir / "labels.tnsr", to_tensor_data(labels));
        res.split.train = ds.subset(rows.train_rows);
        res.split.val = ds.subset(rows.val_rows);
        res.split.test = ds.subset(rows.test_rows);
        res.scaler = nn::FeatureScaler::fit(res.split.train.features);
        res.scaler.apply(res.split.train.features);
        res.scaler.apply(res.split.val.features);
        res.scaler.apply(res.split.test.features);
    });
    if (!reps.empty()) {
        auto& first = splits.at(reps.front());
        res.split.train.images = first.train.images;
        res.split.val.images = first.val.images;
        res.split.test.images = first.test.images;
        if (res.split.train.labels.empty()) {
            res.split.train.labels = first.train.labels;
            res.split.val.labels = first.val.labels;
            res.split.test.labels = first.test.labels;
        }
    }
    if (last < stage_index("train")) return res;

    const auto assemble = [&](const ModelRun& m, int which) {
        nn::Dataset d;
        const nn::Dataset* feat = which == 0 ? &res.split.train : which == 1 ? &res.split.val : &res.split.test;
        if (m.model != nn::ModelKind::Cnn) d.features = feat->features;
        if (m.model != nn::ModelKind::Ffn) {
            const auto& s = splits.at(m.representation);
            d.images = which == 0 ? s.train.images : which == 1 ? s.val.images : s.test.images;
        }
        d.labels = feat->labels;
        return d;
    };

    std::map<std::string, double> model_times;
    for (const auto& m : cfg.models) {
        const auto spec = model_spec(cfg, m);
        const nn::Dataset train_set = assemble(m, 0), val_set = assemble(m, 1);
        for (auto seed : cfg.train_seeds) {
            const std::string tag = m.id() + "-s" + std::to_string(seed);
            const fs::path ckpt_dir = cfg.out_dir / "ckpt" / tag;
            nlohmann::json key = cfg.to_json();
            key.erase("stages");
            key.erase("models");
            key.erase("train_seeds");
            key["model"] = m.id();
            key["train_seed"] = seed;
            TrainedModel tm;
            tm.run = m;
            tm.seed = seed;
            const auto t0 = Clock::now();
            run_stage("train", timings, [&] {
                if (stamp_matches(ckpt_dir / "stamp.json", key)) {
                    const auto ck = nn::load_checkpoint(ckpt_dir);
                    tm.net = std::make_shared<nn::Network<float>>(nn::network_from(ck));
                    for (const auto& h : ck.extra.at("history")) {
                        nn::EpochStats st;
                        st.epoch = h.at("epoch").get<std::size_t>();
                        st.train_loss = h.at("train_loss").get<double>();
                        st.train_error = h.at("train_error").get<double>();
                        st.val_loss = h.at("val_loss").get<double>();
                        st.val_error = h.at("val_error").get<double>();
                        tm.result.history.push_back(st);
                    }
                    tm.result.best_epoch = ck.extra.at("best_epoch").get<std::size_t>();
                    tm.result.best_val_loss = ck.extra.at("best_val_loss").get<double>();
                    log(cfg, tag + ": reusing checkpoint");
                    return;
                }
                tm.net = std::make_shared<nn::Network<float>>(spec);
                tm.net->init(seed);
                nn::TrainConfig tc = cfg.train;
                tc.seed = seed;
                tm.result = nn::train(*tm.net, train_set, val_set, tc, [&](const nn::EpochStats& st) {
                    std::ostringstream msg;
                    msg << tag << " epoch " << st.epoch << " train " << st.train_loss << " val " << st.val_loss << " err "
                        << st.val_error;
                    log(cfg, msg.str());
                });
                auto ck = nn::make_checkpoint(*tm.net, m.model == nn::ModelKind::Cnn ? nn::FeatureScaler{} : res.scaler);
                nlohmann::json hist = nlohmann::json::array();
                for (const auto& st : tm.result.history) {
                    hist.push_back({{"epoch", st.epoch},
                                    {"train_loss", st.train_loss},
                                    {"train_error", st.train_error},
                                    {"val_loss", st.val_loss},
                                    {"val_error", st.val_error}});
                }
                ck.extra = {{"history", hist},
                            {"best_epoch", tm.result.best_epoch},
                            {"best_val_loss", tm.result.best_val_loss},
                            {"model", m.id()},
                            {"representation", m.model == nn::ModelKind::Ffn ? "features" : to_string(m.representation)},
                            {"scale", cfg.scale},
                            {"train_seed", seed}};
                nn::save_checkpoint(ckpt_dir, ck);
                write_file(ckpt_dir / "stamp.json", key.dump(2) + "\n");
            });
            model_times[tag] = seconds_since(t0);
            tm.net->release_scratch();
            res.models.push_back(std::move(tm));
        }
    }
    if (last < stage_index("eval")) return res;

    run_stage("eval", timings, [&] {
        for (auto& tm : res.models) {
            for (int which : {1, 2}) {
                const auto ds = assemble(tm.run, which);
                const auto t0 = Clock::now();
                const auto r = nn::evaluate(*tm.net, ds);
                tm.net->release_scratch();
                MetricsRecord rec;
                rec.model = nn::to_string(tm.run.model);
                rec.representation = tm.run.model == nn::ModelKind::Ffn ? "features" : to_string(tm.run.representation);
                rec.split = which == 1 ? "val" : "test";
                rec.log_loss = r.log_loss;
                rec.error_rate = r.error_rate;
                rec.seed = tm.seed;
                rec.wall_time_s = model_times[tm.run.id() + "-s" + std::to_string(tm.seed)] + seconds_since(t0);
                res.metrics.push_back(rec);
            }
        }
        res.metrics_path = cfg.out_dir / "metrics.json";
        write_file(res.metrics_path, metrics_json(res.metrics));

        nlohmann::json tj = {{"stages", timings}, {"models", model_times}};
        write_file(cfg.out_dir / "timings.json", tj.dump(2) + "\n");

        std::ostringstream sum;
        sum << "plays: " << res.plays.size() << " (train " << rows.train_rows.size() << ", val " << rows.val_rows.size()
            << ", test " << rows.test_rows.size() << ")\n";
        sum << "uniform baseline log loss: " << std::log(10.0) << "\n\n";
        sum << "model      repr      split  seed  log_loss  error_rate\n";
        for (const auto& m : res.metrics) {
            char line[160];
            std::snprintf(line, sizeof line, "%-10s %-9s %-6s %4llu  %8.4f  %10.4f\n", m.model.c_str(), m.representation.c_str(),
                          m.split.c_str(), static_cast<unsigned long long>(m.seed), m.log_loss, m.error_rate);
            sum << line;
        }
        write_file(cfg.out_dir / "summary.txt", sum.str());
    });
    return res;
}

AblationVerdict ablation_report(const std::vector<MetricsRecord>& metrics, const std::string& model, double min_gap) {
    std::map<std::uint64_t, std::map<std::string, double>> by_seed;
    for (const auto& m : metrics) {
        if (m.model == model && m.split == "val") by_seed[m.seed][m.representation] = m.log_loss;
    }
    if (by_seed.empty()) throw ConfigError("ablation_report: no validation rows for model '" + model + "'");
    AblationVerdict v;
    std::vector<double> e, r, g;
    for (const auto& [seed, row] : by_seed) {
        for (const char* rep : {"11ch", "rgb", "gray"}) {
            if (!row.count(rep)) {
                throw ConfigError("ablation_report: seed " + std::to_string(seed) + " lacks a " + rep + " row");
            }
        }
        const double le = row.at("11ch"), lr = row.at("rgb"), lg = row.at("gray");
        e.push_back(le);
        r.push_back(lr);
        g.push_back(lg);
        std::ostringstream line;
        line << "seed " << seed << ": 11ch " << le << " rgb " << lr << " gray " << lg << " (rgb-11ch " << lr - le
             << ", gray-rgb " << lg - lr << ") " << ((le < lr && lr < lg) ? "ordered" : "NOT ordered");
        v.lines.push_back(line.str());
    }
    const auto median = [](std::vector<double> x) {
        std::sort(x.begin(), x.end());
        const std::size_t n = x.size();
        return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
    };
    v.median_eleven = median(e);
    v.median_rgb = median(r);
    v.median_gray = median(g);
    v.pass = v.median_eleven < v.median_rgb && v.median_rgb < v.median_gray && v.median_gray - v.median_eleven >= min_gap;
    std::ostringstream line;
    line << "median: 11ch " << v.median_eleven << " rgb " << v.median_rgb << " gray " << v.median_gray << " (rgb-11ch "
         << v.median_rgb - v.median_eleven << ", gray-rgb " << v.median_gray - v.median_rgb << ", gray-11ch "
         << v.median_gray - v.median_eleven << ") " << (v.pass ? "pass" : "fail");
    v.lines.push_back(line.str());
    return v;
}

}  // namespace courtraster::harness
