// courtraster: one binary for every pipeline stage.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "courtraster/analysis.hpp"
#include "courtraster/features.hpp"
#include "courtraster/harness.hpp"
#include "courtraster/ingest.hpp"
#include "courtraster/nn/checkpoint.hpp"
#include "courtraster/play_io.hpp"
#include "courtraster/raster.hpp"
#include "courtraster/segmentation.hpp"
#include "courtraster/synthgen.hpp"

namespace fs = std::filesystem;
using namespace courtraster;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
}

std::vector<harness::LabeledPlay> oriented(const std::vector<Play>& plays) {
    std::vector<harness::LabeledPlay> out;
    out.reserve(plays.size());
    for (const auto& p : plays) out.push_back({raster::orient_play(p), {}});
    return out;
}

nn::Tensor<float> load_nn_tensor(const fs::path& p) { return nn::from_tensor_data(load_tensor(p)); }

std::vector<int> load_labels(const fs::path& p) {
    const auto t = load_tensor(p);
    std::vector<int> out;
    for (float v : t.values) {
        if (v != std::floor(v) || v < 0 || v >= kNumClasses) throw DataError("labels file holds a non-label value");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

void save_labels(const fs::path& p, const std::vector<int>& labels) {
    TensorData t;
    t.dims = {static_cast<std::uint32_t>(labels.size())};
    for (int l : labels) t.values.push_back(static_cast<float>(l));
    save_tensor(p, t);
}

int scale_for_height(std::size_t height) {
    for (int s = 1; s <= 16; ++s) {
        if (static_cast<std::size_t>(raster::court_rows(s)) == height) return s;
    }
    throw DataError("image height " + std::to_string(height) + " matches no raster scale");
}

harness::Representation rep_for_channels(std::size_t c) {
    if (c == 1) return harness::Representation::Gray;
    if (c == 3) return harness::Representation::Rgb;
    if (c == 11) return harness::Representation::Eleven;
    throw DataError("checkpoint expects " + std::to_string(c) + " image channels");
}

// Rebuilds model inputs for a checkpoint from plays, applying the stored feature scaler.
nn::Dataset inputs_for(const nn::Checkpoint& ck, const std::vector<harness::LabeledPlay>& plays, double fade_floor) {
    const bool img = ck.spec.uses_images(), feat = ck.spec.uses_features();
    const int scale = img ? scale_for_height(ck.spec.image_shape[1]) : 1;
    const auto rep = img ? rep_for_channels(ck.spec.image_shape[0]) : harness::Representation::Eleven;
    auto ds = harness::build_dataset(plays, rep, scale, fade_floor, img, feat);
    if (feat && !ck.scaler.empty()) ck.scaler.apply(ds.features);
    return ds;
}

struct SplitArg {
    double train = 0.72, val = 0.14, test = 0.14;
};

SplitArg parse_split(const std::string& s) {
    SplitArg a;
    char sep1 = 0, sep2 = 0;
    std::istringstream in(s);
    if (!(in >> a.train >> sep1 >> a.val >> sep2 >> a.test) || sep1 != '/' || sep2 != '/') {
        throw ConfigError("--split must look like 0.72/0.14/0.14");
    }
    return a;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"courtraster: shot-outcome prediction from player tracking data"};
    app.require_subcommand(1);

    // synth
    synthgen::GenConfig gen;
    fs::path synth_out = "game.csv", synth_truth = "truth.csv";
    auto* synth = app.add_subcommand("synth", "generate synthetic tracking data with planted shot probabilities");
    synth->add_option("--plays", gen.n_plays, "number of plays")->default_val(100);
    synth->add_option("--seed", gen.seed, "random seed")->default_val(0);
    synth->add_option("--noise", gen.noise_std, "position noise std dev in feet")->default_val(0.5);
    synth->add_option("--referees", gen.referees, "referee rows per frame")->default_val(0);
    synth->add_option("--out", synth_out, "tracking CSV output");
    synth->add_option("--truth", synth_truth, "planted truth CSV output");

    // ingest validate
    fs::path validate_in, validate_report;
    bool validate_strict = false;
    auto* ingest_cmd = app.add_subcommand("ingest", "tracking data checks");
    ingest_cmd->require_subcommand(1);
    auto* validate = ingest_cmd->add_subcommand("validate", "parse and validate a tracking CSV");
    validate->add_option("file", validate_in)->required();
    validate->add_option("--report", validate_report, "JSON report output");
    validate->add_flag("--strict", validate_strict, "exit 1 when any violation is found");

    // segment
    fs::path seg_in, seg_out = "plays.bin", seg_report;
    auto* segment = app.add_subcommand("segment", "cut possessions and shot plays from tracking data");
    segment->add_option("tracking", seg_in)->required();
    segment->add_option("--out", seg_out);
    segment->add_option("--report", seg_report);

    // rasterize
    fs::path ras_in, ras_out = "imgs.tnsr", ras_preview, ras_labels;
    int ras_channels = 11, ras_scale = 1, ras_previews = 10;
    double ras_floor = 0.2;
    auto* rasterize = app.add_subcommand("rasterize", "render plays as faded trajectory images");
    rasterize->add_option("plays", ras_in)->required();
    rasterize->add_option("--channels", ras_channels)->check(CLI::IsMember({1, 3, 11}));
    rasterize->add_option("--fade-floor", ras_floor);
    rasterize->add_option("--scale", ras_scale, "feet per pixel")->check(CLI::PositiveNumber);
    rasterize->add_option("--out", ras_out);
    rasterize->add_option("--labels", ras_labels, "also write labels tensor");
    rasterize->add_option("--preview-dir", ras_preview);
    rasterize->add_option("--previews", ras_previews, "number of preview images");

    // featurize
    fs::path feat_in, feat_out = "feats.tnsr", feat_layout, feat_labels;
    auto* featurize = app.add_subcommand("featurize", "compute the 198 hand-crafted shot features");
    featurize->add_option("plays", feat_in)->required();
    featurize->add_option("--out", feat_out);
    featurize->add_option("--layout", feat_layout);
    featurize->add_option("--labels", feat_labels, "also write labels tensor");

    // train
    std::string tr_model = "cnn", tr_split = "0.72/0.14/0.14";
    fs::path tr_images, tr_features, tr_labels, tr_out = "ckpt";
    nn::TrainConfig tcfg;
    int ffn_depth = 2;
    std::size_t ffn_width = 256;
    double tr_dropout = 0.5;
    bool tr_verbose = false;
    auto* train = app.add_subcommand("train", "train a model");
    train->add_option("--model", tr_model)->check(CLI::IsMember({"ffn", "cnn", "combined"}));
    train->add_option("--images", tr_images);
    train->add_option("--features", tr_features);
    train->add_option("--labels", tr_labels)->required();
    train->add_option("--split", tr_split);
    train->add_option("--seed", tcfg.seed);
    train->add_option("--epochs", tcfg.epochs);
    train->add_option("--lr", tcfg.lr);
    train->add_option("--batch", tcfg.batch_size);
    train->add_option("--patience", tcfg.patience);
    train->add_option("--dropout", tr_dropout, "combined model: dropout on the concatenated branch outputs");
    train->add_option("--ffn-depth", ffn_depth, "hidden layers in the FFN (0 = logistic regression)");
    train->add_option("--ffn-width", ffn_width);
    train->add_option("--out", tr_out);
    train->add_flag("-v,--verbose", tr_verbose);

    // eval
    fs::path ev_ckpt, ev_json, ev_images, ev_features, ev_labels;
    std::string ev_set = "test";
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    eval->add_option("--ckpt", ev_ckpt)->required();
    eval->add_option("--set", ev_set)->check(CLI::IsMember({"train", "val", "test"}));
    eval->add_option("--json", ev_json);
    eval->add_option("--images", ev_images, "override the training images path");
    eval->add_option("--features", ev_features, "override the training features path");
    eval->add_option("--labels", ev_labels, "override the training labels path");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "interpretation artifacts");
    analyze->require_subcommand(1);
    fs::path an_plays, an_ckpt, an_out = "analysis";
    double an_floor = 0.2;
    auto* heat = analyze->add_subcommand("heatmap", "raw and model shot heat maps");
    heat->add_option("--plays", an_plays)->required();
    heat->add_option("--ckpt", an_ckpt, "adds a model heat map");
    heat->add_option("--fade-floor", an_floor);
    heat->add_option("--out", an_out);
    int hist_role = 0;
    auto* hist = analyze->add_subcommand("hist", "per-role made-probability histograms");
    hist->add_option("--plays", an_plays)->required();
    hist->add_option("--ckpt", an_ckpt)->required();
    hist->add_option("--role", hist_role, "0 = one histogram per role plus all")->check(CLI::Range(0, 5));
    hist->add_option("--fade-floor", an_floor);
    hist->add_option("--out", an_out);
    analysis::ActivationOptions act;
    std::vector<int> act_filters = {0};
    auto* maxact = analyze->add_subcommand("maxact", "activation maximization of conv filters");
    maxact->add_option("--ckpt", an_ckpt)->required();
    maxact->add_option("--layer", act.conv_layer, "1-based conv layer");
    maxact->add_option("--filters", act_filters)->delimiter(',');
    maxact->add_option("--steps", act.steps);
    maxact->add_option("--step-size", act.step_size);
    maxact->add_option("--seed", act.seed);
    maxact->add_option("--out", an_out);
    std::vector<std::string> ssim_filters;
    std::vector<fs::path> ssim_pair;
    auto* ssim_cmd = analyze->add_subcommand("ssim", "SSIM of filter images against shot-time occupancy");
    ssim_cmd->add_option("--plays", an_plays, "oriented by the command; needed with --filter");
    ssim_cmd->add_option("--filter", ssim_filters, "IMAGE.tnsr:offense|ball|defense[+...] (repeatable)");
    ssim_cmd->add_option("--pair", ssim_pair, "two single-channel images to compare")->expected(2);
    ssim_cmd->add_option("--out", an_out, "CSV output (table) or directory");

    // run
    fs::path run_config, run_out;
    std::string run_preset = "ci";
    std::uint64_t run_seed = 0;
    bool run_seed_set = false, run_verbose = false, assert_ablation = false;
    double assert_max_loss = 0;
    auto* run = app.add_subcommand("run", "run the full pipeline from a TOML config or preset");
    run->add_option("--config", run_config);
    run->add_option("--preset", run_preset)->check(CLI::IsMember({"ci", "full", "ablation", "acceptance"}));
    run->add_option("--out", run_out);
    run->add_option("--seed", run_seed)->each([&](const std::string&) { run_seed_set = true; });
    run->add_flag("-v,--verbose", run_verbose);
    run->add_flag("--assert-ablation", assert_ablation, "fail unless validation loss orders 11ch < rgb < gray");
    run->add_option("--assert-max-loss", assert_max_loss, "fail unless every validation log loss is below this");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            gen.check();
            const auto game = synthgen::generate_games(gen);
            spit(synth_out, ingest::write_tracking(game.frames));
            spit(synth_truth, synthgen::write_truth_csv(game.scenes));
            std::cout << "wrote " << game.frames.size() << " frames, " << game.scenes.size() << " plays\n";
        } else if (*validate) {
            const auto parsed = ingest::parse_tracking(slurp(validate_in));
            auto report = ingest::validate(parsed.frames);
            report.dropped_frames += parsed.report.dropped_frames;
            report.violations.insert(report.violations.begin(), parsed.report.violations.begin(), parsed.report.violations.end());
            if (!validate_report.empty()) spit(validate_report, report.to_json() + "\n");
            std::cout << report.frame_count << " frames, " << report.violations.size() << " violations, "
                      << report.dropped_frames << " quarantined\n";
            if (validate_strict && !report.clean()) return 1;
        } else if (*segment) {
            const auto parsed = ingest::parse_tracking(slurp(seg_in));
            const auto seg = segmentation::segment_game(parsed.frames);
            save_plays(seg_out, seg.plays);
            if (!seg_report.empty()) spit(seg_report, seg.report.to_json() + "\n");
            std::cout << seg.plays.size() << " plays from " << seg.report.possessions << " possessions\n";
        } else if (*rasterize) {
            const auto plays = oriented(load_plays(ras_in));
            const auto rep = harness::representation_from_string(std::to_string(ras_channels));
            const auto ds = harness::build_dataset(plays, rep, ras_scale, ras_floor, true, false);
            save_tensor(ras_out, nn::to_tensor_data(ds.images));
            if (!ras_labels.empty()) save_labels(ras_labels, ds.labels);
            if (!ras_preview.empty()) {
                fs::create_directories(ras_preview);
                for (int i = 0; i < std::min<int>(ras_previews, static_cast<int>(plays.size())); ++i) {
                    const auto img = raster::rasterize(plays[static_cast<std::size_t>(i)].play, ras_channels,
                                                       raster::FadeSpec{ras_floor}, ras_scale);
                    raster::export_image(img.channels == 11 ? raster::to_rgb_preview(img) : img,
                                         ras_preview / ("play" + std::to_string(i) + (img.channels == 1 ? ".pgm" : ".ppm")));
                }
            }
            std::cout << "rasterized " << plays.size() << " plays to " << nn::shape_string(ds.images.dims) << "\n";
        } else if (*featurize) {
            const auto plays = oriented(load_plays(feat_in));
            const auto ds = harness::build_dataset(plays, harness::Representation::Eleven, 1, 0.2, false, true);
            save_tensor(feat_out, nn::to_tensor_data(ds.features));
            if (!feat_layout.empty()) spit(feat_layout, features::layout_json() + "\n");
            if (!feat_labels.empty()) save_labels(feat_labels, ds.labels);
            std::cout << "featurized " << plays.size() << " plays\n";
        } else if (*train) {
            const auto kind = nn::model_kind_from_string(tr_model);
            nn::Dataset ds;
            ds.labels = load_labels(tr_labels);
            if (kind != nn::ModelKind::Ffn) {
                if (tr_images.empty()) throw ConfigError("--images is required for " + tr_model);
                ds.images = load_nn_tensor(tr_images);
            }
            if (kind != nn::ModelKind::Cnn) {
                if (tr_features.empty()) throw ConfigError("--features is required for " + tr_model);
                ds.features = load_nn_tensor(tr_features);
            }
            const auto sp = parse_split(tr_split);
            auto split = nn::split_fractions(ds, sp.train, sp.val, sp.test, tcfg.seed);
            nn::FeatureScaler scaler;
            if (ds.has_features()) {
                scaler = nn::FeatureScaler::fit(split.train.features);
                scaler.apply(split.train.features);
                scaler.apply(split.val.features);
            }
            if (ffn_depth < 0) throw ConfigError("--ffn-depth must be >= 0");
            const auto ffn = nn::build_ffn(features::kFeatureCount, std::vector<std::size_t>(static_cast<std::size_t>(ffn_depth), ffn_width));
            nn::ModelSpec spec = ffn;
            if (kind != nn::ModelKind::Ffn) {
                const auto& d = ds.images.dims;
                const auto cnn = nn::build_cnn(d[1], d[2], d[3]);
                spec = kind == nn::ModelKind::Cnn ? cnn : nn::build_combined(cnn, ffn, 1000, tr_dropout);
            }
            nn::Network<float> net(spec);
            net.init(tcfg.seed);
            const auto result = nn::train(net, split.train, split.val, tcfg, [&](const nn::EpochStats& st) {
                if (tr_verbose) {
                    std::cerr << "epoch " << st.epoch << " train " << st.train_loss << " val " << st.val_loss << " err "
                              << st.val_error << "\n";
                }
            });
            auto ck = nn::make_checkpoint(net, scaler);
            ck.extra = {{"images", tr_images.string()},     {"features", tr_features.string()},
                        {"labels", tr_labels.string()},     {"split", {sp.train, sp.val, sp.test}},
                        {"split_seed", tcfg.seed},          {"best_epoch", result.best_epoch},
                        {"best_val_loss", result.best_val_loss}};
            nn::save_checkpoint(tr_out, ck);
            std::cout << "best epoch " << result.best_epoch << ", validation log loss " << result.best_val_loss << "\n";
        } else if (*eval) {
            const auto ck = nn::load_checkpoint(ev_ckpt);
            const auto path = [&](const fs::path& override_path, const char* key) {
                return override_path.empty() ? fs::path(ck.extra.value(key, std::string())) : override_path;
            };
            nn::Dataset ds;
            ds.labels = load_labels(path(ev_labels, "labels"));
            if (ck.spec.uses_images()) ds.images = load_nn_tensor(path(ev_images, "images"));
            if (ck.spec.uses_features()) ds.features = load_nn_tensor(path(ev_features, "features"));
            const auto fr = ck.extra.value("split", std::vector<double>{0.72, 0.14, 0.14});
            auto split = nn::split_fractions(ds, fr.at(0), fr.at(1), fr.at(2), ck.extra.value("split_seed", std::uint64_t{0}));
            nn::Dataset& set = ev_set == "train" ? split.train : ev_set == "val" ? split.val : split.test;
            if (ck.spec.uses_features()) ck.scaler.apply(set.features);
            auto net = nn::network_from(ck);
            const auto r = nn::evaluate(net, set);
            const nlohmann::json j = {{"set", ev_set}, {"log_loss", r.log_loss}, {"error_rate", r.error_rate}, {"count", r.count}};
            if (!ev_json.empty()) spit(ev_json, j.dump(2) + "\n");
            std::cout << j.dump() << "\n";
        } else if (*heat) {
            const auto plays = oriented(load_plays(an_plays));
            std::vector<Play> raw;
            for (const auto& p : plays) raw.push_back(p.play);
            fs::create_directories(an_out);
            const auto grid = analysis::heatmap_raw(raw);
            spit(an_out / "heatmap_raw.csv", grid.to_csv());
            raster::write_pgm(grid.to_image(), an_out / "heatmap_raw.pgm");
            nlohmann::json summary = {{"plays", raw.size()}, {"raw_cells", grid.populated()}};
            if (!an_ckpt.empty()) {
                const auto ck = nn::load_checkpoint(an_ckpt);
                auto net = nn::network_from(ck);
                const auto probs = nn::predict(net, inputs_for(ck, plays, an_floor));
                std::vector<double> made;
                for (std::size_t i = 0; i < probs.batch(); ++i) made.push_back(nn::made_probability(probs.sample(i)));
                const auto mg = analysis::heatmap_model(raw, made);
                spit(an_out / "heatmap_model.csv", mg.to_csv());
                raster::write_pgm(mg.to_image(), an_out / "heatmap_model.pgm");
                summary["model_cells"] = mg.populated();
                summary["model_distance_spearman"] = analysis::distance_trend(mg);
            }
            spit(an_out / "heatmap.json", summary.dump(2) + "\n");
            std::cout << summary.dump() << "\n";
        } else if (*hist) {
            const auto plays = oriented(load_plays(an_plays));
            const auto ck = nn::load_checkpoint(an_ckpt);
            auto net = nn::network_from(ck);
            const auto probs = nn::predict(net, inputs_for(ck, plays, an_floor));
            fs::create_directories(an_out);
            nlohmann::json j = nlohmann::json::array();
            std::string csv = "role,bin_low,bin_high,count\n";
            const std::vector<int> roles = hist_role ? std::vector<int>{hist_role} : std::vector<int>{0, 1, 2, 3, 4, 5};
            for (int r : roles) {
                const auto h = analysis::probability_histogram(probs, r);
                j.push_back({{"role", r}, {"count", h.count}, {"mean", h.count ? h.mean : 0.0}, {"bins", h.bins}});
                const auto body = h.to_csv();
                csv += body.substr(body.find('\n') + 1);
            }
            spit(an_out / "histograms.csv", csv);
            spit(an_out / "histograms.json", j.dump(2) + "\n");
            std::cout << j.dump() << "\n";
        } else if (*maxact) {
            const auto ck = nn::load_checkpoint(an_ckpt);
            auto net = nn::network_from(ck);
            fs::create_directories(an_out);
            nlohmann::json j = nlohmann::json::array();
            for (int f : act_filters) {
                act.filter = f;
                const auto r = analysis::maximize_activation(net, act);
                const std::string stem = "layer" + std::to_string(act.conv_layer) + "_filter" + std::to_string(f);
                raster::export_image(r.image, an_out / (stem + (r.image.channels == 11 ? ".tnsr" : r.image.channels == 3 ? ".ppm" : ".pgm")));
                std::string trace = "step,activation\n";
                for (std::size_t i = 0; i < r.trace.size(); ++i) trace += std::to_string(i) + "," + std::to_string(r.trace[i]) + "\n";
                spit(an_out / (stem + "_trace.csv"), trace);
                j.push_back({{"filter", f},
                             {"degenerate", r.degenerate},
                             {"restarts", r.restarts},
                             {"initial", r.trace.front()},
                             {"final", r.trace.back()}});
            }
            spit(an_out / "maxact.json", j.dump(2) + "\n");
            std::cout << j.dump() << "\n";
        } else if (*ssim_cmd) {
            if (!ssim_pair.empty()) {
                const auto a = raster::from_tensor(load_tensor(ssim_pair.at(0)));
                const auto b = raster::from_tensor(load_tensor(ssim_pair.at(1)));
                std::cout << analysis::ssim(a, b) << "\n";
                return 0;
            }
            if (ssim_filters.empty() || an_plays.empty()) throw ConfigError("ssim needs --plays and at least one --filter");
            const auto plays = oriented(load_plays(an_plays));
            std::vector<Play> raw;
            for (const auto& p : plays) raw.push_back(p.play);
            std::vector<analysis::FilterComparison> filters;
            int scale = 1;
            for (const auto& spec : ssim_filters) {
                const auto colon = spec.rfind(':');
                if (colon == std::string::npos) throw ConfigError("--filter needs IMAGE:TARGETS, got '" + spec + "'");
                const fs::path file = spec.substr(0, colon);
                auto img = raster::from_tensor(load_tensor(file));
                scale = scale_for_height(static_cast<std::size_t>(img.height));
                img.scale = scale;
                analysis::FilterComparison fc;
                fc.filter = file.stem().string();
                fc.image = img.channels == 11 ? analysis::group_projection(img) : img;
                std::stringstream targets(spec.substr(colon + 1));
                for (std::string t; std::getline(targets, t, '+');) {
                    if (t == "offense") fc.targets.push_back(analysis::Group::Offense);
                    else if (t == "ball") fc.targets.push_back(analysis::Group::Ball);
                    else if (t == "defense") fc.targets.push_back(analysis::Group::Defense);
                    else throw ConfigError("unknown SSIM target '" + t + "'");
                }
                filters.push_back(std::move(fc));
            }
            const auto rows = analysis::compare_filters_to_history(filters, analysis::occupancy_image(raw, scale));
            const auto csv = analysis::ssim_table_csv(rows);
            if (an_out.extension() == ".csv") spit(an_out, csv);
            else spit(an_out / "ssim.csv", csv);
            std::cout << csv;
        } else if (*run) {
            harness::RunConfig cfg = run_config.empty() ? harness::preset(run_preset) : harness::load_config(run_config);
            if (!run_out.empty()) cfg.out_dir = run_out;
            if (run_seed_set) cfg.seed = run_seed;
            if (run_verbose) cfg.verbose = true;
            const auto res = harness::run_pipeline(cfg);
            if (fs::exists(cfg.out_dir / "summary.txt")) std::cout << slurp(cfg.out_dir / "summary.txt");
            bool ok = true;
            if (assert_max_loss > 0) {
                for (const auto& m : res.metrics) {
                    if (m.split == "val" && !(m.log_loss < assert_max_loss)) {
                        std::cout << "FAIL: " << m.model << "/" << m.representation << " seed " << m.seed << " val log loss "
                                  << m.log_loss << " >= " << assert_max_loss << "\n";
                        ok = false;
                    }
                }
            }
            if (assert_ablation) {
                const auto v = harness::ablation_report(res.metrics);
                for (const auto& l : v.lines) std::cout << l << "\n";
                ok = ok && v.pass;
            }
            return ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "courtraster: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
