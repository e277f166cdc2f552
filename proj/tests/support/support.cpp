#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "courtraster/nn/train.hpp"

namespace courtraster::fixtures {

std::string sample_snapshot_csv() {
    return "Game Time,Real Time,Team,Player,X,Y,Z,Role,Event\n"
           "693,514200,1,101,21.5,33.6,0.0,1,0\n"
           "693,514200,1,102,24.1,14.1,0.0,2,1\n"
           "693,514200,1,103,5.4,9.6,0.0,3,0\n"
           "693,514200,1,104,3.9,45.6,0.0,4,0\n"
           "693,514200,1,105,10.4,3.5,0.0,5,0\n"
           "693,514200,2,201,13.6,31.6,0.0,1,0\n"
           "693,514200,2,202,20.4,15.4,0.0,2,0\n"
           "693,514200,2,203,7.7,13.3,0.0,3,0\n"
           "693,514200,2,204,6.0,38.6,0.0,4,0\n"
           "693,514200,2,205,13.9,13.2,0.0,5,0\n"
           "693,514200,-1,-1,25.1,14.0,3.4,0,0\n"
           "693,514200,-2,1,16.9,49.2,0.0,0,0\n"
           "693,514200,-2,3,78.9,0.5,0.0,0,0\n"
           "693,514200,-2,2,26.0,3.1,0.0,0,0\n";
}

ingest::Frame grid_frame(int owner, double game_time, double real_time) {
    ingest::Frame f;
    f.game_time = game_time;
    f.real_time = real_time;
    Vec2 ball{};
    for (int team : {1, 2}) {
        for (int k = 0; k < 5; ++k) {
            ingest::EntityRecord r;
            r.team = team;
            r.player_id = team * 100 + 1 + k;
            r.x = 10.0 + 15.0 * k;
            r.y = team == 1 ? 10.0 : 40.0;
            r.role = k + 1;
            if (r.player_id == owner) ball = {r.x, r.y};
            f.records.push_back(r);
        }
    }
    f.records.push_back({ingest::kTeamBall, -1, ball.x, ball.y, 4.0, 0, 0});
    return f;
}

std::vector<ingest::Frame> owner_trace(const std::vector<int>& owner_teams, double start_clock) {
    std::vector<ingest::Frame> out;
    out.reserve(owner_teams.size());
    for (std::size_t i = 0; i < owner_teams.size(); ++i) {
        out.push_back(grid_frame(owner_teams[i] == 1 ? 101 : 201, start_clock - static_cast<double>(i) / kFps,
                                 static_cast<double>(i) * 40.0));
    }
    return out;
}

std::vector<int> runs(const std::vector<std::pair<int, int>>& team_frames) {
    std::vector<int> out;
    for (const auto& [team, n] : team_frames) out.insert(out.end(), static_cast<std::size_t>(n), team);
    return out;
}

void mark_shot(std::vector<ingest::Frame>& frames, std::size_t index, int shooter, bool made) {
    for (auto& r : frames.at(index).records) {
        if (r.player_id == shooter && r.is_player()) {
            r.event = made ? segmentation::kEventShotMade : segmentation::kEventShotMissed;
            return;
        }
    }
    throw ContractError("mark_shot: no such player");
}

std::vector<PossessionTrace> possession_traces() {
    return {
        {"short_steal_ignored", runs({{1, 100}, {2, 11}, {1, 20}}), {{0, 130, 1}}},
        {"switch_after_twelve", runs({{1, 50}, {2, 12}}), {{0, 49, 1}, {50, 61, 2}}},
        {"single_team", runs({{1, 30}}), {{0, 29, 1}}},
        {"starts_with_team_two", runs({{2, 5}, {1, 12}, {2, 3}}), {{0, 4, 2}, {5, 19, 1}}},
        {"two_switches", runs({{1, 10}, {2, 12}, {1, 12}}), {{0, 9, 1}, {10, 21, 2}, {22, 33, 1}}},
        {"interrupted_runs_reset", runs({{1, 20}, {2, 11}, {1, 1}, {2, 11}}), {{0, 42, 1}}},
        {"one_frame_possession", runs({{1, 1}, {2, 12}}), {{0, 0, 1}, {1, 12, 2}}},
        {"long_run", runs({{1, 40}, {2, 25}}), {{0, 39, 1}, {40, 64, 2}}},
        {"near_miss_then_switch", runs({{2, 12}, {1, 11}, {2, 4}, {1, 12}}), {{0, 26, 2}, {27, 38, 1}}},
        {"alternating", runs({{1, 13}, {2, 12}, {1, 12}, {2, 12}}), {{0, 12, 1}, {13, 24, 2}, {25, 36, 1}, {37, 48, 2}}},
    };
}

Play make_play(const std::function<Vec3(int t, int slot)>& pos, int shooter_role, bool made) {
    Play p;
    p.shooter_role = shooter_role;
    p.made = made;
    p.frames.resize(kPlayFrames);
    for (int t = 0; t < kPlayFrames; ++t) {
        for (int s = 0; s < kNumSlots; ++s) p.frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = pos(t, s);
    }
    p.slot_ids = {101, 102, 103, 104, 105, -1, 201, 202, 203, 204, 205};
    return p;
}

Play random_play(std::mt19937_64& rng, int shooter_role) {
    std::uniform_real_distribution<double> ux(50.0, 93.0), uy(1.0, 49.0), step(-0.4, 0.4), near(-7.0, 7.0);
    std::uniform_int_distribution<int> role(1, 5);
    Play p;
    p.shooter_role = shooter_role ? shooter_role : role(rng);
    p.made = rng() % 2 == 0;
    p.quarter = static_cast<int>(rng() % 4) + 1;
    p.game_clock = std::uniform_real_distribution<double>(0.0, 720.0)(rng);
    p.frames.resize(kPlayFrames);
    std::array<Vec2, kNumSlots> at{};
    for (int s = 0; s < 5; ++s) at[static_cast<std::size_t>(s)] = {ux(rng), uy(rng)};
    for (int s = 6; s < kNumSlots; ++s) {
        const Vec2 mark = at[static_cast<std::size_t>(rng() % 5)];
        at[static_cast<std::size_t>(s)] = {std::clamp(mark.x + near(rng), 0.0, 94.0), std::clamp(mark.y + near(rng), 0.0, 50.0)};
    }
    const int shooter = p.shooter_role - 1;
    for (int t = 0; t < kPlayFrames; ++t) {
        auto& f = p.frames[static_cast<std::size_t>(t)];
        for (int s = 0; s < kNumSlots; ++s) {
            if (s == kBallSlot) continue;
            auto& a = at[static_cast<std::size_t>(s)];
            a.x = std::clamp(a.x + step(rng), 0.0, 94.0);
            a.y = std::clamp(a.y + step(rng), 0.0, 50.0);
            f[static_cast<std::size_t>(s)] = {a.x, a.y, 0.0};
        }
        const int holder = t < kPlayFrames / 2 ? static_cast<int>(rng() % 5) : shooter;
        const Vec2 h = at[static_cast<std::size_t>(holder)];
        f[kBallSlot] = {h.x + 0.5, h.y, 4.0 + 0.01 * t};
    }
    p.slot_ids = {101, 102, 103, 104, 105, -1, 201, 202, 203, 204, 205};
    return p;
}

nn::Tensor<double> conv_reference(const nn::Tensor<double>& x, const nn::Tensor<double>& w, const nn::Tensor<double>& b) {
    const auto N = x.dims[0], C = x.dims[1], H = x.dims[2], W = x.dims[3], F = w.dims[0];
    nn::Tensor<double> y({N, F, H, W});
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t i = 0; i < H; ++i) {
                for (std::size_t j = 0; j < W; ++j) {
                    double s = b.data[f];
                    for (std::size_t c = 0; c < C; ++c) {
                        for (int di = -1; di <= 1; ++di) {
                            for (int dj = -1; dj <= 1; ++dj) {
                                const long r = static_cast<long>(i) + di, q = static_cast<long>(j) + dj;
                                if (r < 0 || q < 0 || r >= static_cast<long>(H) || q >= static_cast<long>(W)) continue;
                                s += w.data[((f * C + c) * 3 + static_cast<std::size_t>(di + 1)) * 3 + static_cast<std::size_t>(dj + 1)] *
                                     x.data[((n * C + c) * H + static_cast<std::size_t>(r)) * W + static_cast<std::size_t>(q)];
                            }
                        }
                    }
                    y.data[((n * F + f) * H + i) * W + j] = s;
                }
            }
        }
    }
    return y;
}

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    double diff = 0, na = 0, nn = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    const double scale = std::max(std::sqrt(na), std::sqrt(nn));
    if (scale == 0) return 0.0;
    return std::sqrt(diff) / scale;
}

namespace {

std::string shape_of(const nn::Shape& s) { return nn::shape_string(s); }

}  // namespace

GradCheck check_layer(nn::Layer<double>& layer, nn::Tensor<double> x, bool train, std::uint64_t seed, double eps) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    nn::Tensor<double> y;
    layer.forward(x, y, train);
    nn::Tensor<double> r(y.dims);
    for (auto& v : r.data) v = g(rng);

    const auto loss = [&]() {
        nn::Tensor<double> out;
        layer.forward(x, out, train);
        double s = 0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out.data[i] * r.data[i];
        return s;
    };

    layer.forward(x, y, train);
    layer.zero_grad();
    nn::Tensor<double> dx;
    layer.backward(x, y, r, &dx);

    GradCheck out;
    out.what = layer.name() + " " + shape_of(x.dims) + (train ? " train" : " eval");
    std::vector<double> numeric(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x.data[i];
        x.data[i] = keep + eps;
        const double up = loss();
        x.data[i] = keep - eps;
        const double down = loss();
        x.data[i] = keep;
        numeric[i] = (up - down) / (2 * eps);
    }
    out.rel_error = relative_error(dx.data, numeric);
    out.checked = x.size();

    for (auto* p : layer.params()) {
        std::vector<double> pn(p->value.size());
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double keep = p->value.data[i];
            p->value.data[i] = keep + eps;
            const double up = loss();
            p->value.data[i] = keep - eps;
            const double down = loss();
            p->value.data[i] = keep;
            pn[i] = (up - down) / (2 * eps);
        }
        out.rel_error = std::max(out.rel_error, relative_error(p->grad.data, pn));
        out.checked += p->value.size();
    }
    return out;
}

GradCheck check_logloss(const nn::Tensor<double>& logits, const std::vector<int>& labels, double eps) {
    nn::Tensor<double> grad;
    nn::softmax_logloss<double>(logits, labels, nullptr, &grad);
    nn::Tensor<double> z = logits;
    std::vector<double> numeric(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double keep = z.data[i];
        z.data[i] = keep + eps;
        const double up = nn::softmax_logloss<double>(z, labels, nullptr, nullptr).loss;
        z.data[i] = keep - eps;
        const double down = nn::softmax_logloss<double>(z, labels, nullptr, nullptr).loss;
        z.data[i] = keep;
        numeric[i] = (up - down) / (2 * eps);
    }
    return {"softmax_logloss " + shape_of(logits.dims), relative_error(grad.data, numeric), z.size()};
}

GradCheck check_network(nn::Network<double>& net, const nn::Tensor<double>* images, const nn::Tensor<double>* features,
                        const std::vector<int>& labels, const std::vector<std::pair<std::size_t, std::size_t>>& probe,
                        double eps) {
    const auto loss = [&]() {
        const auto& logits = net.forward(images, features, true);
        return nn::softmax_logloss<double>(logits, labels, nullptr, nullptr).loss;
    };
    net.zero_grad();
    nn::Tensor<double> grad;
    nn::softmax_logloss<double>(net.forward(images, features, true), labels, nullptr, &grad);
    net.backward(grad);
    auto params = net.params();
    std::vector<double> analytic, numeric;
    const auto central = [&](nn::Param<double>* p, std::size_t k, double h) {
        const double keep = p->value.data[k];
        p->value.data[k] = keep + h;
        const double up = loss();
        p->value.data[k] = keep - h;
        const double down = loss();
        p->value.data[k] = keep;
        return (up - down) / (2 * h);
    };
    for (const auto& [pi, k] : probe) {
        auto* p = params.at(pi);
        const double fd = central(p, k, eps);
        // A ReLU sign flip or max-pool switch inside [-eps, eps] makes the loss non-smooth there; on a
        // smooth loss the eps and eps/2 estimates agree to O(eps^2). Such probes say nothing about the
        // analytic gradient and are skipped.
        if (std::abs(fd - central(p, k, eps / 2)) > 1e-6 * (1 + std::abs(fd))) continue;
        analytic.push_back(p->grad.data.at(k));
        numeric.push_back(fd);
    }
    GradCheck out{"network " + nn::to_string(net.spec().kind), relative_error(analytic, numeric), analytic.size()};
    if (2 * analytic.size() < probe.size()) out.rel_error = std::numeric_limits<double>::infinity();  // mostly kinks
    return out;
}

namespace {

// Values spaced at least 0.05 apart so a 1e-3 perturbation never changes a max or a ReLU sign.
nn::Tensor<double> spaced_tensor(nn::Shape dims, std::mt19937_64& rng) {
    nn::Tensor<double> t(std::move(dims));
    std::vector<double> v(t.size());
    const auto half = static_cast<double>(v.size() / 2);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (static_cast<double>(i) - half + 0.5) * 0.05;  // never exactly 0
    std::shuffle(v.begin(), v.end(), rng);
    t.data = v;
    return t;
}

nn::Tensor<double> normal_tensor(nn::Shape dims, std::mt19937_64& rng, double scale = 1.0) {
    nn::Tensor<double> t(std::move(dims));
    std::normal_distribution<double> g(0.0, scale);
    for (auto& v : t.data) v = g(rng);
    return t;
}

void randomize_params(nn::Layer<double>& layer, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 0.5);
    for (auto* p : layer.params()) {
        for (auto& v : p->value.data) v = g(rng);
    }
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

std::vector<GradCheck> gradient_suite(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<GradCheck> out;

    for (int i = 0; i < 6; ++i) {
        const auto N = pick(rng, 1, 3), C = pick(rng, 1, 4), H = pick(rng, 2, 6), W = pick(rng, 2, 6), F = pick(rng, 1, 4);
        nn::Conv2d<double> conv(C, F);
        randomize_params(conv, rng);
        out.push_back(check_layer(conv, normal_tensor({N, C, H, W}, rng), true, rng()));
    }
    for (int i = 0; i < 5; ++i) {
        const auto N = pick(rng, 1, 3), C = pick(rng, 1, 3), H = pick(rng, 1, 7), W = pick(rng, 1, 7);
        nn::MaxPool2<double> pool;
        out.push_back(check_layer(pool, spaced_tensor({N, C, H, W}, rng), true, rng()));
    }
    for (int i = 0; i < 5; ++i) {
        const auto N = pick(rng, 1, 5), I = pick(rng, 1, 12), O = pick(rng, 1, 10);
        nn::Dense<double> dense(I, O);
        randomize_params(dense, rng);
        out.push_back(check_layer(dense, normal_tensor({N, I}, rng), true, rng()));
    }
    for (int i = 0; i < 3; ++i) {
        const auto N = pick(rng, 2, 4), C = pick(rng, 1, 3), H = pick(rng, 1, 4), W = pick(rng, 2, 4);
        nn::BatchNorm<double> bn(C, true);
        randomize_params(bn, rng);
        out.push_back(check_layer(bn, normal_tensor({N, C, H, W}, rng, 2.0), true, rng()));
    }
    for (int i = 0; i < 3; ++i) {
        const auto N = pick(rng, 2, 6), F = pick(rng, 1, 8);
        nn::BatchNorm<double> bn(F, false);
        randomize_params(bn, rng);
        out.push_back(check_layer(bn, normal_tensor({N, F}, rng, 2.0), true, rng()));
    }
    {
        nn::BatchNorm<double> bn(3, true);
        randomize_params(bn, rng);
        for (auto& v : bn.running_var().data) v = 0.5 + std::abs(v);
        out.push_back(check_layer(bn, normal_tensor({2, 3, 3, 2}, rng), false, rng()));
    }
    for (int i = 0; i < 2; ++i) {
        nn::Relu<double> relu;
        out.push_back(check_layer(relu, spaced_tensor({pick(rng, 1, 3), pick(rng, 2, 9)}, rng), true, rng()));
    }
    {
        nn::Flatten<double> flat;
        out.push_back(check_layer(flat, normal_tensor({2, 3, 2, 2}, rng), true, rng()));
    }
    for (int i = 0; i < 2; ++i) {
        const auto N = pick(rng, 1, 4), F = pick(rng, 2, 12);
        nn::Dropout<double> drop(0.5);
        drop.seed(rng());
        drop.hold_mask(true);
        out.push_back(check_layer(drop, normal_tensor({N, F}, rng), true, rng()));
    }
    for (int i = 0; i < 3; ++i) {
        const auto N = pick(rng, 1, 5);
        std::vector<int> labels(N);
        for (auto& l : labels) l = static_cast<int>(rng() % kNumClasses);
        out.push_back(check_logloss(normal_tensor({N, kNumClasses}, rng, 3.0), labels));
    }

    // Combined model: probe weights in the image branch, the feature branch and the head.
    {
        const auto cnn = nn::build_cnn(2, 6, 5, 3, 1, 6);
        const auto ffn = nn::build_ffn(4, {5});
        nn::Network<double> net(nn::build_combined(cnn, ffn, 7, 0.25));
        net.init(rng());
        net.hold_dropout_masks(true);
        std::normal_distribution<double> g(0.0, 1.0);
        for (auto* p : net.params()) {
            for (auto& v : p->value.data) v += 0.1 * g(rng);
        }
        const std::size_t N = 4;
        auto images = normal_tensor({N, 2, 6, 5}, rng);
        auto feats = normal_tensor({N, 4}, rng);
        std::vector<int> labels{1, 4, 7, 9};
        const auto params = net.params();
        std::vector<std::pair<std::size_t, std::size_t>> probe;
        for (std::size_t i = 0; i < params.size(); ++i) {
            for (int k = 0; k < 3; ++k) probe.emplace_back(i, pick(rng, 0, params[i]->value.size() - 1));
        }
        auto check = check_network(net, &images, &feats, labels, probe);
        check.what = "combined network, both branches";
        out.push_back(check);
    }
    {
        nn::Network<double> net(nn::build_ffn(6, {5, 4}));
        net.init(rng());
        auto feats = normal_tensor({5, 6}, rng);
        std::vector<int> labels{0, 1, 2, 3, 8};
        const auto params = net.params();
        std::vector<std::pair<std::size_t, std::size_t>> probe;
        for (std::size_t i = 0; i < params.size(); ++i) {
            for (std::size_t k = 0; k < params[i]->value.size(); ++k) probe.emplace_back(i, k);
        }
        out.push_back(check_network(net, nullptr, &feats, labels, probe));
    }
    return out;
}

std::vector<int> geometry_indices() {
    std::vector<int> idx;
    for (int i = features::kPositionsBegin; i < features::kBallBegin + 3; ++i) idx.push_back(i);
    for (int i = features::kPairDistBegin; i < features::kPairDistBegin + 90; ++i) idx.push_back(i);
    for (int i = features::kHoopDistBegin; i < features::kHoopDistBegin + 20; ++i) idx.push_back(i);
    for (int i = features::kConeCount; i < features::kFeatureCount; ++i) idx.push_back(i);
    return idx;
}

namespace {

// Unsigned angle between two vectors; 0 when either is zero.
double vec_angle(double ax, double ay, double bx, double by) {
    if ((ax == 0 && ay == 0) || (bx == 0 && by == 0)) return 0.0;
    return std::atan2(std::abs(ax * by - ay * bx), ax * bx + ay * by);
}

}  // namespace

std::vector<double> brute_force_geometry(const Play& play) {
    std::vector<double> v(features::kFeatureCount, std::numeric_limits<double>::quiet_NaN());
    const auto& last = play.frames.back();
    std::vector<Vec2> players;
    for (int s = 0; s < kNumSlots; ++s) {
        if (s != kBallSlot) players.push_back(last[static_cast<std::size_t>(s)].xy());
    }
    const Vec2 hoop{88.75, 25.0};
    for (int p = 0; p < 10; ++p) {
        v[static_cast<std::size_t>(2 * p)] = players[static_cast<std::size_t>(p)].x;
        v[static_cast<std::size_t>(2 * p + 1)] = players[static_cast<std::size_t>(p)].y;
    }
    v[20] = last[kBallSlot].x;
    v[21] = last[kBallSlot].y;
    v[22] = last[kBallSlot].z;

    int k = 0;
    for (int i = 0; i < 10; ++i) {
        for (int j = i + 1; j < 10; ++j, ++k) {
            const Vec2 a = players[static_cast<std::size_t>(i)], b = players[static_cast<std::size_t>(j)];
            v[static_cast<std::size_t>(80 + k)] = std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
            v[static_cast<std::size_t>(125 + k)] = vec_angle(a.x - hoop.x, a.y - hoop.y, b.x - hoop.x, b.y - hoop.y);
        }
    }
    for (int p = 0; p < 10; ++p) {
        const Vec2 a = players[static_cast<std::size_t>(p)];
        v[static_cast<std::size_t>(170 + p)] = std::sqrt((a.x - hoop.x) * (a.x - hoop.x) + (a.y - hoop.y) * (a.y - hoop.y));
        v[static_cast<std::size_t>(180 + p)] = vec_angle(a.x - hoop.x, a.y - hoop.y, -1.0, 0.0);
    }

    const int shooter = play.shooter_role - 1;
    const Vec2 s = players[static_cast<std::size_t>(shooter)];
    const double cone = 15.0 * std::acos(-1.0) / 180.0;
    int in_cone = 0, near_def = 0, near_any = 0;
    for (int p = 0; p < 10; ++p) {
        if (p == shooter) continue;
        const Vec2 d = players[static_cast<std::size_t>(p)];
        const double dist = std::sqrt((d.x - s.x) * (d.x - s.x) + (d.y - s.y) * (d.y - s.y));
        if (dist > 6.0) continue;
        ++near_any;
        if (p < 5) continue;
        ++near_def;
        const bool at_hoop = s.x == hoop.x && s.y == hoop.y;
        if (at_hoop || vec_angle(hoop.x - s.x, hoop.y - s.y, d.x - s.x, d.y - s.y) <= cone) ++in_cone;
    }
    v[190] = in_cone;
    v[191] = near_def;
    v[197] = near_any;

    std::array<int, 5> held{};
    for (const auto& f : play.frames) {
        int best = -1;
        double best_d = 0;
        for (int p = 0; p < 10; ++p) {
            const Vec3 q = f[static_cast<std::size_t>(p < 5 ? p : p + 1)];
            const double d = std::hypot(q.x - f[kBallSlot].x, q.y - f[kBallSlot].y);
            if (best < 0 || d < best_d) {
                best = p;
                best_d = d;
            }
        }
        if (best < 5) ++held[static_cast<std::size_t>(best)];
    }
    for (int r = 0; r < 5; ++r) v[static_cast<std::size_t>(192 + r)] = held[static_cast<std::size_t>(r)] / 25.0;
    return v;
}

}  // namespace courtraster::fixtures
