#include "courtraster/features.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>

namespace courtraster::features {

namespace {

constexpr const char* kRoleNames[10] = {"o1", "o2", "o3", "o4", "o5", "d1", "d2", "d3", "d4", "d5"};

double bearing(Vec2 origin, Vec2 p) { return std::atan2(p.y - origin.y, p.x - origin.x); }

bool coincident(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

std::vector<std::string> build_names() {
    std::vector<std::string> n;
    n.reserve(kFeatureCount);
    for (auto* r : kRoleNames) {
        n.push_back(std::string(r) + "_x");
        n.push_back(std::string(r) + "_y");
    }
    for (auto* a : {"ball_x", "ball_y", "ball_z"}) n.emplace_back(a);
    n.emplace_back("game_time_left");
    n.emplace_back("quarter_time_left");
    for (auto* r : kRoleNames) {
        for (int w = 0; w < kWindows; ++w) n.push_back(std::string(r) + "_speed_w" + std::to_string(w));
    }
    for (int w = 0; w < kWindows; ++w) n.push_back("ball_speed_w" + std::to_string(w));
    for (int i = 0; i < 10; ++i) {
        for (int j = i + 1; j < 10; ++j) n.push_back(std::string("dist_") + kRoleNames[i] + "_" + kRoleNames[j]);
    }
    for (int i = 0; i < 10; ++i) {
        for (int j = i + 1; j < 10; ++j) n.push_back(std::string("hoop_angle_") + kRoleNames[i] + "_" + kRoleNames[j]);
    }
    for (auto* r : kRoleNames) n.push_back(std::string(r) + "_hoop_dist");
    for (auto* r : kRoleNames) n.push_back(std::string(r) + "_hoop_bearing");
    n.emplace_back("defenders_in_cone");
    n.emplace_back("defenders_within_6ft");
    for (int r = 0; r < 5; ++r) n.push_back(std::string(kRoleNames[r]) + "_possession_s");
    n.emplace_back("players_within_6ft");
    return n;
}

}  // namespace

double angle_at(Vec2 origin, Vec2 a, Vec2 b) {
    if (coincident(origin, a) || coincident(origin, b)) return 0.0;
    double d = std::abs(bearing(origin, a) - bearing(origin, b));
    if (d > std::numbers::pi) d = 2.0 * std::numbers::pi - d;
    return std::clamp(d, 0.0, std::numbers::pi);
}

Scene shot_scene(const Play& play) {
    if (play.frames.empty()) throw ContractError("shot_scene: empty play");
    Scene s;
    const auto& last = play.frames.back();
    for (int p = 0; p < 10; ++p) s.players[static_cast<std::size_t>(p)] = last[static_cast<std::size_t>(player_slot(p))].xy();
    s.ball = last[kBallSlot];
    s.shooter = play.shooter_role - 1;
    return s;
}

int defenders_in_cone(const Scene& scene, double half_angle_deg, double radius) {
    const Vec2 shooter = scene.players[static_cast<std::size_t>(scene.shooter)];
    const bool has_direction = !coincident(shooter, scene.hoop);
    const double limit = half_angle_deg * std::numbers::pi / 180.0;
    int count = 0;
    for (int d = 5; d < 10; ++d) {
        const Vec2 p = scene.players[static_cast<std::size_t>(d)];
        if (distance(p, shooter) > radius) continue;
        if (!has_direction || angle_at(shooter, scene.hoop, p) <= limit) ++count;
    }
    return count;
}

std::array<double, 5> possession_times(const Play& play) {
    std::array<double, 5> out{};
    for (const auto& frame : play.frames) {
        const Vec2 ball = frame[kBallSlot].xy();
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int p = 0; p < 10; ++p) {
            const double d = distance(frame[static_cast<std::size_t>(player_slot(p))].xy(), ball);
            if (d < best_d) {
                best_d = d;
                best = p;
            }
        }
        if (best < 5) out[static_cast<std::size_t>(best)] += 1.0 / kFps;
    }
    return out;
}

std::vector<double> window_speeds(const Play& play) {
    if (play.frames.size() != static_cast<std::size_t>(kPlayFrames)) {
        throw ContractError("window_speeds: play must have 125 frames");
    }
    std::vector<double> out(55, 0.0);
    const auto speed = [](double disp) { return std::min(disp * kFps, kSpeedClamp); };
    for (int w = 0; w < kWindows; ++w) {
        std::array<double, 11> sum{};
        int n = 0;
        for (int t = std::max(1, kFps * w); t < kFps * (w + 1); ++t) {
            const auto& cur = play.frames[static_cast<std::size_t>(t)];
            const auto& prev = play.frames[static_cast<std::size_t>(t - 1)];
            for (int p = 0; p < 10; ++p) {
                const auto s = static_cast<std::size_t>(player_slot(p));
                sum[static_cast<std::size_t>(p)] += speed(distance(cur[s].xy(), prev[s].xy()));
            }
            const Vec3 a = cur[kBallSlot], b = prev[kBallSlot];
            sum[10] += speed(std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z)));
            ++n;
        }
        for (int p = 0; p < 10; ++p) out[static_cast<std::size_t>(p * kWindows + w)] = sum[static_cast<std::size_t>(p)] / n;
        out[static_cast<std::size_t>(50 + w)] = sum[10] / n;
    }
    return out;
}

FeatureVector extract_features(const Play& play) {
    FeatureVector fv;
    fv.shooter_role = play.shooter_role;
    fv.values.assign(kFeatureCount, 0.0);
    auto& v = fv.values;
    const Scene scene = shot_scene(play);
    const Vec2 hoop = scene.hoop;

    for (int p = 0; p < 10; ++p) {
        v[static_cast<std::size_t>(2 * p)] = scene.players[static_cast<std::size_t>(p)].x;
        v[static_cast<std::size_t>(2 * p + 1)] = scene.players[static_cast<std::size_t>(p)].y;
    }
    v[kBallBegin] = scene.ball.x;
    v[kBallBegin + 1] = scene.ball.y;
    v[kBallBegin + 2] = scene.ball.z;
    v[kGameTime] = play.game_clock + kQuarterSeconds * std::max(0, 4 - play.quarter);
    v[kQuarterTime] = play.game_clock;

    const auto speeds = window_speeds(play);
    std::copy(speeds.begin(), speeds.end(), v.begin() + kSpeedBegin);

    int k = 0;
    for (int i = 0; i < 10; ++i) {
        for (int j = i + 1; j < 10; ++j, ++k) {
            const Vec2 a = scene.players[static_cast<std::size_t>(i)];
            const Vec2 b = scene.players[static_cast<std::size_t>(j)];
            v[static_cast<std::size_t>(kPairDistBegin + k)] = distance(a, b);
            v[static_cast<std::size_t>(kPairAngleBegin + k)] = angle_at(hoop, a, b);
        }
    }
    // The baseline normal points from the hoop back up the court (-x).
    const Vec2 normal_ref{hoop.x - 1.0, hoop.y};
    for (int p = 0; p < 10; ++p) {
        const Vec2 a = scene.players[static_cast<std::size_t>(p)];
        v[static_cast<std::size_t>(kHoopDistBegin + p)] = distance(a, hoop);
        v[static_cast<std::size_t>(kHoopAngleBegin + p)] = angle_at(hoop, a, normal_ref);
    }

    v[kConeCount] = defenders_in_cone(scene);
    const Vec2 shooter = scene.players[static_cast<std::size_t>(scene.shooter)];
    int near_def = 0, near_any = 0;
    for (int p = 0; p < 10; ++p) {
        if (p == scene.shooter) continue;
        const bool near = distance(scene.players[static_cast<std::size_t>(p)], shooter) <= kNearRadius;
        if (near) {
            ++near_any;
            if (p >= 5) ++near_def;
        }
    }
    v[kNearDefenders] = near_def;
    v[kNearAnyone] = near_any;

    const auto poss = possession_times(play);
    std::copy(poss.begin(), poss.end(), v.begin() + kPossessionBegin);

    for (double x : v) {
        if (!std::isfinite(x)) throw DataError("extract_features: non-finite feature value");
    }
    return fv;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = build_names();
    return names;
}

std::string layout_json() {
    nlohmann::json j = nlohmann::json::array();
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i) j.push_back({{"index", i}, {"name", names[i]}});
    return j.dump(2);
}

}  // namespace courtraster::features
