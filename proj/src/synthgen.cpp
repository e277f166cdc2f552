#include "courtraster/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace courtraster::synthgen {

namespace {

constexpr double kQuarterSeconds = 720.0;
constexpr double kRealTimeOrigin = 514200.0;
constexpr int kPassFlightFrames = 8;
constexpr int kDefenderLag = 4;
constexpr double kNoiseCorrelation = 0.95;
constexpr double kEdge = 0.5;

using Rng = std::mt19937_64;

double clamp_x(double x) { return std::clamp(x, kEdge, kCourtLength - kEdge); }
double clamp_y(double y) { return std::clamp(y, kEdge, kCourtWidth - kEdge); }

Vec2 clamp_court(Vec2 p) { return {clamp_x(p.x), clamp_y(p.y)}; }

// Polar placement around the attacked hoop; angle 0 points straight up the court.
Vec2 from_hoop(double radius, double angle) {
    return clamp_court({kHoopFarX - radius * std::cos(angle), kHoopY + radius * std::sin(angle)});
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
double normal(Rng& rng, double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng); }

// Role-dependent spatial prior for where a player ends the play.
Vec2 sample_final_spot(int role, Rng& rng) {
    switch (role) {
        case 1:  // top of the key
            return from_hoop(uniform(rng, 18.0, 26.0), normal(rng, 0.0, 0.35));
        case 2:  // around the three-point arc
            return from_hoop(normal(rng, 23.5, 1.0), uniform(rng, -1.2, 1.2));
        case 3: {  // low post, tightly concentrated in the paint
            return clamp_court({normal(rng, 85.5, 1.5), normal(rng, kHoopY, 1.5)});
        }
        case 4: {  // elbows
            const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
            return from_hoop(normal(rng, 12.0, 2.5), side * normal(rng, 0.6, 0.3));
        }
        default: {  // wings and corners
            const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
            return from_hoop(normal(rng, 20.0, 2.5), side * uniform(rng, 0.9, 1.5));
        }
    }
}

Vec2 unit_or(Vec2 v, Vec2 fallback) {
    const double n = std::hypot(v.x, v.y);
    if (n < 1e-9) return fallback;
    return {v.x / n, v.y / n};
}

Vec2 rotate(Vec2 v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

double ease(double u) {
    u = std::clamp(u / 0.85, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

struct ArNoise {
    Vec2 state;
    void step(Rng& rng, double sd) {
        const double innov = sd * std::sqrt(1.0 - kNoiseCorrelation * kNoiseCorrelation);
        state.x = kNoiseCorrelation * state.x + normal(rng, 0.0, innov);
        state.y = kNoiseCorrelation * state.y + normal(rng, 0.0, innov);
    }
};

void append_double(std::string& out, double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, r.ptr);
}

}  // namespace

void GenConfig::check() const {
    if (n_plays < 1) throw ConfigError("n_plays must be >= 1");
    if (fps < 1) throw ConfigError("fps must be >= 1");
    if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
    if (referees < 0) throw ConfigError("referees must be >= 0");
    if (frames_per_play < kPlayFrames + 13) {
        throw ConfigError("frames_per_play must leave room for a 125-frame window after possession change");
    }
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double planted_shot_probability(double dist_to_hoop, double min_defender_dist, int role,
                                const GenConfig& cfg) {
    if (role < 1 || role > 5) throw ContractError("planted_shot_probability: role must be in 1..5");
    const auto& k = cfg.coeffs;
    const double z = k.a - k.b * dist_to_hoop + k.c * std::min(min_defender_dist, kDefenderCap) +
                     cfg.role_offsets.at(static_cast<std::size_t>(role - 1));
    return logistic(z);
}

SyntheticGame generate_games(const GenConfig& cfg) {
    cfg.check();
    Rng rng(cfg.seed);
    SyntheticGame game;
    const int L = cfg.frames_per_play;
    const long quarter_frames = static_cast<long>(kQuarterSeconds * cfg.fps);
    game.frames.reserve(static_cast<std::size_t>(cfg.n_plays) * L);
    game.scenes.reserve(static_cast<std::size_t>(cfg.n_plays));

    long quarter_frame = 0;
    long global_frame = 0;
    const auto stamp = [&](ingest::Frame& f) {
        f.game_time = kQuarterSeconds - static_cast<double>(quarter_frame) / cfg.fps;
        f.real_time = kRealTimeOrigin + std::round(1000.0 * static_cast<double>(global_frame) / cfg.fps);
        ++quarter_frame;
        ++global_frame;
    };

    std::vector<std::array<Vec2, 5>> off(static_cast<std::size_t>(L));
    std::vector<std::array<Vec2, 5>> def(static_cast<std::size_t>(L));
    std::vector<Vec3> ball(static_cast<std::size_t>(L));

    for (int k = 0; k < cfg.n_plays; ++k) {
        // Dead-ball frames until the quarter expires if the next play would straddle it.
        if (quarter_frame + L > quarter_frames) {
            const ingest::Frame last = game.frames.back();
            while (quarter_frame < quarter_frames) {
                ingest::Frame f = last;
                for (auto& r : f.records) r.event = 0;
                stamp(f);
                game.frames.push_back(std::move(f));
            }
            quarter_frame = 0;
        }

        const int offense = 1 + (k % 2);
        const int defense = 3 - offense;
        const bool mirrored = uniform(rng, 0.0, 1.0) < 0.5;
        const int shooter_role = 1 + static_cast<int>(rng() % 5);

        std::array<int, 5> off_pid{}, def_pid{};  // by role
        for (int r = 0; r < 5; ++r) {
            off_pid[r] = player_id(offense, r);
            def_pid[r] = player_id(defense, r);
        }
        std::shuffle(off_pid.begin(), off_pid.end(), rng);
        std::shuffle(def_pid.begin(), def_pid.end(), rng);

        // Offense: start somewhere upcourt, converge on the role's final spot.
        std::array<Vec2, 5> start{}, finish{};
        std::array<double, 5> wig_amp{}, wig_phase{}, wig_freq{};
        for (int r = 0; r < 5; ++r) {
            finish[r] = sample_final_spot(r + 1, rng);
            const Vec2 out_dir = unit_or({finish[r].x - kHoopFarX, finish[r].y - kHoopY}, {-1.0, 0.0});
            const Vec2 dir = rotate(out_dir, normal(rng, 0.0, 0.8));
            const double len = uniform(rng, 4.0, 18.0);
            start[r] = clamp_court({finish[r].x + dir.x * len, finish[r].y + dir.y * len});
            wig_amp[r] = uniform(rng, 0.0, 2.0);
            wig_phase[r] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            wig_freq[r] = uniform(rng, 0.5, 1.5);
        }
        std::array<ArNoise, 5> off_noise{}, def_noise{};
        for (int t = 0; t < L; ++t) {
            const double u = static_cast<double>(t) / (L - 1);
            const double e = ease(u);
            for (int r = 0; r < 5; ++r) {
                off_noise[r].step(rng, cfg.noise_std);
                const Vec2 along{finish[r].x - start[r].x, finish[r].y - start[r].y};
                const Vec2 lateral = unit_or({-along.y, along.x}, {0.0, 1.0});
                const double w = wig_amp[r] * std::sin(wig_phase[r] + 2.0 * std::numbers::pi * wig_freq[r] * u) *
                                 (1.0 - e);
                off[t][r] = clamp_court({start[r].x + along.x * e + lateral.x * w + off_noise[r].state.x,
                                         start[r].y + along.y * e + lateral.y * w + off_noise[r].state.y});
            }
        }

        // Defense: each role marks its counterpart, on the hoop side, with lag.
        std::array<double, 5> guard{}, guard_angle{};
        for (int r = 0; r < 5; ++r) {
            guard[r] = (r + 1 == shooter_role) ? uniform(rng, 0.5, 12.0) : uniform(rng, 2.0, 7.0);
            guard_angle[r] = normal(rng, 0.0, 0.4);
        }
        for (int t = 0; t < L; ++t) {
            const int lagged = std::max(0, t - kDefenderLag);
            for (int r = 0; r < 5; ++r) {
                def_noise[r].step(rng, cfg.noise_std);
                const Vec2 mark = off[lagged][r];
                const Vec2 to_hoop = rotate(unit_or({kHoopFarX - mark.x, kHoopY - mark.y}, {1.0, 0.0}),
                                            guard_angle[r]);
                def[t][r] = clamp_court({mark.x + to_hoop.x * guard[r] + def_noise[r].state.x,
                                         mark.y + to_hoop.y * guard[r] + def_noise[r].state.y});
            }
        }

        // Ball: with a handler, optionally one pass to the shooter, then the shot.
        int handler = shooter_role;
        if (uniform(rng, 0.0, 1.0) < 0.7) {
            handler = 1 + static_cast<int>(rng() % 4);
            if (handler >= shooter_role) ++handler;
        }
        int pass_frame = -1;
        if (handler != shooter_role) {
            pass_frame = static_cast<int>(uniform(rng, L / 5.0, static_cast<double>(L - 30)));
        }
        for (int t = 0; t < L; ++t) {
            const double dribble = 1.5 + 1.5 * std::abs(std::sin(t * std::numbers::pi / 12.0));
            int holder = shooter_role;
            if (pass_frame >= 0 && t <= pass_frame) holder = handler;
            if (pass_frame >= 0 && t > pass_frame && t < pass_frame + kPassFlightFrames) {
                const double u = static_cast<double>(t - pass_frame) / kPassFlightFrames;
                const Vec2 a = off[pass_frame][handler - 1];
                const Vec2 b = off[pass_frame + kPassFlightFrames][shooter_role - 1];
                ball[t] = {a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u, 5.0 + 3.0 * std::sin(std::numbers::pi * u)};
                continue;
            }
            const Vec2 p = off[t][holder - 1];
            ball[t] = {p.x, p.y, t == L - 1 ? 7.5 : dribble};
        }

        PlantedScene scene;
        scene.play_index = k;
        scene.offense_team = offense;
        scene.shooter_role = shooter_role;
        scene.shooter_id = off_pid[shooter_role - 1];
        scene.mirrored = mirrored;
        scene.shot_xy = off[L - 1][shooter_role - 1];
        scene.dist_to_hoop = distance(scene.shot_xy, kAttackedHoop);
        double min_def = std::numeric_limits<double>::infinity();
        for (int r = 0; r < 5; ++r) min_def = std::min(min_def, distance(scene.shot_xy, def[L - 1][r]));
        scene.min_defender_dist = min_def;
        scene.probability = planted_shot_probability(scene.dist_to_hoop, min_def, shooter_role, cfg);
        scene.made = uniform(rng, 0.0, 1.0) < scene.probability;
        for (int r = 0; r < 5; ++r) {
            scene.role_of[static_cast<std::size_t>((off_pid[r] / 100 - 1) * 5 + off_pid[r] % 100 - 1)] = r + 1;
            scene.role_of[static_cast<std::size_t>((def_pid[r] / 100 - 1) * 5 + def_pid[r] % 100 - 1)] = r + 1;
        }

        const auto raw = [mirrored](double x, double y) {
            return mirrored ? Vec2{kCourtLength - x, kCourtWidth - y} : Vec2{x, y};
        };
        std::array<Vec2, 3> ref_pos{};
        for (auto& p : ref_pos) p = {uniform(rng, 5.0, 89.0), uniform(rng, 0.5, 49.5)};

        for (int t = 0; t < L; ++t) {
            ingest::Frame f;
            stamp(f);
            f.records.reserve(static_cast<std::size_t>(11 + cfg.referees));
            for (int team : {1, 2}) {
                for (int r = 0; r < 5; ++r) {
                    ingest::EntityRecord rec;
                    rec.team = team;
                    const bool is_off = team == offense;
                    rec.player_id = is_off ? off_pid[r] : def_pid[r];
                    const Vec2 p = is_off ? off[t][r] : def[t][r];
                    const Vec2 q = raw(p.x, p.y);
                    rec.x = q.x;
                    rec.y = q.y;
                    rec.z = 0.0;
                    rec.role = r + 1;
                    if (is_off && t == pass_frame && r + 1 == handler) rec.event = 3;
                    if (is_off && t == L - 1 && r + 1 == shooter_role) rec.event = scene.made ? 1 : 2;
                    f.records.push_back(rec);
                }
            }
            // Stable per-frame record order: team 1 then team 2, each sorted by player id.
            std::sort(f.records.begin(), f.records.end(), [](const auto& a, const auto& b) {
                return a.player_id < b.player_id;
            });
            const Vec2 bq = raw(ball[t].x, ball[t].y);
            f.records.push_back({ingest::kTeamBall, -1, bq.x, bq.y, ball[t].z, 0, 0});
            for (int i = 0; i < cfg.referees; ++i) {
                const Vec2 rp = raw(ref_pos[static_cast<std::size_t>(i % 3)].x, ref_pos[static_cast<std::size_t>(i % 3)].y);
                f.records.push_back({ingest::kTeamReferee, i + 1, rp.x, rp.y, 0.0, 0, 0});
            }
            if (t == L - 1) scene.shot_frame = game.frames.size();
            game.frames.push_back(std::move(f));
        }
        game.scenes.push_back(scene);
    }
    return game;
}

std::string write_truth_csv(const std::vector<PlantedScene>& scenes) {
    std::string out =
        "play,shot_frame,offense_team,shooter_id,shooter_role,shot_x,shot_y,dist_to_hoop,"
        "min_defender_dist,probability,made,mirrored,roles\n";
    for (const auto& s : scenes) {
        out += std::to_string(s.play_index) + ',' + std::to_string(s.shot_frame) + ',' +
               std::to_string(s.offense_team) + ',' + std::to_string(s.shooter_id) + ',' +
               std::to_string(s.shooter_role) + ',';
        for (double v : {s.shot_xy.x, s.shot_xy.y, s.dist_to_hoop, s.min_defender_dist, s.probability}) {
            append_double(out, v);
            out += ',';
        }
        out += std::string(s.made ? "1" : "0") + ',' + (s.mirrored ? "1" : "0") + ',';
        for (std::size_t i = 0; i < s.role_of.size(); ++i) {
            if (i) out += ':';
            out += std::to_string(s.role_of[i]);
        }
        out += '\n';
    }
    return out;
}

std::vector<PlantedScene> parse_truth_csv(const std::string& text) {
    std::vector<PlantedScene> out;
    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    const auto num = [&row](const std::string& s, auto& v) {
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError(row, "bad truth field '" + s + "'");
    };
    while (std::getline(in, line)) {
        ++row;
        if (row == 1 || line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 13) throw ParseError(row, "expected 13 truth columns");
        PlantedScene s;
        int made = 0, mirrored = 0;
        num(f[0], s.play_index);
        num(f[1], s.shot_frame);
        num(f[2], s.offense_team);
        num(f[3], s.shooter_id);
        num(f[4], s.shooter_role);
        num(f[5], s.shot_xy.x);
        num(f[6], s.shot_xy.y);
        num(f[7], s.dist_to_hoop);
        num(f[8], s.min_defender_dist);
        num(f[9], s.probability);
        num(f[10], made);
        num(f[11], mirrored);
        s.made = made != 0;
        s.mirrored = mirrored != 0;
        std::stringstream rs(f[12]);
        for (std::size_t i = 0; i < s.role_of.size(); ++i) {
            if (!std::getline(rs, cell, ':')) throw ParseError(row, "short roles field");
            num(cell, s.role_of[i]);
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace courtraster::synthgen
