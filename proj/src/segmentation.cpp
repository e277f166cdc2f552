#include "courtraster/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "courtraster/common.hpp"

namespace courtraster {

int label_play(int shooter_role, bool made) {
    if (shooter_role < 1 || shooter_role > 5) throw ContractError("shooter role must be in 1..5");
    return 2 * (shooter_role - 1) + (made ? 0 : 1);
}

int Play::label() const { return label_play(shooter_role, made); }

}  // namespace courtraster

namespace courtraster::segmentation {

namespace {

int team_of(const ingest::Frame& f, int player_id) {
    for (const auto& r : f.records) {
        if (r.is_player() && r.player_id == player_id) return r.team;
    }
    return 0;
}

bool is_shot(int event) { return event == kEventShotMade || event == kEventShotMissed; }

// Shooter record of a frame, or nullptr.
const ingest::EntityRecord* shot_record(const ingest::Frame& f) {
    for (const auto& r : f.records) {
        if (r.is_player() && is_shot(r.event)) return &r;
    }
    return nullptr;
}

}  // namespace

std::string SegmentReport::to_json() const {
    nlohmann::json j{{"frames", frames},
                     {"quarters", quarters},
                     {"possessions", possessions},
                     {"shots", shots},
                     {"plays", plays},
                     {"discarded_short", discarded_short},
                     {"discarded_multi_shot", discarded_multi_shot},
                     {"discarded_wrong_team", discarded_wrong_team},
                     {"discarded_bad_roles", discarded_bad_roles}};
    return j.dump(2);
}

int nearest_owner(const ingest::Frame& frame) {
    const ingest::EntityRecord* ball = frame.ball();
    if (ball == nullptr) throw ContractError("nearest_owner: frame has no ball");
    int best_id = 0;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (const auto& r : frame.records) {
        if (!r.is_player()) continue;
        const double d = std::hypot(r.x - ball->x, r.y - ball->y);
        if (!found || d < best || (d == best && r.player_id < best_id)) {
            best = d;
            best_id = r.player_id;
            found = true;
        }
    }
    if (!found) throw ContractError("nearest_owner: frame has no players");
    return best_id;
}

std::vector<std::pair<std::size_t, std::size_t>> split_quarters(const std::vector<ingest::Frame>& frames) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (frames.empty()) return out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].game_time > frames[i - 1].game_time) {
            out.emplace_back(begin, i);
            begin = i;
        }
    }
    out.emplace_back(begin, frames.size());
    return out;
}

std::vector<Possession> segment_possessions(std::span<const ingest::Frame> frames, int switch_frames,
                                            std::size_t offset) {
    std::vector<Possession> out;
    if (frames.empty()) return out;
    if (switch_frames < 1) throw ConfigError("switch_frames must be >= 1");

    std::vector<int> owner(frames.size());
    std::vector<int> owner_team(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        owner[i] = nearest_owner(frames[i]);
        owner_team[i] = team_of(frames[i], owner[i]);
    }

    std::size_t start = 0;
    int offense = owner_team[0];
    std::size_t run_start = 0;
    int run_len = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (owner_team[i] != offense) {
            if (run_len == 0) run_start = i;
            ++run_len;
            if (run_len >= switch_frames) {
                out.push_back({offset + start, offset + run_start - 1, offense, {}});
                start = run_start;
                offense = owner_team[i];
                run_len = 0;
            }
        } else {
            run_len = 0;
        }
    }
    out.push_back({offset + start, offset + frames.size() - 1, offense, {}});
    for (auto& p : out) {
        p.owner_by_frame.assign(owner.begin() + static_cast<std::ptrdiff_t>(p.start_frame - offset),
                                owner.begin() + static_cast<std::ptrdiff_t>(p.end_frame - offset + 1));
    }
    return out;
}

std::map<int, int> assign_roles(std::span<const ingest::Frame> window) {
    if (window.empty()) throw ContractError("assign_roles: empty window");
    std::map<int, int> roles;
    std::map<std::pair<int, int>, int> taken;  // (team, role) -> player
    for (const auto& r : window.front().records) {
        if (!r.is_player()) continue;
        if (r.role < 1 || r.role > 5) {
            throw DataError("player " + std::to_string(r.player_id) + " has no role in the first frame");
        }
        auto [it, fresh] = taken.emplace(std::make_pair(r.team, r.role), r.player_id);
        if (!fresh) {
            throw DataError("team " + std::to_string(r.team) + " assigns role " + std::to_string(r.role) +
                            " to both " + std::to_string(it->second) + " and " + std::to_string(r.player_id));
        }
        roles[r.player_id] = r.role;
    }
    return roles;
}

std::vector<Play> extract_shot_plays(const std::vector<ingest::Frame>& frames,
                                     const std::vector<Possession>& possessions,
                                     const SegmentOptions& opts, SegmentReport* report, int quarter) {
    SegmentReport local;
    SegmentReport& rep = report ? *report : local;
    std::vector<Play> plays;
    const auto window_len = static_cast<std::size_t>(opts.play_frames);

    for (const auto& pos : possessions) {
        for (std::size_t s = pos.start_frame; s <= pos.end_frame; ++s) {
            const ingest::EntityRecord* shooter = shot_record(frames[s]);
            if (shooter == nullptr) continue;
            ++rep.shots;
            if (s + 1 < window_len || s + 1 - window_len < pos.start_frame) {
                ++rep.discarded_short;
                continue;
            }
            const std::size_t first = s + 1 - window_len;
            bool second_shot = false;
            for (std::size_t t = first; t < s && !second_shot; ++t) second_shot = shot_record(frames[t]) != nullptr;
            if (second_shot) {
                ++rep.discarded_multi_shot;
                continue;
            }
            if (shooter->team != pos.offense_team) {
                ++rep.discarded_wrong_team;
                continue;
            }

            const std::span<const ingest::Frame> window(frames.data() + first, window_len);
            std::map<int, int> roles;
            try {
                roles = assign_roles(window);
            } catch (const DataError&) {
                ++rep.discarded_bad_roles;
                continue;
            }

            Play play;
            play.offense_team = pos.offense_team;
            play.quarter = quarter;
            play.game_clock = frames[s].game_time;
            play.shot_frame = s;
            play.made = shooter->event == kEventShotMade;
            play.slot_ids.fill(0);
            play.slot_ids[kBallSlot] = -1;
            for (const auto& [pid, role] : roles) {
                const int team = team_of(window.front(), pid);
                const int slot = team == pos.offense_team ? offense_slot(role) : defense_slot(role);
                play.slot_ids[static_cast<std::size_t>(slot)] = pid;
            }
            const auto shooter_role = roles.find(shooter->player_id);
            if (shooter_role == roles.end() ||
                std::count(play.slot_ids.begin(), play.slot_ids.end(), 0) != 0) {
                ++rep.discarded_bad_roles;
                continue;
            }
            play.shooter_role = shooter_role->second;

            bool complete = true;
            play.frames.resize(window_len);
            for (std::size_t t = 0; t < window_len && complete; ++t) {
                std::array<bool, kNumSlots> seen{};
                for (const auto& r : window[t].records) {
                    int slot = -1;
                    if (r.is_ball()) {
                        slot = kBallSlot;
                    } else if (r.is_player()) {
                        const auto it = std::find(play.slot_ids.begin(), play.slot_ids.end(), r.player_id);
                        if (it != play.slot_ids.end()) slot = static_cast<int>(it - play.slot_ids.begin());
                    }
                    if (slot < 0) continue;
                    play.frames[t][static_cast<std::size_t>(slot)] = {r.x, r.y, r.z};
                    seen[static_cast<std::size_t>(slot)] = true;
                }
                complete = std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
            }
            if (!complete) {
                ++rep.discarded_bad_roles;
                continue;
            }
            plays.push_back(std::move(play));
            ++rep.plays;
        }
    }
    return plays;
}

SegmentedGame segment_game(const std::vector<ingest::Frame>& frames, const SegmentOptions& opts) {
    SegmentedGame out;
    out.report.frames = frames.size();
    const auto quarters = split_quarters(frames);
    out.report.quarters = quarters.size();
    int q = 0;
    for (const auto& [begin, end] : quarters) {
        ++q;
        const std::span<const ingest::Frame> slice(frames.data() + begin, end - begin);
        auto poss = segment_possessions(slice, opts.switch_frames, begin);
        auto plays = extract_shot_plays(frames, poss, opts, &out.report, q);
        out.report.possessions += poss.size();
        std::move(plays.begin(), plays.end(), std::back_inserter(out.plays));
        std::move(poss.begin(), poss.end(), std::back_inserter(out.possessions));
    }
    return out;
}

}  // namespace courtraster::segmentation
