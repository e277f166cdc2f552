#include "courtraster/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <json.hpp>
#include <system_error>

#include "courtraster/common.hpp"

namespace courtraster::ingest {

namespace {

constexpr std::size_t kColumns = 9;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::size_t split_fields(std::string_view line, std::array<std::string_view, kColumns>& fields) {
    std::size_t n = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            if (n < kColumns) fields[n] = line.substr(start, i - start);
            ++n;
            start = i + 1;
        }
    }
    return n;
}

// Frame-level structure required before a frame is handed downstream.
bool structural_issue(const Frame& f, std::string& why) {
    int balls = 0;
    for (const auto& r : f.records) balls += r.is_ball() ? 1 : 0;
    if (balls != 1) {
        why = "expected exactly 1 ball record, found " + std::to_string(balls);
        return true;
    }
    const int t1 = f.player_count(1);
    const int t2 = f.player_count(2);
    if (t1 != kPlayersPerTeam || t2 != kPlayersPerTeam) {
        why = "expected 5 players per team, found " + std::to_string(t1) + "/" + std::to_string(t2);
        return true;
    }
    return false;
}

void append_fixed6(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
    out.append(buf, res.ptr);
}

void append_shortest(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

void append_int(std::string& out, int v) {
    char buf[16];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

const EntityRecord* Frame::ball() const {
    for (const auto& r : records) {
        if (r.is_ball()) return &r;
    }
    return nullptr;
}

int Frame::player_count(int team) const {
    return static_cast<int>(std::count_if(records.begin(), records.end(),
                                          [team](const EntityRecord& r) { return r.team == team; }));
}

std::string ValidationReport::to_json() const {
    nlohmann::json j;
    j["frame_count"] = frame_count;
    j["dropped_frames"] = dropped_frames;
    j["accepted_frames"] = accepted_frames();
    auto& arr = j["violations"] = nlohmann::json::array();
    for (const auto& v : violations) {
        arr.push_back({{"frame", v.frame_index}, {"rule", v.rule}, {"message", v.message}});
    }
    return j.dump(2);
}

ParsedTracking parse_tracking(std::string_view text) {
    ParsedTracking out;
    std::vector<Frame> raw;
    std::array<std::string_view, kColumns> fields;

    std::size_t row = 0;
    std::size_t pos = 0;
    bool first_content_row = true;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++row;
        if (line.empty()) continue;

        const std::size_t n = split_fields(line, fields);
        if (first_content_row) {
            first_content_row = false;
            double probe;
            if (!parse_double(n > 0 ? fields[0] : line, probe)) continue;  // header row
        }
        if (n != kColumns) {
            throw ParseError(row, "expected 9 columns, found " + std::to_string(n));
        }

        double game_time, real_time;
        EntityRecord rec;
        if (!parse_double(fields[0], game_time)) throw ParseError(row, "malformed game_time");
        if (!parse_double(fields[1], real_time)) throw ParseError(row, "malformed real_time");
        if (!parse_int(fields[2], rec.team)) throw ParseError(row, "malformed team");
        if (!parse_int(fields[3], rec.player_id)) throw ParseError(row, "malformed player");
        if (!parse_double(fields[4], rec.x)) throw ParseError(row, "malformed x");
        if (!parse_double(fields[5], rec.y)) throw ParseError(row, "malformed y");
        if (!parse_double(fields[6], rec.z)) throw ParseError(row, "malformed z");
        if (!parse_int(fields[7], rec.role)) throw ParseError(row, "malformed role");
        if (!parse_int(fields[8], rec.event)) throw ParseError(row, "malformed event");

        if (raw.empty() || raw.back().game_time != game_time || raw.back().real_time != real_time) {
            raw.push_back(Frame{game_time, real_time, {}});
        }
        raw.back().records.push_back(rec);
    }

    out.report.frame_count = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::string why;
        if (structural_issue(raw[i], why)) {
            ++out.report.dropped_frames;
            out.report.violations.push_back({i, "quarantined", why});
            continue;
        }
        out.frames.push_back(std::move(raw[i]));
    }
    return out;
}

std::string write_tracking(const std::vector<Frame>& frames) {
    std::string out;
    out.reserve(64 + frames.size() * 11 * 48);
    out.append(kHeader);
    out.push_back('\n');
    std::vector<const EntityRecord*> ordered;
    for (const auto& f : frames) {
        ordered.clear();
        for (const auto& r : f.records) ordered.push_back(&r);
        std::stable_partition(ordered.begin(), ordered.end(),
                              [](const EntityRecord* r) { return !r->is_referee(); });
        for (const EntityRecord* r : ordered) {
            append_shortest(out, f.game_time);
            out.push_back(',');
            append_shortest(out, f.real_time);
            out.push_back(',');
            append_int(out, r->team);
            out.push_back(',');
            append_int(out, r->player_id);
            out.push_back(',');
            append_fixed6(out, r->x);
            out.push_back(',');
            append_fixed6(out, r->y);
            out.push_back(',');
            append_fixed6(out, r->z);
            out.push_back(',');
            append_int(out, r->role);
            out.push_back(',');
            append_int(out, r->event);
            out.push_back('\n');
        }
    }
    return out;
}

ValidationReport validate(const std::vector<Frame>& frames) {
    ValidationReport rep;
    rep.frame_count = frames.size();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        if (f.ball() == nullptr) {
            rep.violations.push_back({i, "missing-ball", "frame has no ball record"});
        }
        for (int team : {1, 2}) {
            const int n = f.player_count(team);
            if (n != kPlayersPerTeam) {
                rep.violations.push_back({i, "player-count",
                                          "team " + std::to_string(team) + " has " + std::to_string(n) +
                                              " players"});
            }
        }
        for (const auto& r : f.records) {
            if (r.is_referee()) continue;
            if (r.x < -kCourtTolerance || r.x > kCourtLength + kCourtTolerance || r.y < -kCourtTolerance ||
                r.y > kCourtWidth + kCourtTolerance) {
                rep.violations.push_back({i, "out-of-court",
                                          "entity " + std::to_string(r.player_id) + " at (" +
                                              std::to_string(r.x) + ", " + std::to_string(r.y) + ")"});
            }
            const bool role_ok = r.is_player() ? (r.role >= 1 && r.role <= 5) : r.role == 0;
            if (!role_ok) {
                rep.violations.push_back({i, "role",
                                          "entity " + std::to_string(r.player_id) + " has role " +
                                              std::to_string(r.role)});
            }
            if (r.is_player() && r.z != 0.0) {
                rep.violations.push_back({i, "player-z", "player " + std::to_string(r.player_id) + " has z != 0"});
            }
            if (r.event < 0) {
                rep.violations.push_back({i, "event", "negative event code"});
            }
        }
        if (i > 0 && f.game_time > frames[i - 1].game_time && frames[i - 1].game_time >= kQuarterEndClock) {
            rep.violations.push_back({i, "game-time-order", "game clock runs backwards within a quarter"});
        }
    }
    return rep;
}

}  // namespace courtraster::ingest
