#include "courtraster/play_io.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>

#include "courtraster/common.hpp"
#include "courtraster/tensor_file.hpp"

namespace courtraster {

namespace {
constexpr std::array<char, 4> kMagic{'P', 'L', 'A', 'Y'};
}

void write_plays(std::ostream& out, const std::vector<Play>& plays, std::uint16_t version) {
    if (version != 1 && version != 2) throw ContractError("unsupported plays.bin version");
    out.write(kMagic.data(), 4);
    le::put_u16(out, version);
    le::put_u32(out, static_cast<std::uint32_t>(plays.size()));
    for (const auto& p : plays) {
        if (p.frames.size() != static_cast<std::size_t>(kPlayFrames)) {
            throw ContractError("play must have exactly 125 frames");
        }
        le::put_u8(out, static_cast<std::uint8_t>(p.label()));
        le::put_u8(out, static_cast<std::uint8_t>(p.shooter_role));
        if (version >= 2) {
            le::put_u8(out, static_cast<std::uint8_t>(p.quarter));
            le::put_f32(out, static_cast<float>(p.game_clock));
        }
        for (const auto& frame : p.frames) {
            for (const auto& v : frame) {
                le::put_f32(out, static_cast<float>(v.x));
                le::put_f32(out, static_cast<float>(v.y));
                le::put_f32(out, static_cast<float>(v.z));
            }
        }
    }
    if (!out) throw IoError("failed writing plays");
}

std::vector<Play> read_plays(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (in.gcount() != 4 || magic != kMagic) throw IoError("bad plays.bin magic");
    const auto version = le::get_u16(in);
    if (version != 1 && version != 2) throw IoError("unsupported plays.bin version " + std::to_string(version));
    const auto count = le::get_u32(in);
    std::vector<Play> plays;
    plays.reserve(std::min<std::uint32_t>(count, 1u << 20));
    for (std::uint32_t i = 0; i < count; ++i) {
        Play p;
        const int label = le::get_u8(in);
        const int role = le::get_u8(in);
        if (label >= kNumClasses || role != label_role(label)) {
            throw IoError("play " + std::to_string(i) + ": inconsistent label/role");
        }
        p.shooter_role = role;
        p.made = label_made(label);
        if (version >= 2) {
            p.quarter = le::get_u8(in);
            p.game_clock = le::get_f32(in);
        }
        p.frames.resize(kPlayFrames);
        for (auto& frame : p.frames) {
            for (auto& v : frame) {
                v.x = le::get_f32(in);
                v.y = le::get_f32(in);
                v.z = le::get_f32(in);
            }
        }
        p.slot_ids.fill(0);
        p.slot_ids[kBallSlot] = -1;
        plays.push_back(std::move(p));
    }
    return plays;
}

void save_plays(const std::filesystem::path& path, const std::vector<Play>& plays, std::uint16_t version) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_plays(out, plays, version);
}

std::vector<Play> load_plays(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_plays(in);
}

}  // namespace courtraster
