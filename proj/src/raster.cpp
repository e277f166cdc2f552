#include "courtraster/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "courtraster/common.hpp"

namespace courtraster::raster {

void FadeSpec::check() const {
    if (!(floor >= 0.0 && floor < 1.0)) throw ContractError("fade floor must be in [0, 1)");
}

TrajectoryImage::TrajectoryImage(int c, int h, int w, int scale_ft)
    : channels(c), height(h), width(w), scale(scale_ft),
      data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0.0f) {}

TrajectoryImage TrajectoryImage::channel(int c) const {
    if (c < 0 || c >= channels) throw ContractError("channel index out of range");
    TrajectoryImage out(1, height, width, scale);
    out.origin_row = origin_row;
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(c) * plane_size()), plane_size(),
                out.data.begin());
    return out;
}

int court_rows(int scale) { return (static_cast<int>(kCourtLength) + scale - 1) / scale; }
int court_cols(int scale) { return (static_cast<int>(kCourtWidth) + scale - 1) / scale; }

bool needs_orientation(const Play& play) {
    if (play.frames.empty()) return false;
    const Vec2 b = play.frames.back()[kBallSlot].xy();
    return distance(b, {kHoopNearX, kHoopY}) < distance(b, {kHoopFarX, kHoopY});
}

Play orient_play(const Play& play) {
    Play out = play;
    if (!needs_orientation(play)) return out;
    for (auto& frame : out.frames) {
        for (auto& v : frame) {
            v.x = kCourtLength - v.x;
            v.y = kCourtWidth - v.y;
        }
    }
    return out;
}

double fade_intensity(int t, int frames, const FadeSpec& fade) {
    if (frames <= 1) return 1.0;
    const double lag = static_cast<double>(frames - 1 - t) / (frames - 1);
    return std::max(fade.floor, 1.0 - (1.0 - fade.floor) * lag);
}

namespace {

int channel_for_slot(int slot, int channels) {
    if (channels == 1) return 0;
    if (channels == 11) return slot;
    if (slot < kBallSlot) return 0;
    if (slot == kBallSlot) return 1;
    return 2;
}

}  // namespace

TrajectoryImage rasterize(const Play& play, int channels, const FadeSpec& fade, int scale) {
    if (channels != 1 && channels != 3 && channels != 11) {
        throw ContractError("rasterize: channels must be 1, 3 or 11");
    }
    if (play.frames.size() != static_cast<std::size_t>(kPlayFrames)) {
        throw ContractError("rasterize: play must have exactly 125 frames, got " + std::to_string(play.frames.size()));
    }
    if (scale < 1) throw ContractError("rasterize: scale must be >= 1");
    fade.check();
    const int rows = court_rows(scale);
    const int cols = court_cols(scale);
    TrajectoryImage img(channels, rows, cols, scale);
    const int T = static_cast<int>(play.frames.size());
    for (int t = 0; t < T; ++t) {
        const float v = static_cast<float>(fade_intensity(t, T, fade));
        const auto& frame = play.frames[static_cast<std::size_t>(t)];
        for (int s = 0; s < kNumSlots; ++s) {
            const Vec3& p = frame[static_cast<std::size_t>(s)];
            if (std::isnan(p.x) || std::isnan(p.y)) continue;
            const int r = std::clamp(static_cast<int>(std::floor(p.x / scale)), 0, rows - 1);
            const int c = std::clamp(static_cast<int>(std::floor(p.y / scale)), 0, cols - 1);
            float& px = img.at(channel_for_slot(s, channels), r, c);
            px = std::max(px, v);
        }
    }
    return img;
}

TrajectoryImage to_rgb_preview(const TrajectoryImage& img11) {
    if (img11.channels != 11) throw ContractError("to_rgb_preview: expected an 11-channel image");
    TrajectoryImage out(3, img11.height, img11.width, img11.scale);
    out.origin_row = img11.origin_row;
    for (int r = 0; r < img11.height; ++r) {
        for (int c = 0; c < img11.width; ++c) {
            float red = 0.0f, blue = 0.0f;
            for (int k = 0; k < 5; ++k) red = std::max(red, img11.at(k, r, c));
            for (int k = 6; k < 11; ++k) blue = std::max(blue, img11.at(k, r, c));
            out.at(0, r, c) = red;
            out.at(1, r, c) = img11.at(kBallSlot, r, c);
            out.at(2, r, c) = blue;
        }
    }
    return out;
}

TensorData to_tensor(const TrajectoryImage& img) {
    return {{static_cast<std::uint32_t>(img.channels), static_cast<std::uint32_t>(img.height),
             static_cast<std::uint32_t>(img.width)},
            img.data};
}

TrajectoryImage from_tensor(const TensorData& t, int scale) {
    if (t.dims.size() != 3) throw ContractError("image tensor must be rank 3");
    TrajectoryImage img(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]), static_cast<int>(t.dims[2]), scale);
    img.data = t.values;
    return img;
}

unsigned char to_byte(float v) {
    const double scaled = std::floor(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0 + 0.5);
    return static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0));
}

void write_pgm(const TrajectoryImage& img, const std::filesystem::path& path, int channel) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) out.put(static_cast<char>(to_byte(img.at(channel, r, c))));
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_ppm(const TrajectoryImage& img, const std::filesystem::path& path) {
    if (img.channels != 3) throw ContractError("write_ppm: expected a 3-channel image");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            for (int k = 0; k < 3; ++k) out.put(static_cast<char>(to_byte(img.at(k, r, c))));
        }
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::filesystem::path> export_image(const TrajectoryImage& img, const std::filesystem::path& path) {
    switch (img.channels) {
        case 1:
            write_pgm(img, path);
            return {path};
        case 3:
            write_ppm(img, path);
            return {path};
        case 11: {
            save_tensor(path, to_tensor(img));
            auto preview = path;
            preview.replace_extension(".preview.ppm");
            write_ppm(to_rgb_preview(img), preview);
            return {path, preview};
        }
        default:
            throw ContractError("export_image: unsupported channel count");
    }
}

}  // namespace courtraster::raster
