#pragma once

// Faded trajectory images. Rows run along the court length (x), columns across its width (y),
// one foot per pixel at scale 1. The attacked hoop lands in the bottom half after orientation.

#include <cstddef>
#include <filesystem>
#include <vector>

#include "courtraster/play.hpp"
#include "courtraster/tensor_file.hpp"

namespace courtraster::raster {

struct FadeSpec {
    double floor = 0.2;

    void check() const;
};

struct TrajectoryImage {
    int channels = 1;
    int height = 94;
    int width = 50;
    int scale = 1;       // feet per pixel
    int origin_row = 0;  // first retained pixel row, in pixel units of the full-court image
    std::vector<float> data;

    TrajectoryImage() = default;
    TrajectoryImage(int c, int h, int w, int scale_ft = 1);

    float& at(int c, int r, int w) { return data[index(c, r, w)]; }
    float at(int c, int r, int w) const { return data[index(c, r, w)]; }
    std::size_t index(int c, int r, int w) const {
        return (static_cast<std::size_t>(c) * height + static_cast<std::size_t>(r)) * width + static_cast<std::size_t>(w);
    }
    std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
    // Single channel as its own one-channel image.
    TrajectoryImage channel(int c) const;
};

int court_rows(int scale);
int court_cols(int scale);

// Reflects the play through the court center when the ball at the shot frame is nearer the
// x = 5.25 hoop. Idempotent.
Play orient_play(const Play& play);
bool needs_orientation(const Play& play);

double fade_intensity(int t, int frames, const FadeSpec& fade);

// channels in {1, 3, 11}. Entities with NaN coordinates in a frame are not painted.
// Throws ContractError on a wrong frame count or channel count.
TrajectoryImage rasterize(const Play& play, int channels, const FadeSpec& fade = {}, int scale = 1);

// red = max(offense channels), green = ball, blue = max(defense channels).
TrajectoryImage to_rgb_preview(const TrajectoryImage& img11);

TensorData to_tensor(const TrajectoryImage& img);
TrajectoryImage from_tensor(const TensorData& t, int scale = 1);

// 1 channel -> PGM (P5), 3 channels -> PPM (P6), 11 channels -> tensor file plus
// `<stem>.preview.ppm`. Returns the files written.
std::vector<std::filesystem::path> export_image(const TrajectoryImage& img, const std::filesystem::path& path);

void write_pgm(const TrajectoryImage& img, const std::filesystem::path& path, int channel = 0);
void write_ppm(const TrajectoryImage& img, const std::filesystem::path& path);
unsigned char to_byte(float v);

}  // namespace courtraster::raster
