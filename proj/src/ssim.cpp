#include <algorithm>
#include <cmath>
#include <sstream>

#include "courtraster/analysis.hpp"

namespace courtraster::analysis {

void SsimSpec::check() const {
    if (window < 1 || window % 2 == 0) throw ContractError("ssim window must be a positive odd size");
    if (!(sigma > 0)) throw ContractError("ssim sigma must be > 0");
    if (!(k1 > 0 && k2 > 0)) throw ContractError("ssim K1 and K2 must be > 0");
    if (!(dynamic_range > 0)) throw ContractError("ssim dynamic range must be > 0");
}

double ssim(const std::vector<float>& a, const std::vector<float>& b, int height, int width, const SsimSpec& spec) {
    spec.check();
    const auto n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    if (a.size() != n || b.size() != n) throw ContractError("ssim: image sizes differ");
    const int k = spec.window;
    if (height < k || width < k) {
        throw ContractError("ssim: image " + std::to_string(height) + "x" + std::to_string(width) + " smaller than the " +
                            std::to_string(k) + "x" + std::to_string(k) + " window");
    }
    std::vector<double> w(static_cast<std::size_t>(k * k));
    const int half = k / 2;
    double wsum = 0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const double d2 = static_cast<double>((i - half) * (i - half) + (j - half) * (j - half));
            w[static_cast<std::size_t>(i * k + j)] = std::exp(-d2 / (2 * spec.sigma * spec.sigma));
            wsum += w[static_cast<std::size_t>(i * k + j)];
        }
    }
    for (auto& v : w) v /= wsum;
    const double c1 = (spec.k1 * spec.dynamic_range) * (spec.k1 * spec.dynamic_range);
    const double c2 = (spec.k2 * spec.dynamic_range) * (spec.k2 * spec.dynamic_range);

    double total = 0;
    std::size_t windows = 0;
    for (int r = 0; r + k <= height; ++r) {
        for (int c = 0; c + k <= width; ++c) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int i = 0; i < k; ++i) {
                const std::size_t row = static_cast<std::size_t>(r + i) * static_cast<std::size_t>(width);
                for (int j = 0; j < k; ++j) {
                    const double wt = w[static_cast<std::size_t>(i * k + j)];
                    const double x = a[row + static_cast<std::size_t>(c + j)];
                    const double y = b[row + static_cast<std::size_t>(c + j)];
                    ma += wt * x;
                    mb += wt * y;
                    saa += wt * x * x;
                    sbb += wt * y * y;
                    sab += wt * x * y;
                }
            }
            const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

double ssim(const raster::TrajectoryImage& a, const raster::TrajectoryImage& b, const SsimSpec& spec) {
    if (a.channels != 1 || b.channels != 1) throw ContractError("ssim: single-channel images required");
    if (a.height != b.height || a.width != b.width) throw ContractError("ssim: image dimensions differ");
    return ssim(a.data, b.data, a.height, a.width, spec);
}

raster::TrajectoryImage half_court_crop(const raster::TrajectoryImage& img) {
    const int mid = static_cast<int>(kCourtLength) / 2;
    const int first = mid / img.scale;  // first full-court row extending past mid-court
    if (img.origin_row >= first) return img;
    const int skip = first - img.origin_row;
    if (skip >= img.height) throw ContractError("half_court_crop: image has no rows in the attacked half");
    raster::TrajectoryImage out(img.channels, img.height - skip, img.width, img.scale);
    out.origin_row = first;
    for (int c = 0; c < img.channels; ++c) {
        for (int r = 0; r < out.height; ++r) {
            for (int w = 0; w < img.width; ++w) out.at(c, r, w) = img.at(c, r + skip, w);
        }
    }
    return out;
}

raster::TrajectoryImage occupancy_image(const std::vector<Play>& plays, int scale) {
    if (scale < 1) throw ContractError("occupancy_image: scale must be >= 1");
    const int rows = raster::court_rows(scale), cols = raster::court_cols(scale);
    raster::TrajectoryImage img(3, rows, cols, scale);
    for (const auto& p : plays) {
        if (p.frames.empty()) continue;
        const auto& f = p.frames.back();
        for (int s = 0; s < kNumSlots; ++s) {
            const Vec3 v = f[static_cast<std::size_t>(s)];
            if (!std::isfinite(v.x) || !std::isfinite(v.y)) continue;
            const int r = std::clamp(static_cast<int>(std::floor(v.x / scale)), 0, rows - 1);
            const int c = std::clamp(static_cast<int>(std::floor(v.y / scale)), 0, cols - 1);
            const int ch = s < kBallSlot ? 0 : (s == kBallSlot ? 1 : 2);
            img.at(ch, r, c) += 1.0f;
        }
    }
    for (int ch = 0; ch < 3; ++ch) {
        float mx = 0;
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) mx = std::max(mx, img.at(ch, r, c));
        }
        if (mx <= 0) continue;
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) img.at(ch, r, c) /= mx;
        }
    }
    return img;
}

raster::TrajectoryImage group_projection(const raster::TrajectoryImage& img11) {
    if (img11.channels != kNumSlots) throw ContractError("group_projection: 11-channel image required");
    return raster::to_rgb_preview(img11);
}

std::string to_string(Group g) {
    switch (g) {
        case Group::Offense: return "offense";
        case Group::Ball: return "ball";
        case Group::Defense: return "defense";
    }
    return "?";
}

std::vector<SsimRow> compare_filters_to_history(const std::vector<FilterComparison>& filters,
                                                const raster::TrajectoryImage& history, const SsimSpec& spec) {
    if (history.channels != 3) throw ContractError("compare_filters_to_history: history must have 3 channels");
    const auto hist_half = half_court_crop(history);
    std::vector<SsimRow> rows;
    for (const auto& f : filters) {
        if (f.image.channels != 3 || f.image.height != history.height || f.image.width != history.width) {
            throw ContractError("compare_filters_to_history: filter image " + f.filter + " does not match the history image");
        }
        if (f.targets.empty()) throw ContractError("compare_filters_to_history: no target group for " + f.filter);
        const auto f_half = half_court_crop(f.image);
        SsimRow row;
        row.filter = f.filter;
        for (std::size_t i = 0; i < f.targets.size(); ++i) {
            const int ch = static_cast<int>(f.targets[i]);
            if (i) row.target += "+";
            row.target += to_string(f.targets[i]);
            row.ssim_full += ssim(f.image.channel(ch), history.channel(ch), spec);
            row.ssim_half += ssim(f_half.channel(ch), hist_half.channel(ch), spec);
        }
        row.ssim_full /= static_cast<double>(f.targets.size());
        row.ssim_half /= static_cast<double>(f.targets.size());
        rows.push_back(row);
    }
    return rows;
}

std::string ssim_table_csv(const std::vector<SsimRow>& rows) {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed << "filter,target,ssim_half,ssim_full\n";
    for (const auto& r : rows) out << r.filter << ',' << r.target << ',' << r.ssim_half << ',' << r.ssim_full << '\n';
    return out.str();
}

}  // namespace courtraster::analysis
