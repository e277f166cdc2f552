#include "courtraster/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "courtraster/nn/train.hpp"

namespace courtraster::analysis {

double CourtGrid::value(int row, int col) const {
    const std::size_t i = index(row, col);
    if (attempts[i] == 0) return std::numeric_limits<double>::quiet_NaN();
    return sum[i] / static_cast<double>(attempts[i]);
}

std::size_t CourtGrid::populated() const {
    return static_cast<std::size_t>(std::count_if(attempts.begin(), attempts.end(), [](std::size_t a) { return a > 0; }));
}

void CourtGrid::add(int row, int col, double v) {
    const std::size_t i = index(row, col);
    sum[i] += v;
    ++attempts[i];
}

std::string CourtGrid::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "row,col,attempts,value\n";
    for (int r = 0; r < kRows; ++r) {
        for (int c = 0; c < kCols; ++c) {
            if (!empty(r, c)) out << r << ',' << c << ',' << attempts[index(r, c)] << ',' << value(r, c) << '\n';
        }
    }
    return out.str();
}

raster::TrajectoryImage CourtGrid::to_image() const {
    raster::TrajectoryImage img(1, kRows, kCols, 1);
    for (int r = 0; r < kRows; ++r) {
        for (int c = 0; c < kCols; ++c) {
            if (!empty(r, c)) img.at(0, r, c) = static_cast<float>(std::clamp(value(r, c), 0.0, 1.0));
        }
    }
    return img;
}

std::pair<int, int> cell_of(Vec2 p) {
    const int r = std::clamp(static_cast<int>(std::floor(p.x)), 0, CourtGrid::kRows - 1);
    const int c = std::clamp(static_cast<int>(std::floor(p.y)), 0, CourtGrid::kCols - 1);
    return {r, c};
}

Vec2 shot_location(const Play& play) {
    if (play.frames.empty()) throw ContractError("shot_location: empty play");
    return play.frames.back()[static_cast<std::size_t>(offense_slot(play.shooter_role))].xy();
}

CourtGrid heatmap_raw(const std::vector<Play>& plays, int role) {
    CourtGrid g;
    for (const auto& p : plays) {
        if (role != 0 && p.shooter_role != role) continue;
        const auto [r, c] = cell_of(shot_location(p));
        g.add(r, c, p.made ? 1.0 : 0.0);
    }
    return g;
}

CourtGrid heatmap_model(const std::vector<Play>& plays, const std::vector<double>& made_probability) {
    if (plays.size() != made_probability.size()) throw ContractError("heatmap_model: one probability per play required");
    CourtGrid g;
    for (std::size_t i = 0; i < plays.size(); ++i) {
        const auto [r, c] = cell_of(shot_location(plays[i]));
        g.add(r, c, made_probability[i]);
    }
    return g;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ContractError("spearman: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const auto rx = ranks(x), ry = ranks(y);
    const double mean = (static_cast<double>(n) + 1.0) / 2.0;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

double distance_trend(const CourtGrid& grid, std::size_t min_attempts) {
    std::vector<double> d, v;
    for (int r = 0; r < CourtGrid::kRows; ++r) {
        for (int c = 0; c < CourtGrid::kCols; ++c) {
            if (grid.attempts[CourtGrid::index(r, c)] < std::max<std::size_t>(min_attempts, 1)) continue;
            d.push_back(distance({r + 0.5, c + 0.5}, kAttackedHoop));
            v.push_back(grid.value(r, c));
        }
    }
    return spearman(d, v);
}

std::string Histogram::to_csv() const {
    std::ostringstream out;
    out << "role,bin_low,bin_high,count\n";
    for (int b = 0; b < kHistogramBins; ++b) {
        out << role << ',' << static_cast<double>(b) / kHistogramBins << ',' << static_cast<double>(b + 1) / kHistogramBins
            << ',' << bins[static_cast<std::size_t>(b)] << '\n';
    }
    return out.str();
}

Histogram probability_histogram(const nn::Tensor<float>& probs, int role) {
    if (probs.dims.size() != 2 || probs.dims[1] != static_cast<std::size_t>(kNumClasses)) {
        throw ContractError("probability_histogram: expected [N, 10] probabilities, got " + nn::shape_string(probs.dims));
    }
    if (role < 0 || role > kPlayersPerTeam) throw ContractError("probability_histogram: role must be 0..5");
    Histogram h;
    h.role = role;
    double total = 0;
    for (std::size_t i = 0; i < probs.batch(); ++i) {
        const float* p = probs.sample(i);
        if (role != 0 && nn::predicted_role(p) != role) continue;
        const double m = nn::made_probability(p);
        const int b = std::clamp(static_cast<int>(std::floor(m * kHistogramBins)), 0, kHistogramBins - 1);
        ++h.bins[static_cast<std::size_t>(b)];
        ++h.count;
        total += m;
    }
    h.mean = h.count ? total / static_cast<double>(h.count) : std::numeric_limits<double>::quiet_NaN();
    return h;
}

ActivationResult maximize_activation(nn::Network<float>& net, const ActivationOptions& opts) {
    const auto& spec = net.spec();
    if (!spec.uses_images()) throw ContractError("maximize_activation needs a model with an image trunk");
    if (opts.steps < 0 || !(opts.step_size > 0)) throw ContractError("maximize_activation: bad step settings");
    auto& trunk = net.image_trunk();
    std::size_t conv_at = trunk.size();
    int seen = 0;
    for (std::size_t i = 0; i < trunk.size(); ++i) {
        if (dynamic_cast<nn::Conv2d<float>*>(&trunk.layer(i)) && ++seen == opts.conv_layer) {
            conv_at = i;
            break;
        }
    }
    if (conv_at == trunk.size()) throw ContractError("maximize_activation: no conv layer " + std::to_string(opts.conv_layer));
    std::size_t relu_at = conv_at + 1;
    while (relu_at < trunk.size() && !dynamic_cast<nn::Relu<float>*>(&trunk.layer(relu_at))) ++relu_at;
    if (relu_at == trunk.size()) throw ContractError("maximize_activation: conv layer has no following ReLU");
    const auto* conv = dynamic_cast<nn::Conv2d<float>*>(&trunk.layer(conv_at));
    const auto filters = const_cast<nn::Conv2d<float>*>(conv)->weight().value.dims[0];
    if (opts.filter < 0 || static_cast<std::size_t>(opts.filter) >= filters) {
        throw ContractError("maximize_activation: filter index out of range");
    }

    const auto C = spec.image_shape[0], H = spec.image_shape[1], W = spec.image_shape[2];
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> noise(0.0, opts.init_high);
    nn::Tensor<float> x({1, C, H, W}), dy, dx;
    const std::size_t count = relu_at + 1;

    const auto objective = [&](bool want_grad) {
        const auto& act = trunk.forward(x, false, count);
        const std::size_t plane = act.dims[2] * act.dims[3];
        const float* a = act.data.data() + static_cast<std::size_t>(opts.filter) * plane;
        double s = 0;
        for (std::size_t i = 0; i < plane; ++i) s += a[i];
        if (want_grad) {
            dy.reshape(act.dims);
            dy.zero();
            std::fill_n(dy.data.data() + static_cast<std::size_t>(opts.filter) * plane, plane,
                        static_cast<float>(1.0 / static_cast<double>(plane)));
            trunk.backward(dy, &dx);
        }
        return s / static_cast<double>(plane);
    };
    const auto grad_rms = [&]() {
        double s = 0;
        for (float g : dx.data) s += static_cast<double>(g) * g;
        return std::sqrt(s / static_cast<double>(dx.size()));
    };

    ActivationResult res;
    double act = 0, rms = 0;
    for (int attempt = 0; attempt <= opts.max_restarts; ++attempt) {
        for (auto& v : x.data) v = static_cast<float>(noise(rng));
        act = objective(true);
        rms = grad_rms();
        if (rms > 0) break;
        if (attempt < opts.max_restarts) ++res.restarts;
    }
    if (!(rms > 0)) {
        res.degenerate = true;
        res.trace.push_back(act);
    } else {
        res.trace.push_back(act);
        for (int step = 0; step < opts.steps; ++step) {
            if (rms > 0) {
                const double k = opts.step_size / rms;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    x.data[i] = static_cast<float>(std::clamp(x.data[i] + k * dx.data[i], 0.0, 1.0));
                }
            }
            act = objective(true);
            rms = grad_rms();
            res.trace.push_back(act);
        }
    }
    res.image = raster::TrajectoryImage(static_cast<int>(C), static_cast<int>(H), static_cast<int>(W),
                                        (static_cast<int>(kCourtLength) + static_cast<int>(H) - 1) / static_cast<int>(H));
    std::copy(x.data.begin(), x.data.end(), res.image.data.begin());
    return res;
}

}  // namespace courtraster::analysis
