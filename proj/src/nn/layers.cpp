#include "courtraster/nn/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <sstream>

namespace courtraster::nn {

namespace {

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using VecC = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
void check_rank(const Tensor<T>& x, std::size_t rank, const std::string& who) {
    if (x.dims.size() != rank) {
        throw ContractError(who + ": expected rank " + std::to_string(rank) + " input, got " + shape_string(x.dims));
    }
}

// cols is [C*9, H*W] row-major.
template <class T>
void im2col(const T* x, std::size_t C, std::size_t H, std::size_t W, T* cols) {
    const std::size_t HW = H * W;
    for (std::size_t c = 0; c < C; ++c) {
        const T* plane = x + c * HW;
        for (std::size_t kh = 0; kh < 3; ++kh) {
            for (std::size_t kw = 0; kw < 3; ++kw) {
                T* row = cols + ((c * 3 + kh) * 3 + kw) * HW;
                for (std::size_t oh = 0; oh < H; ++oh) {
                    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh + kh) - 1;
                    T* out = row + oh * W;
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) {
                        std::fill(out, out + W, T{0});
                        continue;
                    }
                    const T* src = plane + static_cast<std::size_t>(ih) * W;
                    for (std::size_t ow = 0; ow < W; ++ow) {
                        const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow + kw) - 1;
                        out[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) ? T{0} : src[iw];
                    }
                }
            }
        }
    }
}

template <class T>
void col2im_add(const T* cols, std::size_t C, std::size_t H, std::size_t W, T* dx) {
    const std::size_t HW = H * W;
    for (std::size_t c = 0; c < C; ++c) {
        T* plane = dx + c * HW;
        for (std::size_t kh = 0; kh < 3; ++kh) {
            for (std::size_t kw = 0; kw < 3; ++kw) {
                const T* row = cols + ((c * 3 + kh) * 3 + kw) * HW;
                for (std::size_t oh = 0; oh < H; ++oh) {
                    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh + kh) - 1;
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
                    T* dst = plane + static_cast<std::size_t>(ih) * W;
                    const T* src = row + oh * W;
                    for (std::size_t ow = 0; ow < W; ++ow) {
                        const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow + kw) - 1;
                        if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(W)) dst[iw] += src[ow];
                    }
                }
            }
        }
    }
}

// f64 sums with eight interleaved accumulators so the loop vectorizes in a fixed order.
template <class T, class F>
double lane_sum(std::size_t n, F&& term) {
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (std::size_t k = 0; k < 8; ++k) acc[k] += term(i + k);
    }
    double s = 0.0;
    for (; i < n; ++i) s += term(i);
    for (double a : acc) s += a;
    return s;
}

template <class T>
double plane_sum(const T* p, std::size_t n) {
    return lane_sum<T>(n, [p](std::size_t i) { return static_cast<double>(p[i]); });
}

template <class T>
double plane_sq_dev(const T* p, std::size_t n, double mean) {
    return lane_sum<T>(n, [p, mean](std::size_t i) {
        const double d = static_cast<double>(p[i]) - mean;
        return d * d;
    });
}

template <class T>
double plane_dot(const T* a, const T* b, std::size_t n) {
    return lane_sum<T>(n, [a, b](std::size_t i) { return static_cast<double>(a[i]) * static_cast<double>(b[i]); });
}

}  // namespace

double init_bound(std::size_t fan_in) { return std::sqrt(1.0 / static_cast<double>(fan_in)); }

// ---- Conv2d ----

template <class T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t filters)
    : in_(in_channels), out_(filters),
      weight_{"weight", Tensor<T>({filters, in_channels, 3, 3}), Tensor<T>({filters, in_channels, 3, 3})},
      bias_{"bias", Tensor<T>({filters}), Tensor<T>({filters})} {}

template <class T>
std::string Conv2d<T>::name() const {
    return "conv3x3(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

template <class T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
    if (in.size() != 3 || in[0] != in_) throw ContractError(name() + ": bad input shape " + shape_string(in));
    return {out_, in[1], in[2]};
}

template <class T>
void Conv2d<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
    check_rank(x, 4, name());
    if (x.dims[1] != in_) throw ContractError(name() + ": channel mismatch " + shape_string(x.dims));
    const std::size_t N = x.dims[0], H = x.dims[2], W = x.dims[3], HW = H * W, K = in_ * 9;
    y.reshape({N, out_, H, W});
    cols_.resize(K * HW);
    Eigen::Map<const MatR<T>> w(weight_.value.data.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(K));
    Eigen::Map<const VecC<T>> b(bias_.value.data.data(), static_cast<Eigen::Index>(out_));
    Eigen::Map<const MatR<T>> cols(cols_.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(HW));
    for (std::size_t n = 0; n < N; ++n) {
        im2col(x.sample(n), in_, H, W, cols_.data());
        Eigen::Map<MatR<T>> out(y.sample(n), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(HW));
        out.noalias() = w * cols;
        out.colwise() += b;
    }
}

template <class T>
void Conv2d<T>::backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, Tensor<T>* dx) {
    const std::size_t N = x.dims[0], H = x.dims[2], W = x.dims[3], HW = H * W, K = in_ * 9;
    cols_.resize(K * HW);
    Eigen::Map<const MatR<T>> w(weight_.value.data.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(K));
    Eigen::Map<MatR<T>> dw(weight_.grad.data.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(K));
    Eigen::Map<const MatR<T>> cols(cols_.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(HW));
    if (dx) {
        dx->reshape(x.dims);
        dx->zero();
        tmp_.resize(K * HW);
    }
    std::vector<double> db(out_, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        im2col(x.sample(n), in_, H, W, cols_.data());
        Eigen::Map<const MatR<T>> g(dy.sample(n), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(HW));
        dw.noalias() += g * cols.transpose();
        for (std::size_t f = 0; f < out_; ++f) {
            const T* row = dy.sample(n) + f * HW;
            double s = 0.0;
            for (std::size_t p = 0; p < HW; ++p) s += row[p];
            db[f] += s;
        }
        if (dx) {
            Eigen::Map<MatR<T>> dcols(tmp_.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(HW));
            dcols.noalias() = w.transpose() * g;
            col2im_add(tmp_.data(), in_, H, W, dx->sample(n));
        }
    }
    for (std::size_t f = 0; f < out_; ++f) bias_.grad.data[f] += static_cast<T>(db[f]);
}

// ---- MaxPool2 ----

template <class T>
Shape MaxPool2<T>::output_shape(const Shape& in) const {
    if (in.size() != 3) throw ContractError("maxpool2: bad input shape " + shape_string(in));
    return {in[0], (in[1] + 1) / 2, (in[2] + 1) / 2};
}

template <class T>
void MaxPool2<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
    check_rank(x, 4, name());
    const std::size_t N = x.dims[0], C = x.dims[1], H = x.dims[2], W = x.dims[3];
    const std::size_t OH = (H + 1) / 2, OW = (W + 1) / 2;
    y.reshape({N, C, OH, OW});
    argmax_.resize(y.size());
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const T* in = x.data.data() + nc * H * W;
        T* out = y.data.data() + nc * OH * OW;
        std::uint32_t* arg = argmax_.data() + nc * OH * OW;
        for (std::size_t oh = 0; oh < OH; ++oh) {
            const bool full_h = 2 * oh + 1 < H;
            for (std::size_t ow = 0; ow < OW; ++ow) {
                const auto i0 = static_cast<std::uint32_t>((2 * oh) * W + 2 * ow);
                T best;
                std::uint32_t best_i = i0;
                if (full_h && 2 * ow + 1 < W) {
                    const auto i1 = static_cast<std::uint32_t>(i0 + W);
                    const T a = in[i0], b = in[i0 + 1], c = in[i1], d = in[i1 + 1];
                    best = a;
                    best_i = b > best ? i0 + 1 : best_i;
                    best = b > best ? b : best;
                    best_i = c > best ? i1 : best_i;
                    best = c > best ? c : best;
                    best_i = d > best ? i1 + 1 : best_i;
                    best = d > best ? d : best;
                } else {
                    best = -std::numeric_limits<T>::infinity();
                    for (std::size_t dh = 0; dh < 2; ++dh) {
                        const std::size_t ih = 2 * oh + dh;
                        if (ih >= H) continue;
                        for (std::size_t dw = 0; dw < 2; ++dw) {
                            const std::size_t iw = 2 * ow + dw;
                            if (iw >= W) continue;
                            const T v = in[ih * W + iw];
                            if (v > best) {
                                best = v;
                                best_i = static_cast<std::uint32_t>(ih * W + iw);
                            }
                        }
                    }
                }
                out[oh * OW + ow] = best;
                arg[oh * OW + ow] = best_i;
            }
        }
    }
}

template <class T>
void MaxPool2<T>::backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx) {
    if (!dx) return;
    dx->reshape(x.dims);
    dx->zero();
    const std::size_t planes = x.dims[0] * x.dims[1];
    const std::size_t in_plane = x.dims[2] * x.dims[3];
    const std::size_t out_plane = y.dims[2] * y.dims[3];
    for (std::size_t nc = 0; nc < planes; ++nc) {
        T* d = dx->data.data() + nc * in_plane;
        const T* g = dy.data.data() + nc * out_plane;
        const std::uint32_t* arg = argmax_.data() + nc * out_plane;
        for (std::size_t i = 0; i < out_plane; ++i) d[arg[i]] += g[i];
    }
}

// ---- Dense ----

template <class T>
Dense<T>::Dense(std::size_t in, std::size_t out)
    : in_(in), out_(out),
      weight_{"weight", Tensor<T>({out, in}), Tensor<T>({out, in})},
      bias_{"bias", Tensor<T>({out}), Tensor<T>({out})} {}

template <class T>
std::string Dense<T>::name() const {
    return "dense(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

template <class T>
Shape Dense<T>::output_shape(const Shape& in) const {
    if (in.size() != 1 || in[0] != in_) throw ContractError(name() + ": bad input shape " + shape_string(in));
    return {out_};
}

template <class T>
void Dense<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
    check_rank(x, 2, name());
    if (x.dims[1] != in_) throw ContractError(name() + ": width mismatch " + shape_string(x.dims));
    const auto N = static_cast<Eigen::Index>(x.dims[0]);
    y.reshape({x.dims[0], out_});
    Eigen::Map<const MatR<T>> X(x.data.data(), N, static_cast<Eigen::Index>(in_));
    Eigen::Map<const MatR<T>> Wm(weight_.value.data.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.value.data.data(), static_cast<Eigen::Index>(out_));
    Eigen::Map<MatR<T>> Y(y.data.data(), N, static_cast<Eigen::Index>(out_));
    Y.noalias() = X * Wm.transpose();
    Y.rowwise() += b;
}

template <class T>
void Dense<T>::backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, Tensor<T>* dx) {
    const auto N = static_cast<Eigen::Index>(x.dims[0]);
    Eigen::Map<const MatR<T>> X(x.data.data(), N, static_cast<Eigen::Index>(in_));
    Eigen::Map<const MatR<T>> G(dy.data.data(), N, static_cast<Eigen::Index>(out_));
    Eigen::Map<const MatR<T>> Wm(weight_.value.data.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    Eigen::Map<MatR<T>> dW(weight_.grad.data.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    dW.noalias() += G.transpose() * X;
    for (std::size_t o = 0; o < out_; ++o) {
        double s = 0.0;
        for (Eigen::Index n = 0; n < N; ++n) s += G(n, static_cast<Eigen::Index>(o));
        bias_.grad.data[o] += static_cast<T>(s);
    }
    if (dx) {
        dx->reshape(x.dims);
        Eigen::Map<MatR<T>> dX(dx->data.data(), N, static_cast<Eigen::Index>(in_));
        dX.noalias() = G * Wm;
    }
}

// ---- BatchNorm ----

template <class T>
BatchNorm<T>::BatchNorm(std::size_t channels, bool spatial)
    : channels_(channels), spatial_(spatial),
      gamma_{"gamma", Tensor<T>({channels}, T{1}), Tensor<T>({channels})},
      beta_{"beta", Tensor<T>({channels}), Tensor<T>({channels})},
      running_mean_({channels}), running_var_({channels}, T{1}) {}

template <class T>
std::string BatchNorm<T>::name() const {
    return std::string(spatial_ ? "batchnorm2d(" : "batchnorm1d(") + std::to_string(channels_) + ")";
}

template <class T>
Shape BatchNorm<T>::output_shape(const Shape& in) const {
    const bool ok = spatial_ ? (in.size() == 3 && in[0] == channels_) : (in.size() == 1 && in[0] == channels_);
    if (!ok) throw ContractError(name() + ": bad input shape " + shape_string(in));
    return in;
}

template <class T>
void BatchNorm<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool train) {
    check_rank(x, spatial_ ? 4 : 2, name());
    if (x.dims[1] != channels_) throw ContractError(name() + ": channel mismatch " + shape_string(x.dims));
    const std::size_t N = x.dims[0];
    const std::size_t S = spatial_ ? x.dims[2] * x.dims[3] : 1;
    const std::size_t m = N * S;
    if (train && N < 2) throw ContractError(name() + ": train mode needs a batch of at least 2");
    y.reshape(x.dims);
    xhat_.resize(x.size());
    inv_std_.assign(channels_, 0.0);
    last_train_ = train;
    std::vector<double> mean(channels_), var(channels_);
    if (train) {
        if (spatial_) {
            for (std::size_t c = 0; c < channels_; ++c) {
                double sum = 0.0;
                for (std::size_t n = 0; n < N; ++n) sum += plane_sum(x.data.data() + (n * channels_ + c) * S, S);
                mean[c] = sum / static_cast<double>(m);
                double sq = 0.0;
                for (std::size_t n = 0; n < N; ++n) sq += plane_sq_dev(x.data.data() + (n * channels_ + c) * S, S, mean[c]);
                var[c] = sq / static_cast<double>(m);
            }
        } else {
            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t c = 0; c < channels_; ++c) mean[c] += x.data[n * channels_ + c];
            }
            for (auto& v : mean) v /= static_cast<double>(m);
            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t c = 0; c < channels_; ++c) {
                    const double d = x.data[n * channels_ + c] - mean[c];
                    var[c] += d * d;
                }
            }
            for (auto& v : var) v /= static_cast<double>(m);
        }
        for (std::size_t c = 0; c < channels_; ++c) {
            const double unbiased = var[c] * static_cast<double>(m) / static_cast<double>(m - 1);
            running_mean_.data[c] = static_cast<T>(kBatchNormMomentum * running_mean_.data[c] + (1.0 - kBatchNormMomentum) * mean[c]);
            running_var_.data[c] = static_cast<T>(kBatchNormMomentum * running_var_.data[c] + (1.0 - kBatchNormMomentum) * unbiased);
        }
    } else {
        for (std::size_t c = 0; c < channels_; ++c) {
            mean[c] = running_mean_.data[c];
            var[c] = std::max<double>(running_var_.data[c], 0.0);
        }
    }
    for (std::size_t c = 0; c < channels_; ++c) inv_std_[c] = 1.0 / std::sqrt(var[c] + kBatchNormEps);
    const T* px = x.data.data();
    T* ph = xhat_.data();
    T* py = y.data.data();
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < channels_; ++c) {
            const std::size_t off = (n * channels_ + c) * S;
            const T mu = static_cast<T>(mean[c]), inv = static_cast<T>(inv_std_[c]);
            const T g = gamma_.value.data[c], b = beta_.value.data[c];
            for (std::size_t s = 0; s < S; ++s) {
                const T h = (px[off + s] - mu) * inv;
                ph[off + s] = h;
                py[off + s] = g * h + b;
            }
        }
    }
}

template <class T>
void BatchNorm<T>::backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, Tensor<T>* dx) {
    const std::size_t N = x.dims[0];
    const std::size_t S = spatial_ ? x.dims[2] * x.dims[3] : 1;
    const double m = static_cast<double>(N * S);
    std::vector<double> sum_dy(channels_, 0.0), sum_dy_xhat(channels_, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < channels_; ++c) {
            const std::size_t off = (n * channels_ + c) * S;
            sum_dy[c] += plane_sum(dy.data.data() + off, S);
            sum_dy_xhat[c] += plane_dot(dy.data.data() + off, xhat_.data() + off, S);
        }
    }
    for (std::size_t c = 0; c < channels_; ++c) {
        gamma_.grad.data[c] += static_cast<T>(sum_dy_xhat[c]);
        beta_.grad.data[c] += static_cast<T>(sum_dy[c]);
    }
    if (!dx) return;
    dx->reshape(x.dims);
    // Train mode: dx = g*inv/m * (m*dy - sum(dy) - xhat*sum(dy*xhat)); eval mode: dx = g*inv*dy.
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < channels_; ++c) {
            const std::size_t off = (n * channels_ + c) * S;
            const double k = gamma_.value.data[c] * inv_std_[c];
            const T k1 = static_cast<T>(k);
            const T k2 = last_train_ ? static_cast<T>(k * sum_dy[c] / m) : T{0};
            const T k3 = last_train_ ? static_cast<T>(k * sum_dy_xhat[c] / m) : T{0};
            const T* g = dy.data.data() + off;
            const T* h = xhat_.data() + off;
            T* d = dx->data.data() + off;
            for (std::size_t s = 0; s < S; ++s) d[s] = k1 * g[s] - k2 - k3 * h[s];
        }
    }
}

// ---- Relu / Flatten ----

template <class T>
Dropout<T>::Dropout(double rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ContractError("dropout rate must be in [0, 1)");
}

template <class T>
std::string Dropout<T>::name() const {
    std::ostringstream s;
    s << "dropout(" << rate_ << ")";
    return s.str();
}

template <class T>
void Dropout<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool train) {
    y.reshape(x.dims);
    last_train_ = train && rate_ > 0.0;
    if (!last_train_) {
        std::copy(x.data.begin(), x.data.end(), y.data.begin());
        return;
    }
    if (!hold_ || mask_.size() != x.size()) {
        mask_.resize(x.size());
        const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
        // 53 uniform bits per draw: the same masks on every standard library.
        for (auto& m : mask_) m = static_cast<double>(rng_() >> 11) * 0x1.0p-53 < rate_ ? T{0} : keep_scale;
    }
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] * mask_[i];
}

template <class T>
void Dropout<T>::backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, Tensor<T>* dx) {
    if (!dx) return;
    dx->reshape(x.dims);
    for (std::size_t i = 0; i < dy.size(); ++i) dx->data[i] = last_train_ ? dy.data[i] * mask_[i] : dy.data[i];
}

template <class T>
void Relu<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
    y.reshape(x.dims);
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] < T{0} ? T{0} : x.data[i];  // NaN passes through so divergence reaches the loss
}

template <class T>
void Relu<T>::backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, Tensor<T>* dx) {
    if (!dx) return;
    dx->reshape(x.dims);
    const T* px = x.data.data();
    const T* pg = dy.data.data();
    T* pd = dx->data.data();
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const T g = pg[i];
        pd[i] = px[i] > T{0} ? g : T{0};
    }
}

template <class T>
void Flatten<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
    y.dims = {x.batch(), x.sample_size()};
    y.data = x.data;
}

template <class T>
void Flatten<T>::backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, Tensor<T>* dx) {
    if (!dx) return;
    dx->dims = x.dims;
    dx->data = dy.data;
}

// ---- softmax / loss ----

template <class T>
void softmax(const Tensor<T>& logits, Tensor<T>& probs) {
    check_rank(logits, 2, "softmax");
    probs.reshape(logits.dims);
    const std::size_t N = logits.dims[0], K = logits.dims[1];
    for (std::size_t n = 0; n < N; ++n) {
        const T* a = logits.sample(n);
        T* p = probs.sample(n);
        double mx = a[0];
        for (std::size_t k = 1; k < K; ++k) mx = std::max<double>(mx, a[k]);
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) z += std::exp(a[k] - mx);
        for (std::size_t k = 0; k < K; ++k) p[k] = static_cast<T>(std::exp(a[k] - mx) / z);
    }
}

template <class T>
LossResult softmax_logloss(const Tensor<T>& logits, const std::vector<int>& labels, Tensor<T>* probs,
                           Tensor<T>* grad) {
    check_rank(logits, 2, "softmax_logloss");
    const std::size_t N = logits.dims[0], K = logits.dims[1];
    if (labels.size() != N) throw ContractError("softmax_logloss: label count mismatch");
    if (probs) probs->reshape(logits.dims);
    if (grad) grad->reshape(logits.dims);
    LossResult res;
    double total = 0.0;
    std::vector<double> e(K);
    for (std::size_t n = 0; n < N; ++n) {
        const T* a = logits.sample(n);
        const auto label = static_cast<std::size_t>(labels[n]);
        if (label >= K) throw ContractError("softmax_logloss: label out of range");
        double mx = a[0];
        std::size_t arg = 0;
        for (std::size_t k = 1; k < K; ++k) {
            if (a[k] > mx) {
                mx = a[k];
                arg = k;
            }
        }
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            e[k] = std::exp(static_cast<double>(a[k]) - mx);
            z += e[k];
        }
        total += -(static_cast<double>(a[label]) - mx - std::log(z));
        if (arg != label) ++res.errors;
        for (std::size_t k = 0; k < K; ++k) {
            const double y = e[k] / z;
            if (probs) probs->sample(n)[k] = static_cast<T>(y);
            if (grad) grad->sample(n)[k] = static_cast<T>((y - (k == label ? 1.0 : 0.0)) / static_cast<double>(N));
        }
    }
    res.loss = N ? total / static_cast<double>(N) : 0.0;
    return res;
}

template class Dropout<float>;
template class Dropout<double>;
template class Conv2d<float>;
template class Conv2d<double>;
template class MaxPool2<float>;
template class MaxPool2<double>;
template class Dense<float>;
template class Dense<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class Relu<float>;
template class Relu<double>;
template class Flatten<float>;
template class Flatten<double>;
template void softmax(const Tensor<float>&, Tensor<float>&);
template void softmax(const Tensor<double>&, Tensor<double>&);
template LossResult softmax_logloss(const Tensor<float>&, const std::vector<int>&, Tensor<float>*, Tensor<float>*);
template LossResult softmax_logloss(const Tensor<double>&, const std::vector<int>&, Tensor<double>*, Tensor<double>*);

}  // namespace courtraster::nn
