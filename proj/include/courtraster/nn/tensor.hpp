#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "courtraster/common.hpp"
#include "courtraster/tensor_file.hpp"

namespace courtraster::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& s);

// Dense row-major tensor. dims[0] is the batch axis wherever a batch is implied.
template <class T>
struct Tensor {
    Shape dims;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape d, T fill = T{0}) : dims(std::move(d)), data(shape_size(dims), fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t batch() const { return dims.empty() ? 0 : dims[0]; }
    std::size_t sample_size() const { return dims.empty() ? 0 : size() / dims[0]; }
    T* sample(std::size_t n) { return data.data() + n * sample_size(); }
    const T* sample(std::size_t n) const { return data.data() + n * sample_size(); }

    // Reuses capacity; contents are unspecified afterwards.
    void reshape(Shape d) {
        dims = std::move(d);
        data.resize(shape_size(dims));
    }
    void zero() { std::fill(data.begin(), data.end(), T{0}); }
    T& operator[](std::size_t i) { return data[i]; }
    T operator[](std::size_t i) const { return data[i]; }
};

template <class To, class From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
    Tensor<To> out;
    out.dims = t.dims;
    out.data.assign(t.data.begin(), t.data.end());
    return out;
}

TensorData to_tensor_data(const Tensor<float>& t);
Tensor<float> from_tensor_data(const TensorData& t);

}  // namespace courtraster::nn
