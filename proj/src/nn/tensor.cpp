#include "courtraster/nn/tensor.hpp"

namespace courtraster::nn {

std::string shape_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

TensorData to_tensor_data(const Tensor<float>& t) {
    TensorData d;
    d.dims.assign(t.dims.begin(), t.dims.end());
    d.values = t.data;
    return d;
}

Tensor<float> from_tensor_data(const TensorData& t) {
    Tensor<float> out;
    out.dims.assign(t.dims.begin(), t.dims.end());
    out.data = t.values;
    return out;
}

}  // namespace courtraster::nn
