#include "courtraster/tensor_file.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "courtraster/common.hpp"

namespace courtraster {

namespace {

constexpr std::array<char, 4> kMagic{'T', 'N', 'S', 'R'};

void read_exact(std::istream& in, char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw IoError("tensor stream truncated");
    }
}

}  // namespace

std::size_t TensorData::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

namespace le {

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_u16(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint8_t get_u8(std::istream& in) {
    char c;
    read_exact(in, &c, 1);
    return static_cast<std::uint8_t>(c);
}

std::uint16_t get_u16(std::istream& in) {
    unsigned char b[2];
    read_exact(in, reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    read_exact(in, reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

}  // namespace le

void write_tensor(std::ostream& out, const TensorData& tensor) {
    if (tensor.dims.size() > 255) throw ContractError("tensor rank exceeds 255");
    if (tensor.element_count() != tensor.values.size()) {
        throw ContractError("tensor dims do not match payload length");
    }
    out.write(kMagic.data(), kMagic.size());
    le::put_u16(out, kTensorFileVersion);
    le::put_u8(out, static_cast<std::uint8_t>(tensor.dims.size()));
    for (auto d : tensor.dims) le::put_u32(out, d);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(tensor.values.data()),
                  static_cast<std::streamsize>(tensor.values.size() * sizeof(float)));
    } else {
        for (float v : tensor.values) le::put_f32(out, v);
    }
    if (!out) throw IoError("failed writing tensor");
}

std::optional<TensorData> try_read_tensor(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (in.gcount() == 0) return std::nullopt;
    if (in.gcount() != 4 || magic != kMagic) throw IoError("bad tensor magic");
    const auto version = le::get_u16(in);
    if (version != kTensorFileVersion) {
        throw IoError("unsupported tensor version " + std::to_string(version));
    }
    TensorData t;
    const auto ndim = le::get_u8(in);
    t.dims.resize(ndim);
    std::size_t count = ndim == 0 ? 0 : 1;
    for (auto& d : t.dims) {
        d = le::get_u32(in);
        count *= d;
    }
    // Guard against absurd headers before allocating.
    if (count > (std::size_t{1} << 34)) throw IoError("tensor header declares oversized payload");
    t.values.resize(count);
    if constexpr (std::endian::native == std::endian::little) {
        read_exact(in, reinterpret_cast<char*>(t.values.data()), count * sizeof(float));
    } else {
        for (auto& v : t.values) v = le::get_f32(in);
    }
    return t;
}

TensorData read_tensor(std::istream& in) {
    auto t = try_read_tensor(in);
    if (!t) throw IoError("tensor stream empty");
    return std::move(*t);
}

void save_tensor(const std::filesystem::path& path, const TensorData& tensor) {
    save_tensors(path, {tensor});
}

TensorData load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_tensor(in);
}

void save_tensors(const std::filesystem::path& path, const std::vector<TensorData>& tensors) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& t : tensors) write_tensor(out, t);
}

std::vector<TensorData> load_tensors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<TensorData> out;
    while (auto t = try_read_tensor(in)) out.push_back(std::move(*t));
    return out;
}

}  // namespace courtraster
