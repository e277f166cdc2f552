#pragma once

// Native tensor container:
//   magic "TNSR" | version u16 | ndim u8 | dims u32[ndim] | f32 payload, all little-endian,
//   payload row-major. Several records may be concatenated in one stream.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace courtraster {

inline constexpr std::uint16_t kTensorFileVersion = 1;

struct TensorData {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t element_count() const;
};

void write_tensor(std::ostream& out, const TensorData& tensor);
// Reads one record. Throws IoError on bad magic, unsupported version or truncation.
TensorData read_tensor(std::istream& in);
// Returns nullopt on clean end of stream.
std::optional<TensorData> try_read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const TensorData& tensor);
TensorData load_tensor(const std::filesystem::path& path);

void save_tensors(const std::filesystem::path& path, const std::vector<TensorData>& tensors);
std::vector<TensorData> load_tensors(const std::filesystem::path& path);

namespace le {

void put_u8(std::ostream& out, std::uint8_t v);
void put_u16(std::ostream& out, std::uint16_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_f32(std::ostream& out, float v);
std::uint8_t get_u8(std::istream& in);
std::uint16_t get_u16(std::istream& in);
std::uint32_t get_u32(std::istream& in);
float get_f32(std::istream& in);

}  // namespace le

}  // namespace courtraster
