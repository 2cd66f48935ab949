#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sentpool/numkit.hpp"

namespace sentpool {

// Flat binary container, all integers little-endian:
//
//   magic     8 bytes  "SPCKPT\0\0"
//   version   u32      1
//   meta_len  u32      length of the UTF-8 metadata blob (JSON by convention)
//   meta      meta_len bytes
//   count     u32      number of tensors
//   count x { name_len u32, name bytes, rows u64, cols u64,
//             rows*cols IEEE-754 float64 values, row-major }
//
// Values are stored bit-exactly, so a save/load round trip is lossless.
inline constexpr char kCheckpointMagic[8] = {'S', 'P', 'C', 'K', 'P', 'T', '\0', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    Matrix value;

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
    std::string metadata;
    std::vector<NamedTensor> tensors;

    // Throws ContractViolation if absent.
    const Matrix& at(std::string_view name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// ParseError (byte offset) on a bad magic, unknown version or truncation.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace sentpool
