#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace dira {

/// Shared on-disk container for .dira checkpoints and .dirf Fisher files:
/// magic, u16 version, canonical-text metadata, a named-tensor table and a
/// little-endian float32 payload. Fixed endianness regardless of host.
struct Container {
    static constexpr uint16_t kVersion = 1;

    struct Entry {
        std::string name;
        Shape shape;
        std::vector<float> data;
    };

    std::array<char, 4> magic{};
    std::string meta;
    std::vector<Entry> entries;
};

void write_container(const std::string& path, const Container& c);

/// Throws FormatError (with the failing byte offset where it is meaningful)
/// on bad magic, version or truncation.
Container read_container(const std::string& path, const char expected_magic[4]);

}  // namespace dira
