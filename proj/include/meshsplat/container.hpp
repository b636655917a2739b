// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Sectioned little-endian binary container shared by every asset file.
//
//   offset 0   char[8]  magic
//   offset 8   u32      version
//   offset 12  u32      section count
//   then per section:
//              char[24] name (NUL padded)
//              u32      dtype (0 f32, 1 i32, 2 u32, 3 u8, 4 u16)
//              u32      rows
//              u32      cols
//              u32      reserved (0)
//              u64      payload byte length (= rows * cols * sizeof(dtype))
//              payload
#pragma once

#include "meshsplat/common.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace meshsplat {

enum class DType : std::uint32_t { f32 = 0, i32 = 1, u32 = 2, u8 = 3, u16 = 4 };

std::size_t dtype_size(DType t);

using Magic = std::array<char, 8>;

constexpr std::size_t kSectionNameBytes = 24;

struct Section {
    std::string name;
    DType dtype = DType::f32;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint64_t header_offset = 0;
    std::uint64_t payload_offset = 0;
    std::string_view payload;
};

class ContainerWriter {
public:
    ContainerWriter(const Magic& magic, std::uint32_t version);

    void add_f32(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                 std::span<const float> values);
    void add_i32(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                 std::span<const std::int32_t> values);
    void add_u32(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                 std::span<const std::uint32_t> values);
    void add_u16(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                 std::span<const std::uint16_t> values);
    void add_u8(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                std::span<const std::uint8_t> values);
    void add_scalar_u32(std::string_view name, std::uint32_t value) {
        add_u32(name, 1, 1, std::span<const std::uint32_t>(&value, 1));
    }

    std::string finish() const;

private:
    void add_raw(std::string_view name, DType dtype, std::uint32_t rows, std::uint32_t cols,
                 const void* data, std::size_t count);

    Magic magic_;
    std::uint32_t version_;
    std::uint32_t count_ = 0;
    std::string body_;
};

class ContainerReader {
public:
    /// Parses the section table. Throws FormatError on magic/version
    /// mismatch or truncation.
    ContainerReader(std::string bytes, const Magic& magic, std::uint32_t version);

    bool has(std::string_view name) const;
    const Section& section(std::string_view name) const;
    std::uint64_t size() const { return bytes_.size(); }

    // Typed accessors check dtype and, when given (nonzero), the expected shape.
    std::vector<float> f32(std::string_view name, std::uint32_t rows = 0, std::uint32_t cols = 0) const;
    std::vector<std::int32_t> i32(std::string_view name, std::uint32_t rows = 0, std::uint32_t cols = 0) const;
    std::vector<std::uint32_t> u32(std::string_view name, std::uint32_t rows = 0, std::uint32_t cols = 0) const;
    std::vector<std::uint16_t> u16(std::string_view name, std::uint32_t rows = 0, std::uint32_t cols = 0) const;
    std::vector<std::uint8_t> u8(std::string_view name, std::uint32_t rows = 0, std::uint32_t cols = 0) const;
    std::uint32_t scalar_u32(std::string_view name) const;

private:
    const Section& checked(std::string_view name, DType dtype, std::uint32_t rows,
                           std::uint32_t cols) const;

    std::string bytes_;
    std::vector<Section> sections_;
};

}  // namespace meshsplat
