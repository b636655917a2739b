// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/container.hpp"

#include <bit>
#include <cstring>

static_assert(std::endian::native == std::endian::little,
              "container encoding assumes a little-endian host");

namespace meshsplat {

std::size_t dtype_size(DType t) {
    switch (t) {
        case DType::f32:
        case DType::i32:
        case DType::u32:
            return 4;
        case DType::u16:
            return 2;
        case DType::u8:
            return 1;
    }
    return 0;
}

namespace {

const char* dtype_name(DType t) {
    switch (t) {
        case DType::f32: return "f32";
        case DType::i32: return "i32";
        case DType::u32: return "u32";
        case DType::u16: return "u16";
        case DType::u8: return "u8";
    }
    return "?";
}

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::uint64_t offset) {
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    return value;
}

constexpr std::uint64_t kFileHeader = 16;
constexpr std::uint64_t kSectionHeader = kSectionNameBytes + 4 * 4 + 8;

}  // namespace

ContainerWriter::ContainerWriter(const Magic& magic, std::uint32_t version)
    : magic_(magic), version_(version) {}

void ContainerWriter::add_raw(std::string_view name, DType dtype, std::uint32_t rows,
                              std::uint32_t cols, const void* data, std::size_t count) {
    if (name.size() >= kSectionNameBytes) {
        throw Error(ErrorCode::invalid_argument, "section name too long: " + std::string(name));
    }
    if (std::uint64_t(rows) * cols != count) {
        throw DimensionError("section '" + std::string(name) + "' shape " + std::to_string(rows) +
                             "x" + std::to_string(cols) + " does not match " +
                             std::to_string(count) + " values");
    }
    char padded[kSectionNameBytes] = {};
    std::memcpy(padded, name.data(), name.size());
    body_.append(padded, kSectionNameBytes);
    put<std::uint32_t>(body_, std::uint32_t(dtype));
    put<std::uint32_t>(body_, rows);
    put<std::uint32_t>(body_, cols);
    put<std::uint32_t>(body_, 0);
    const std::uint64_t nbytes = std::uint64_t(count) * dtype_size(dtype);
    put<std::uint64_t>(body_, nbytes);
    body_.append(static_cast<const char*>(data), nbytes);
    ++count_;
}

void ContainerWriter::add_f32(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                              std::span<const float> values) {
    add_raw(name, DType::f32, rows, cols, values.data(), values.size());
}
void ContainerWriter::add_i32(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                              std::span<const std::int32_t> values) {
    add_raw(name, DType::i32, rows, cols, values.data(), values.size());
}
void ContainerWriter::add_u32(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                              std::span<const std::uint32_t> values) {
    add_raw(name, DType::u32, rows, cols, values.data(), values.size());
}
void ContainerWriter::add_u16(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                              std::span<const std::uint16_t> values) {
    add_raw(name, DType::u16, rows, cols, values.data(), values.size());
}
void ContainerWriter::add_u8(std::string_view name, std::uint32_t rows, std::uint32_t cols,
                             std::span<const std::uint8_t> values) {
    add_raw(name, DType::u8, rows, cols, values.data(), values.size());
}

std::string ContainerWriter::finish() const {
    std::string out;
    out.reserve(kFileHeader + body_.size());
    out.append(magic_.data(), magic_.size());
    put<std::uint32_t>(out, version_);
    put<std::uint32_t>(out, count_);
    out += body_;
    return out;
}

ContainerReader::ContainerReader(std::string bytes, const Magic& magic, std::uint32_t version)
    : bytes_(std::move(bytes)) {
    if (bytes_.size() < kFileHeader) {
        throw FormatError("truncated file header", bytes_.size());
    }
    if (std::memcmp(bytes_.data(), magic.data(), magic.size()) != 0) {
        throw FormatError("magic number mismatch, expected '" +
                              std::string(magic.data(), strnlen(magic.data(), magic.size())) + "'",
                          0);
    }
    const auto file_version = get<std::uint32_t>(bytes_, 8);
    if (file_version != version) {
        throw FormatError("unsupported version " + std::to_string(file_version), 8);
    }
    const auto count = get<std::uint32_t>(bytes_, 12);
    std::uint64_t offset = kFileHeader;
    sections_.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (offset + kSectionHeader > bytes_.size()) {
            throw FormatError("truncated header of section #" + std::to_string(i), offset);
        }
        Section s;
        s.header_offset = offset;
        const char* name = bytes_.data() + offset;
        s.name.assign(name, strnlen(name, kSectionNameBytes));
        const auto raw_dtype = get<std::uint32_t>(bytes_, offset + kSectionNameBytes);
        if (raw_dtype > std::uint32_t(DType::u16)) {
            throw FormatError("unknown dtype " + std::to_string(raw_dtype), offset + kSectionNameBytes,
                              s.name);
        }
        s.dtype = DType(raw_dtype);
        s.rows = get<std::uint32_t>(bytes_, offset + kSectionNameBytes + 4);
        s.cols = get<std::uint32_t>(bytes_, offset + kSectionNameBytes + 8);
        const auto nbytes = get<std::uint64_t>(bytes_, offset + kSectionNameBytes + 16);
        if (nbytes != std::uint64_t(s.rows) * s.cols * dtype_size(s.dtype)) {
            throw FormatError("payload length disagrees with shape", offset + kSectionNameBytes + 16,
                              s.name);
        }
        s.payload_offset = offset + kSectionHeader;
        if (s.payload_offset + nbytes > bytes_.size()) {
            throw FormatError("truncated payload: section '" + s.name + "' needs " +
                                  std::to_string(nbytes) + " bytes, " +
                                  std::to_string(bytes_.size() - s.payload_offset) + " available",
                              s.payload_offset, s.name);
        }
        s.payload = std::string_view(bytes_.data() + s.payload_offset, nbytes);
        offset = s.payload_offset + nbytes;
        sections_.push_back(std::move(s));
    }
}

bool ContainerReader::has(std::string_view name) const {
    for (const auto& s : sections_) {
        if (s.name == name) {
            return true;
        }
    }
    return false;
}

const Section& ContainerReader::section(std::string_view name) const {
    for (const auto& s : sections_) {
        if (s.name == name) {
            return s;
        }
    }
    throw FormatError("missing section '" + std::string(name) + "' (file truncated or incomplete)",
                      bytes_.size(), std::string(name));
}

const Section& ContainerReader::checked(std::string_view name, DType dtype, std::uint32_t rows,
                                        std::uint32_t cols) const {
    const Section& s = section(name);
    if (s.dtype != dtype) {
        throw FormatError(std::string("dtype mismatch: expected ") + dtype_name(dtype) + ", found " +
                              dtype_name(s.dtype),
                          s.header_offset + kSectionNameBytes, s.name);
    }
    if ((rows != 0 && s.rows != rows) || (cols != 0 && s.cols != cols)) {
        throw FormatError("dimension mismatch: expected " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", found " + std::to_string(s.rows) + "x" +
                              std::to_string(s.cols),
                          s.header_offset + kSectionNameBytes + 4, s.name);
    }
    return s;
}

namespace {
template <typename T>
std::vector<T> copy_payload(const Section& s) {
    std::vector<T> out(s.payload.size() / sizeof(T));
    if (!out.empty()) {
        std::memcpy(out.data(), s.payload.data(), s.payload.size());
    }
    return out;
}
}  // namespace

std::vector<float> ContainerReader::f32(std::string_view name, std::uint32_t rows, std::uint32_t cols) const {
    return copy_payload<float>(checked(name, DType::f32, rows, cols));
}
std::vector<std::int32_t> ContainerReader::i32(std::string_view name, std::uint32_t rows, std::uint32_t cols) const {
    return copy_payload<std::int32_t>(checked(name, DType::i32, rows, cols));
}
std::vector<std::uint32_t> ContainerReader::u32(std::string_view name, std::uint32_t rows, std::uint32_t cols) const {
    return copy_payload<std::uint32_t>(checked(name, DType::u32, rows, cols));
}
std::vector<std::uint16_t> ContainerReader::u16(std::string_view name, std::uint32_t rows, std::uint32_t cols) const {
    return copy_payload<std::uint16_t>(checked(name, DType::u16, rows, cols));
}
std::vector<std::uint8_t> ContainerReader::u8(std::string_view name, std::uint32_t rows, std::uint32_t cols) const {
    return copy_payload<std::uint8_t>(checked(name, DType::u8, rows, cols));
}
std::uint32_t ContainerReader::scalar_u32(std::string_view name) const {
    return u32(name, 1, 1)[0];
}

}  // namespace meshsplat
