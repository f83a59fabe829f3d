#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "worldguide/error.h"

namespace worldguide::io::internal {

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path,
                    const std::vector<std::uint8_t>& bytes);

[[noreturn]] inline void FormatFail(const std::filesystem::path& path,
                                    std::size_t offset,
                                    const std::string& message) {
  Fail(ErrorCode::kFormatError, path.string() + " at byte " +
                                    std::to_string(offset) + ": " + message);
}

inline void AppendBytes(std::vector<std::uint8_t>& out, const void* data,
                        std::size_t size) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  out.insert(out.end(), p, p + size);
}

template <typename T>
void AppendLE(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::endian::native == std::endian::little);
  AppendBytes(out, &value, sizeof(T));
}

}  // namespace worldguide::io::internal
