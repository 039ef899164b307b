// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "forge/error.hpp"

// Little-endian primitives for the versioned binary formats.
namespace forge::binio {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw DataError("truncated binary file");
  return value;
}

inline void put_string(std::ostream& out, std::string_view s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, std::uint32_t max_len = 1u << 20) {
  const auto n = get<std::uint32_t>(in);
  if (n > max_len) throw DataError("corrupt binary file: string length " + std::to_string(n));
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw DataError("truncated binary file");
  return s;
}

inline void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic)
    throw DataError("not a " + std::string(what) + " file");
}

}  // namespace forge::binio
