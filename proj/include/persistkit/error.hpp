// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace persistkit {

enum class Errc {
  kCreation,
  kOpen,
  kFault,
  kOutOfSpace,
  kUnsupported,
  kNotInitialized,
  kAlreadyInitialized,
  kCorruption,
  kDuplicateKey,
  kNotFound,
  kInvalidKey,
  kInvalidArgument,
  kVerification,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Thrown by a region when an armed crash trigger fires. Deliberately not an
/// Error: structure code must never swallow it.
struct CrashSignal {
  std::uint64_t fence_index;
  std::uint64_t flush_index;
};

}  // namespace persistkit
