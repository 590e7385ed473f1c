// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/error.hpp"
#include "persistkit/hash.hpp"
#include "persistkit/types.hpp"

namespace persistkit {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kCreation: return "creation error";
    case Errc::kOpen: return "open error";
    case Errc::kFault: return "fault";
    case Errc::kOutOfSpace: return "out of space";
    case Errc::kUnsupported: return "unsupported operation";
    case Errc::kNotInitialized: return "not initialized";
    case Errc::kAlreadyInitialized: return "already initialized";
    case Errc::kCorruption: return "corruption";
    case Errc::kDuplicateKey: return "duplicate key";
    case Errc::kNotFound: return "not found";
    case Errc::kInvalidKey: return "invalid key";
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kVerification: return "verification failure";
  }
  return "error";
}

std::string_view mode_name(Mode mode) noexcept {
  switch (mode) {
    case Mode::kFullyPersistent: return "full";
    case Mode::kPartlyDirect: return "partly";
    case Mode::kPartlyCheckpoint: return "partly-ckpt";
  }
  return "?";
}

std::string_view structure_name(Structure s) noexcept {
  switch (s) {
    case Structure::kList: return "list";
    case Structure::kTree: return "tree";
    case Structure::kMap: return "map";
  }
  return "?";
}

std::string_view backend_name(Backend b) noexcept {
  return b == Backend::kFileBacked ? "file" : "sim";
}

std::string_view bug_name(VolatileBug bug) noexcept {
  switch (bug) {
    case VolatileBug::kSelfLoopNext: return "SelfLoopNext";
    case VolatileBug::kScrambledPrev: return "ScrambledPrev";
    case VolatileBug::kWrongHashCache: return "WrongHashCache";
    case VolatileBug::kDanglingTail: return "DanglingTail";
  }
  return "?";
}

Payload56 make_payload56(std::int64_t seed_word) noexcept {
  Payload56 p;
  p.words[0] = seed_word;
  for (std::size_t i = 1; i < p.words.size(); ++i) {
    p.words[i] = static_cast<std::int64_t>(mix64(static_cast<std::uint64_t>(seed_word) + i));
  }
  return p;
}

Payload64 make_payload64(std::int64_t seed_word) noexcept {
  Payload64 p;
  p.words[0] = seed_word;
  for (std::size_t i = 1; i < p.words.size(); ++i) {
    p.words[i] = static_cast<std::int64_t>(mix64(static_cast<std::uint64_t>(seed_word) + i));
  }
  return p;
}

}  // namespace persistkit
