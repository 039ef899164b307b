// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Invalid configuration, parameters or preconditions. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unusable input data. Maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text with no classifiable content (empty after whitespace stripping).
class UnclassifiableError : public DataError {
 public:
  using DataError::DataError;
};

// Document produced no shingles, so it has no MinHash signature.
class UnsignableError : public DataError {
 public:
  using DataError::DataError;
};

// BPE training stopped before reaching the requested vocabulary size.
class VocabUnreachableError : public DataError {
 public:
  VocabUnreachableError(std::size_t requested, std::size_t achieved)
      : DataError("vocab unreachable: requested " + std::to_string(requested) +
                  " tokens, achieved " + std::to_string(achieved)),
        requested_(requested),
        achieved_(achieved) {}

  std::size_t requested() const noexcept { return requested_; }
  std::size_t achieved() const noexcept { return achieved_; }

 private:
  std::size_t requested_;
  std::size_t achieved_;
};

// SFT sample with no trainable (assistant) tokens left.
class UntrainableSampleError : public DataError {
 public:
  using DataError::DataError;
};

// Argument outside the mathematical domain of a metric.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace forge
