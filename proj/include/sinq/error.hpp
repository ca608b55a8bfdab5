// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sinq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An axis is too short for the requested statistic.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// A value does not fit the target encoding (e.g. a code >= 2^bits).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Malformed container, artifact or quantized matrix.
class FormatError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sinq
