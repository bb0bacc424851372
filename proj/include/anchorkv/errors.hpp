// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace anchorkv {

/// Root of every exception thrown by the library. `exit_code()` maps the
/// failure onto the CLI convention: 1 for bad input, 2 for numeric failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

/// Raised when a KV policy is driven out of order or without the feedback it
/// needs.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Token sequence already carries the anchor token before planting.
class ContaminationError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class ConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace anchorkv
