// Copyright 2026 The sdqrng Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace sdqrng {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Mismatched dimensions between cooperating objects.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Problem too large to enumerate.
class SizeError : public Error {
  public:
    using Error::Error;
};

/// Numerical construction failed (e.g. indefinite Gram matrix).
class ConstructionError : public Error {
  public:
    using Error::Error;
};

/// Statistics cannot be formed from the supplied data.
class EstimationError : public Error {
  public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
  public:
    ParseError(const std::string &what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Well-formed input violating a format rule (ordering, version).
class FormatError : public Error {
  public:
    using Error::Error;
};

} // namespace sdqrng
