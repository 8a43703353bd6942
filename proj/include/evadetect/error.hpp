//
// Copyright 2026 The evadetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef EVADETECT_ERROR_HPP
#define EVADETECT_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evadetect {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: wrong dimensions, out-of-range parameters, unknown ids.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Bad or inconsistent run configuration (CLI flags or config JSON).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Sufficient statistics for which a detector is undefined (zero variance,
/// zero cross-entropy, zero vectors).
class DegenerateStatistics : public Error {
 public:
  using Error::Error;
};

/// A record stream failed schema or referential validation. Carries the
/// position so the CLI can print `file:line: field: message`.
class ValidationError : public Error {
 public:
  ValidationError(std::string file, std::size_t line, std::string field,
                  const std::string& message)
      : Error(format(file, line, field, message)),
        file_(std::move(file)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& file, std::size_t line,
                            const std::string& field,
                            const std::string& message) {
    std::string out = file;
    if (line > 0) out += ":" + std::to_string(line);
    if (!field.empty()) out += ": field '" + field + "'";
    out += ": " + message;
    return out;
  }

  std::string file_;
  std::size_t line_;
  std::string field_;
};

}  // namespace evadetect

#endif  // EVADETECT_ERROR_HPP
