// Copyright 2026 The Nightlights Authors.
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

#ifndef NIGHTLIGHTS_ERRORS_H_
#define NIGHTLIGHTS_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nightlights {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// A file could not be parsed. Carries the 1-based line number when known
// (0 for binary formats).
class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line,
              const std::string& what)
      : Error(line > 0 ? source + ":" + std::to_string(line) + ": " + what
                       : source + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A required input file does not exist or cannot be opened.
class MissingInputError : public Error {
 public:
  explicit MissingInputError(const std::string& path)
      : Error("missing input: " + path), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// A numerical routine could not produce a result (singular system, etc.).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace nightlights

#endif  // NIGHTLIGHTS_ERRORS_H_
