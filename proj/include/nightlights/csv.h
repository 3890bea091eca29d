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

// Line-oriented text I/O shared by the CSV formats. Paths ending in ".gz"
// are transparently gzip-compressed.

#ifndef NIGHTLIGHTS_CSV_H_
#define NIGHTLIGHTS_CSV_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace nightlights {

class LineReader {
 public:
  // Throws MissingInputError if the file cannot be opened.
  explicit LineReader(const std::string& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  // Reads the next line without its terminator ("\n" or "\r\n").
  bool Next(std::string* line);
  // 1-based number of the line last returned by Next().
  std::size_t line_number() const { return line_number_; }
  const std::string& path() const { return path_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
  std::size_t line_number_ = 0;
};

class TextWriter {
 public:
  // Throws Error if the file cannot be created.
  explicit TextWriter(const std::string& path);
  ~TextWriter();
  TextWriter(const TextWriter&) = delete;
  TextWriter& operator=(const TextWriter&) = delete;

  void Write(std::string_view text);
  void WriteLine(std::string_view text);
  // Flushes and closes; throws Error on I/O failure.
  void Close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
};

bool EndsWith(std::string_view s, std::string_view suffix);

// Splits on commas. Fields are not quoted in any format this library writes.
std::vector<std::string_view> SplitFields(std::string_view line,
                                          char sep = ',');
std::string_view Trim(std::string_view s);

// Shortest decimal form that round-trips to the same double.
std::string FormatDouble(double v);

// Strict parsers; throw FormatError naming source and line.
double ParseDouble(std::string_view text, const std::string& source,
                   std::size_t line);
int64_t ParseInt(std::string_view text, const std::string& source,
                 std::size_t line);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_CSV_H_
