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

#include "nightlights/csv.h"

#include <zlib.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "nightlights/errors.h"

namespace nightlights {

struct LineReader::Impl {
  gzFile file = nullptr;
  std::array<char, 1 << 16> buf;
};

LineReader::LineReader(const std::string& path)
    : impl_(std::make_unique<Impl>()), path_(path) {
  // gzopen reads uncompressed files transparently as well.
  impl_->file = gzopen(path.c_str(), "rb");
  if (impl_->file == nullptr) throw MissingInputError(path);
  gzbuffer(impl_->file, 1 << 17);
}

LineReader::~LineReader() {
  if (impl_->file != nullptr) gzclose(impl_->file);
}

bool LineReader::Next(std::string* line) {
  line->clear();
  bool got_any = false;
  while (true) {
    char* r = gzgets(impl_->file, impl_->buf.data(),
                     static_cast<int>(impl_->buf.size()));
    if (r == nullptr) {
      int err = 0;
      const char* msg = gzerror(impl_->file, &err);
      if (err != Z_OK && err != Z_STREAM_END) {
        throw FormatError(path_, line_number_ + 1, msg);
      }
      break;
    }
    got_any = true;
    line->append(r);
    if (!line->empty() && line->back() == '\n') break;
  }
  if (!got_any) return false;
  if (!line->empty() && line->back() == '\n') line->pop_back();
  if (!line->empty() && line->back() == '\r') line->pop_back();
  ++line_number_;
  return true;
}

struct TextWriter::Impl {
  gzFile gz = nullptr;
  std::FILE* plain = nullptr;
};

TextWriter::TextWriter(const std::string& path)
    : impl_(std::make_unique<Impl>()), path_(path) {
  if (EndsWith(path, ".gz")) {
    impl_->gz = gzopen(path.c_str(), "wb6");
    if (impl_->gz == nullptr) throw Error("cannot create " + path);
  } else {
    impl_->plain = std::fopen(path.c_str(), "wb");
    if (impl_->plain == nullptr) throw Error("cannot create " + path);
  }
}

TextWriter::~TextWriter() {
  if (impl_->gz != nullptr) gzclose(impl_->gz);
  if (impl_->plain != nullptr) std::fclose(impl_->plain);
}

void TextWriter::Write(std::string_view text) {
  if (text.empty()) return;
  bool ok;
  if (impl_->gz != nullptr) {
    ok = gzwrite(impl_->gz, text.data(), static_cast<unsigned>(text.size())) ==
         static_cast<int>(text.size());
  } else if (impl_->plain != nullptr) {
    ok = std::fwrite(text.data(), 1, text.size(), impl_->plain) == text.size();
  } else {
    throw Error("write after close: " + path_);
  }
  if (!ok) throw Error("write failed: " + path_);
}

void TextWriter::WriteLine(std::string_view text) {
  Write(text);
  Write("\n");
}

void TextWriter::Close() {
  int rc = 0;
  if (impl_->gz != nullptr) {
    rc = gzclose(impl_->gz) == Z_OK ? 0 : -1;
    impl_->gz = nullptr;
  }
  if (impl_->plain != nullptr) {
    rc = std::fclose(impl_->plain);
    impl_->plain = nullptr;
  }
  if (rc != 0) throw Error("close failed: " + path_);
}

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::string_view> SplitFields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double ParseDouble(std::string_view text, const std::string& source,
                   std::size_t line) {
  text = Trim(text);
  if (text == "nan" || text == "NaN") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      text.empty()) {
    throw FormatError(source, line,
                      "expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

int64_t ParseInt(std::string_view text, const std::string& source,
                 std::size_t line) {
  text = Trim(text);
  int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      text.empty()) {
    throw FormatError(source, line,
                      "expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace nightlights
