// Copyright 2026 The covrnn Authors
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

#ifndef COVRNN_ERRORS_H_
#define COVRNN_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace covrnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}

  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class CycleError : public Error {
 public:
  explicit CycleError(const std::string& path)
      : Error("cycle in member graph: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class UnknownReference : public Error {
 public:
  explicit UnknownReference(const std::string& name)
      : Error("unknown reference: " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class InvalidSize : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class MissingMetric : public Error {
 public:
  using Error::Error;
};

class BinUniverseMismatch : public Error {
 public:
  using Error::Error;
};

class EmptySet : public Error {
 public:
  using Error::Error;
};

class InvalidProgram : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MissingLog : public Error {
 public:
  using Error::Error;
};

}  // namespace covrnn

#endif  // COVRNN_ERRORS_H_
