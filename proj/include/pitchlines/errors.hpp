#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pitchlines {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class InvalidParam : public Error {
 public:
  using Error::Error;
};

class EmptyChain : public Error {
 public:
  EmptyChain() : Error("no chain pixel survives border clipping") {}
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class UnlabeledRecord : public Error {
 public:
  explicit UnlabeledRecord(std::size_t index)
      : Error("record " + std::to_string(index) + " has no human_label"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class NoPositives : public Error {
 public:
  NoPositives()
      : Error("training set has no positive labels; TP - FP is maximized by rejecting everything") {}
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// Malformed record or config file. `line()` is 1-based, 0 when not line-bound.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace pitchlines
