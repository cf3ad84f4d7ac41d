#pragma once

#include <stdexcept>
#include <string>

namespace falldet {

// Every error raised by the library derives from Error so callers can catch
// the whole family at a module boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidTrace : public Error { using Error::Error; };
class MissingPeak : public Error { using Error::Error; };
class LengthError : public Error { using Error::Error; };
class InsufficientData : public Error { using Error::Error; };
class InvalidK : public Error { using Error::Error; };
class InvalidNu : public Error { using Error::Error; };
class InvalidArgument : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class DegenerateLabels : public Error { using Error::Error; };

class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Raised by run_experiment when an outer fold fails; carries the fold index.
class ExperimentError : public Error {
 public:
  ExperimentError(std::size_t fold, const std::string& what)
      : Error("fold " + std::to_string(fold) + ": " + what), fold_(fold) {}

  std::size_t fold() const noexcept { return fold_; }

 private:
  std::size_t fold_;
};

}  // namespace falldet
