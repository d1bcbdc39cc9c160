#ifndef FADER_ERROR_H_
#define FADER_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fader {

// Base class for every error raised by the toolkit. The CLI maps each
// subclass to its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller passed an argument violating an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A file or stream could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Structured input that does not follow its documented format.
class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line,
              const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Invalid configuration, detected before any work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage needs an artifact that an earlier stage should produce.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace fader

#endif  // FADER_ERROR_H_
