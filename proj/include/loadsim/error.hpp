#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loadsim {

// Every error the library raises derives from Error so the CLI can map
// families onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidWorkload : public Error {
 public:
  using Error::Error;
};

class PlatformError : public Error {
 public:
  using Error::Error;
};

// Raised when a policy breaks the job accounting rules (double assignment,
// unknown job, deadlock). Fail fast: a run that trips this has no meaning.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ProfileError : public Error {
 public:
  using Error::Error;
};

// Agents disagreed, or a mandatory measurement was not shared.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class InvalidInstance : public Error {
 public:
  using Error::Error;
};

class OracleTooLarge : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace loadsim
