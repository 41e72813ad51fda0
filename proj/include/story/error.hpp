// Exception hierarchy shared by every module.
//
// Callers that need to map failures onto wire-level codes (the HTTP layer,
// the CLI) switch on the concrete type; everything else can catch
// story::Error.

#pragma once

#include <stdexcept>
#include <string>

namespace story {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown node id, session, experiment or cell.
class NotFound : public Error {
 public:
  using Error::Error;
};

/// An edge with the same (src, dst, kind) triple already exists.
class Duplicate : public Error {
 public:
  using Error::Error;
};

/// A graph would violate referential integrity or a structural invariant.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Malformed document. `location` is a JSON pointer or a byte offset.
class ParseError : public Error {
 public:
  ParseError(std::string location, const std::string& message)
      : Error(location.empty() ? message : location + ": " + message),
        location_(std::move(location)) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

class UnknownDimension : public Error {
 public:
  using Error::Error;
};

/// The requested archive cell holds no feasible elite.
class NoElite : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace story
