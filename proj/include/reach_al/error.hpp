#pragma once

#include <stdexcept>
#include <string>

namespace reach_al {

/// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Detection centre lies outside the image; the detection is discarded.
class BoundaryError : public Error {
 public:
  using Error::Error;
};

/// No usable depth reading for a detection.
class NoDepthError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters, config keys or split sizes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing or malformed detection / sample file.
class IngestError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Caller passed inputs that violate an operation's contract.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace reach_al
