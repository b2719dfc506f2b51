#pragma once

#include <stdexcept>
#include <string>

namespace erspud {

// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class NotSpdError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

// Raised when a pipeline cannot produce n independent rows.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::size_t found)
      : Error(what), found_(found) {}
  std::size_t found() const { return found_; }

 private:
  std::size_t found_;
};

class ReconstructionError : public Error {
 public:
  using Error::Error;
};

class DataGenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace erspud
