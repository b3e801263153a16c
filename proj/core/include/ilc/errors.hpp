#pragma once

#include <stdexcept>
#include <string>

namespace ilc {

// Base for everything the library throws on purpose. The CLI maps
// subclasses onto exit codes, so keep the hierarchy flat and explicit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidParam : public Error {
 public:
  explicit InvalidParam(const std::string& msg) : Error(msg) {}
};

class InvalidSpec : public Error {
 public:
  explicit InvalidSpec(const std::string& msg) : Error(msg) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& msg) : Error(msg) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

class DegenerateReference : public Error {
 public:
  explicit DegenerateReference(const std::string& msg) : Error(msg) {}
};

class DegenerateMeans : public Error {
 public:
  explicit DegenerateMeans(const std::string& msg) : Error(msg) {}
};

class IOError : public Error {
 public:
  explicit IOError(const std::string& msg) : Error(msg) {}
};

class FormatError : public IOError {
 public:
  explicit FormatError(const std::string& msg) : IOError(msg) {}
};

class ChecksumError : public IOError {
 public:
  explicit ChecksumError(const std::string& msg) : IOError(msg) {}
};

class LayerNotFound : public Error {
 public:
  explicit LayerNotFound(const std::string& msg) : Error(msg) {}
};

class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(const std::string& msg) : Error(msg) {}
};

class FrozenModel : public Error {
 public:
  explicit FrozenModel(const std::string& msg) : Error(msg) {}
};

class EmptyGroup : public Error {
 public:
  explicit EmptyGroup(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field_path, const std::string& msg)
      : Error(field_path + ": " + msg), field(field_path) {}
  std::string field;
};

}  // namespace ilc
