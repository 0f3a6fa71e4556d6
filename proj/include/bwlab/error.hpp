#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bwlab {

/// An input tensor did not match the declared signature.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(std::string tensor, const std::string& what)
      : std::invalid_argument(what), tensor_(std::move(tensor)) {}
  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

/// Operation invoked in the wrong order (e.g. backward before forward).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A non-finite value showed up where it is not allowed. `name` is the
/// parameter or loss involved; `step` is the training step when known.
class NumericalError : public std::runtime_error {
 public:
  static constexpr std::size_t kNoStep = static_cast<std::size_t>(-1);

  NumericalError(std::string name, const std::string& what, std::size_t step = kNoStep)
      : std::runtime_error(what), name_(std::move(name)), step_(step) {}
  const std::string& name() const noexcept { return name_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::string name_;
  std::size_t step_;
};

/// A mass vector has a zero or negative entry, so the two measures do not
/// share support and the density ratio is undefined.
class SupportError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed experiment configuration. `line` is 0 when the problem is not
/// tied to a specific line (e.g. a command-line override).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, std::string key, const std::string& what)
      : std::runtime_error(what), line_(line), key_(std::move(key)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

}  // namespace bwlab
