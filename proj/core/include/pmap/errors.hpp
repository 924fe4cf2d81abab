#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmap {

// Base for all library errors. Subclasses map 1:1 onto the failure
// categories surfaced by the CLI (dimension, numeric, config, format,
// training, oracle).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "dimension"; }
};

class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

// Dataset/checkpoint format violations carry the byte offset at which
// decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  const char* kind() const noexcept override { return "format"; }
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class TrainingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "training"; }
};

// Requested a latent-derived quantity from an episode that carries no
// latents (e.g. an imported dataset).
class OracleError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "oracle"; }
};

}  // namespace pmap
