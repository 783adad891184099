#pragma once

#include <stdexcept>
#include <string>

namespace rcov {

/// Network-level failure (connect, timeout, 5xx). Retried by the gateway.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Endpoint answered, but not with something usable (4xx, bad JSON, no
/// choices). Never retried.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The scripted backend has no response for a request.
class ScriptMissError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structured model output could not be read; carries the raw reply.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string raw)
      : std::runtime_error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// Image file could not be read or decoded.
class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration value or file; the message names the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rcov
